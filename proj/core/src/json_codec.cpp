#include "json_codec.hpp"

#include <cmath>

#include "asap/error.hpp"

namespace asap::codec {

namespace {

std::vector<double> number_array(const Json& obj, const char* key,
                                 std::size_t n, const std::string& where) {
  const Json& arr = require(obj, key, where);
  if (!arr.is_array() || arr.size() != n) {
    throw ValidationError(where + key + ": expected array of " +
                          std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& v : arr) {
    if (!v.is_number()) {
      throw ValidationError(where + key + ": expected numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

std::optional<std::string> optional_string(const Json& obj, const char* key,
                                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ValidationError(where + key + ": expected string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string line_context(std::size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

Json parse(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(where + "malformed JSON (" + e.what() + ")");
  }
}

const Json& require(const Json& obj, const char* key,
                    const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError(where + "missing field '" + key + "'");
  }
  return *it;
}

std::string require_string(const Json& obj, const char* key,
                           const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_string()) throw ValidationError(where + key + ": expected string");
  return v.get<std::string>();
}

double require_number(const Json& obj, const char* key,
                      const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_number()) throw ValidationError(where + key + ": expected number");
  return v.get<double>();
}

std::int64_t require_integer(const Json& obj, const char* key,
                             const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw ValidationError(where + key + ": expected integer");
  }
  return v.get<std::int64_t>();
}

bool require_bool(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_boolean()) throw ValidationError(where + key + ": expected boolean");
  return v.get<bool>();
}

OrderedJson box_to_json(const Box3D& box, BoxKind kind) {
  OrderedJson j;
  if (box.instance_id) j["instance_id"] = *box.instance_id;
  j["category"] = box.category;
  j["center"] = {box.center.x, box.center.y, box.center.z};
  j["size"] = {box.size.width, box.size.length, box.size.height};
  const auto q = box.rotation.wxyz();
  j["rotation"] = {q[0], q[1], q[2], q[3]};
  j["velocity"] = {box.velocity.x, box.velocity.y};
  if (kind == BoxKind::kDetection) j["score"] = box.score;
  if (box.attribute) j["attribute"] = *box.attribute;
  return j;
}

Box3D box_from_json(const Json& j, BoxKind kind, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + "expected box object");
  Box3D box;
  box.instance_id = optional_string(j, "instance_id", where);
  box.category = require_string(j, "category", where);
  const auto c = number_array(j, "center", 3, where);
  box.center = {c[0], c[1], c[2]};
  const auto s = number_array(j, "size", 3, where);
  box.size = {s[0], s[1], s[2]};
  const auto r = number_array(j, "rotation", 4, where);
  try {
    box.rotation = Quaternion::unit(r[0], r[1], r[2], r[3]);
  } catch (const ValidationError& e) {
    throw ValidationError(where + "rotation: " + e.what());
  }
  const auto v = number_array(j, "velocity", 2, where);
  box.velocity = {v[0], v[1]};
  if (kind == BoxKind::kDetection) {
    box.score = require_number(j, "score", where);
  } else {
    auto it = j.find("score");
    if (it != j.end() && !(it->is_number() && it->get<double>() == 1.0)) {
      throw ValidationError(where + "score: ground truth score must be 1.0");
    }
    box.score = 1.0;
  }
  box.attribute = optional_string(j, "attribute", where);
  validate_box(box, where);
  return box;
}

OrderedJson boxes_to_json(const std::vector<Box3D>& boxes, BoxKind kind) {
  OrderedJson arr = OrderedJson::array();
  for (const auto& b : boxes) arr.push_back(box_to_json(b, kind));
  return arr;
}

std::vector<Box3D> boxes_from_json(const Json& j, BoxKind kind,
                                   const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + "boxes: expected array");
  std::vector<Box3D> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(box_from_json(
        j[i], kind, where + "boxes[" + std::to_string(i) + "]."));
  }
  return out;
}

}  // namespace asap::codec

#include "asap/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "asap/error.hpp"
#include "json_codec.hpp"

namespace asap {

using codec::BoxKind;
using codec::Json;
using codec::OrderedJson;

namespace {

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = codec::line_context(line_no);
    fn(codec::parse(line, where), where);
  }
}

// Tracks the last timestamp per scene to enforce strict ordering.
class SceneOrder {
 public:
  void check(const std::string& scene_id, TimestampUs t,
             const std::string& where) {
    auto [it, inserted] = last_.try_emplace(scene_id, t);
    if (!inserted) {
      if (t <= it->second) throw ValidationError(where + "unsorted scene");
      it->second = t;
    }
  }

 private:
  std::map<std::string, TimestampUs> last_;
};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void check_profile_value(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw ValidationError(std::string("non-positive ") + what);
  }
}

}  // namespace

void validate_box(const Box3D& box, const std::string& context) {
  if (box.category.empty()) {
    throw ValidationError(context + "category: must not be empty");
  }
  if (!box.center.finite()) {
    throw ValidationError(context + "center: must be finite");
  }
  const std::pair<const char*, double> dims[] = {{"width", box.size.width},
                                                 {"length", box.size.length},
                                                 {"height", box.size.height}};
  for (const auto& [name, v] : dims) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw ValidationError(context + "size: " + name + " must be > 0");
    }
  }
  if (!(std::isfinite(box.velocity.x) && std::isfinite(box.velocity.y))) {
    throw ValidationError(context + "velocity: must be finite");
  }
  if (!(std::isfinite(box.score) && box.score >= 0.0 && box.score <= 1.0)) {
    throw ValidationError(context + "score: must be in [0, 1]");
  }
}

std::vector<FrameAnnotations> read_scene_annotations(std::istream& in) {
  std::vector<FrameAnnotations> frames;
  SceneOrder order;
  for_each_line(in, [&](const Json& j, const std::string& where) {
    FrameAnnotations f;
    f.scene_id = codec::require_string(j, "scene_id", where);
    f.timestamp_us = codec::require_integer(j, "timestamp_us", where);
    f.is_keyframe = codec::require_bool(j, "is_keyframe", where);
    f.boxes = codec::boxes_from_json(codec::require(j, "boxes", where),
                                     BoxKind::kGroundTruth, where);
    std::set<std::string> ids;
    for (const auto& b : f.boxes) {
      if (b.instance_id && !ids.insert(*b.instance_id).second) {
        throw ValidationError(where + "duplicate instance_id '" +
                              *b.instance_id + "'");
      }
    }
    order.check(f.scene_id, f.timestamp_us, where);
    frames.push_back(std::move(f));
  });
  return frames;
}

std::vector<FrameAnnotations> load_scene_annotations(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_scene_annotations(in);
}

void write_scene_annotations(std::ostream& out,
                             const std::vector<FrameAnnotations>& frames) {
  for (const auto& f : frames) {
    OrderedJson j;
    j["scene_id"] = f.scene_id;
    j["timestamp_us"] = f.timestamp_us;
    j["is_keyframe"] = f.is_keyframe;
    j["boxes"] = codec::boxes_to_json(f.boxes, BoxKind::kGroundTruth);
    out << j.dump() << '\n';
  }
}

void save_scene_annotations(const std::filesystem::path& path,
                            const std::vector<FrameAnnotations>& frames) {
  std::ostringstream os;
  write_scene_annotations(os, frames);
  write_file(path, os.str());
}

std::vector<FrameDetections> read_detections(std::istream& in) {
  std::vector<FrameDetections> frames;
  SceneOrder order;
  for_each_line(in, [&](const Json& j, const std::string& where) {
    FrameDetections f;
    f.scene_id = codec::require_string(j, "scene_id", where);
    f.source_timestamp_us = codec::require_integer(j, "timestamp_us", where);
    f.boxes = codec::boxes_from_json(codec::require(j, "boxes", where),
                                     BoxKind::kDetection, where);
    order.check(f.scene_id, f.source_timestamp_us, where);
    frames.push_back(std::move(f));
  });
  return frames;
}

std::vector<FrameDetections> load_detections(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_detections(in);
}

void write_detections(std::ostream& out,
                      const std::vector<FrameDetections>& frames) {
  for (const auto& f : frames) {
    OrderedJson j;
    j["scene_id"] = f.scene_id;
    j["timestamp_us"] = f.source_timestamp_us;
    j["boxes"] = codec::boxes_to_json(f.boxes, BoxKind::kDetection);
    out << j.dump() << '\n';
  }
}

void save_detections(const std::filesystem::path& path,
                     const std::vector<FrameDetections>& frames) {
  std::ostringstream os;
  write_detections(os, frames);
  write_file(path, os.str());
}

TemporalDatabase to_temporal_database(
    const std::vector<FrameDetections>& frames) {
  TemporalDatabase db;
  if (!frames.empty()) db.scene_id = frames.front().scene_id;
  for (const auto& f : frames) {
    if (f.scene_id != db.scene_id) {
      throw ValidationError("temporal database mixes scenes");
    }
    if (!db.entries.empty() &&
        f.source_timestamp_us <= db.entries.back().timestamp_us) {
      throw ValidationError("unsorted scene");
    }
    db.entries.push_back({f.source_timestamp_us, f.boxes});
  }
  return db;
}

std::vector<TemporalDatabase> load_temporal_databases(
    const std::filesystem::path& path) {
  std::vector<TemporalDatabase> out;
  for (const auto& scene : split_by_scene(load_detections(path))) {
    out.push_back(to_temporal_database(scene));
  }
  return out;
}

void validate_profile(const RuntimeProfile& profile) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalRuntime>) {
          if (d.samples_ms.empty()) throw ValidationError("empty profile");
          for (double s : d.samples_ms) check_profile_value(s, "runtime sample");
        } else if constexpr (std::is_same_v<T, ConstantRuntime>) {
          check_profile_value(d.ms, "constant runtime");
        } else {
          if (!std::isfinite(d.mu)) {
            throw ValidationError("lognormal mu must be finite");
          }
          if (!std::isfinite(d.sigma) || d.sigma < 0.0) {
            throw ValidationError("lognormal sigma must be >= 0");
          }
        }
      },
      profile.distribution);
  if (!std::isfinite(profile.overhead_ms) || profile.overhead_ms < 0.0) {
    throw ValidationError("overhead_ms must be >= 0");
  }
  if (!std::isfinite(profile.contention_factor) ||
      profile.contention_factor < 1.0) {
    throw ValidationError("contention factor must be >= 1");
  }
}

static RuntimeProfile parse_runtime_profile_impl(const std::string& json_text) {
  const std::string where = "runtime profile: ";
  const Json j = codec::parse(json_text, where);
  if (!j.is_object()) throw ValidationError(where + "expected object");

  RuntimeProfile p;
  p.name = j.value("name", std::string("profile"));
  if (j.contains("samples_ms")) {
    const Json& arr = j.at("samples_ms");
    if (!arr.is_array()) {
      throw ValidationError(where + "samples_ms: expected array");
    }
    EmpiricalRuntime e;
    for (const auto& v : arr) {
      if (!v.is_number()) {
        throw ValidationError(where + "samples_ms: expected numbers");
      }
      e.samples_ms.push_back(v.get<double>());
    }
    p.distribution = std::move(e);
  } else if (j.contains("distribution")) {
    const std::string kind = codec::require_string(j, "distribution", where);
    const Json& params = codec::require(j, "params", where);
    if (kind == "constant") {
      p.distribution =
          ConstantRuntime{codec::require_number(params, "ms", where + "params.")};
    } else if (kind == "lognormal") {
      p.distribution = LognormalRuntime{
          codec::require_number(params, "mu", where + "params."),
          codec::require_number(params, "sigma", where + "params.")};
    } else {
      throw ValidationError(where + "unknown distribution '" + kind + "'");
    }
  } else {
    throw ValidationError(where + "needs samples_ms or distribution");
  }
  if (j.contains("overhead_ms")) {
    p.overhead_ms = codec::require_number(j, "overhead_ms", where);
  }
  if (j.contains("contention_factor")) {
    p.contention_factor = codec::require_number(j, "contention_factor", where);
  }
  validate_profile(p);
  return p;
}

RuntimeProfile parse_runtime_profile(const std::string& json_text) {
  return codec::guarded("runtime profile: ", [&] { return parse_runtime_profile_impl(json_text); });
}

RuntimeProfile load_runtime_profile(const std::filesystem::path& path) {
  return parse_runtime_profile(read_file(path));
}

std::string runtime_profile_json(const RuntimeProfile& profile) {
  OrderedJson j;
  j["name"] = profile.name;
  std::visit(
      [&j](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalRuntime>) {
          j["samples_ms"] = d.samples_ms;
        } else if constexpr (std::is_same_v<T, ConstantRuntime>) {
          j["distribution"] = "constant";
          j["params"] = {{"ms", d.ms}};
        } else {
          j["distribution"] = "lognormal";
          j["params"] = {{"mu", d.mu}, {"sigma", d.sigma}};
        }
      },
      profile.distribution);
  j["overhead_ms"] = profile.overhead_ms;
  j["contention_factor"] = profile.contention_factor;
  return j.dump(2) + "\n";
}

double min_runtime_ms(const RuntimeProfile& profile) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalRuntime>) {
          return *std::min_element(d.samples_ms.begin(), d.samples_ms.end());
        } else if constexpr (std::is_same_v<T, ConstantRuntime>) {
          return d.ms;
        } else {
          return 0.0;
        }
      },
      profile.distribution);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace asap

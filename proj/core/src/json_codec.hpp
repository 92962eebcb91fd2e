#pragma once

// Internal JSON helpers shared by the file readers and writers.

#include <string>

#include "asap/data.hpp"
#include "asap/error.hpp"
#include "json.hpp"

namespace asap::codec {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

enum class BoxKind { kGroundTruth, kDetection };

OrderedJson box_to_json(const Box3D& box, BoxKind kind);
Box3D box_from_json(const Json& j, BoxKind kind, const std::string& where);

OrderedJson boxes_to_json(const std::vector<Box3D>& boxes, BoxKind kind);
std::vector<Box3D> boxes_from_json(const Json& j, BoxKind kind,
                                   const std::string& where);

// Field accessors that throw ValidationError naming `where` and the key.
const Json& require(const Json& obj, const char* key, const std::string& where);
std::string require_string(const Json& obj, const char* key,
                           const std::string& where);
double require_number(const Json& obj, const char* key,
                      const std::string& where);
std::int64_t require_integer(const Json& obj, const char* key,
                             const std::string& where);
bool require_bool(const Json& obj, const char* key, const std::string& where);

// Parses one JSON document; syntax errors become ValidationError.
Json parse(const std::string& text, const std::string& where);

std::string line_context(std::size_t line_no);

// Runs `fn`, turning JSON type errors into ValidationError.
template <typename Fn>
auto guarded(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw ValidationError(where + e.what());
  }
}

}  // namespace asap::codec

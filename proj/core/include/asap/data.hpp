#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "asap/geom.hpp"

namespace asap {

// Integer microseconds; every timestamp comparison in the toolkit is exact.
using TimestampUs = std::int64_t;

constexpr double us_to_seconds(TimestampUs us) {
  return static_cast<double>(us) / 1e6;
}

struct Size3 {
  double width = 1.0;
  double length = 1.0;
  double height = 1.0;

  friend bool operator==(const Size3&, const Size3&) = default;
};

struct Box3D {
  std::optional<std::string> instance_id;
  std::string category;
  Vec3 center;
  Size3 size;
  Quaternion rotation;
  Vec2 velocity;
  double score = 1.0;
  std::optional<std::string> attribute;

  BevRect footprint() const {
    return {center.x, center.y, size.width, size.length, rotation.yaw()};
  }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

struct FrameAnnotations {
  std::string scene_id;
  TimestampUs timestamp_us = 0;
  bool is_keyframe = false;
  std::vector<Box3D> boxes;

  friend bool operator==(const FrameAnnotations&,
                         const FrameAnnotations&) = default;
};

struct FrameDetections {
  std::string scene_id;
  TimestampUs source_timestamp_us = 0;
  std::vector<Box3D> boxes;

  friend bool operator==(const FrameDetections&,
                         const FrameDetections&) = default;
};

struct DatabaseEntry {
  TimestampUs timestamp_us = 0;
  std::vector<Box3D> boxes;

  friend bool operator==(const DatabaseEntry&, const DatabaseEntry&) = default;
};

// High-rate auxiliary detections, strictly increasing in time.
struct TemporalDatabase {
  std::string scene_id;
  std::vector<DatabaseEntry> entries;
};

struct EmpiricalRuntime {
  std::vector<double> samples_ms;
};

struct ConstantRuntime {
  double ms = 0.0;
};

// ln(runtime_ms) ~ Normal(mu, sigma).
struct LognormalRuntime {
  double mu = 0.0;
  double sigma = 0.0;
};

using RuntimeDistribution =
    std::variant<EmpiricalRuntime, ConstantRuntime, LognormalRuntime>;

struct RuntimeProfile {
  std::string name;
  RuntimeDistribution distribution = ConstantRuntime{};
  double overhead_ms = 0.0;
  // Multiplies every draw before the overhead is added.
  double contention_factor = 1.0;
};

// Checks the per-box invariants; `context` prefixes the error message.
void validate_box(const Box3D& box, const std::string& context);

// Annotation and detection files are JSON-Lines, one frame per line. A file
// may hold several scenes; timestamps must strictly increase within each
// scene. Errors carry the 1-based line number.
std::vector<FrameAnnotations> read_scene_annotations(std::istream& in);
std::vector<FrameAnnotations> load_scene_annotations(
    const std::filesystem::path& path);
void write_scene_annotations(std::ostream& out,
                             const std::vector<FrameAnnotations>& frames);
void save_scene_annotations(const std::filesystem::path& path,
                            const std::vector<FrameAnnotations>& frames);

std::vector<FrameDetections> read_detections(std::istream& in);
std::vector<FrameDetections> load_detections(const std::filesystem::path& path);
void write_detections(std::ostream& out,
                      const std::vector<FrameDetections>& frames);
void save_detections(const std::filesystem::path& path,
                     const std::vector<FrameDetections>& frames);

// Temporal databases use the detection schema. One database per scene.
std::vector<TemporalDatabase> load_temporal_databases(
    const std::filesystem::path& path);
TemporalDatabase to_temporal_database(const std::vector<FrameDetections>& frames);

RuntimeProfile parse_runtime_profile(const std::string& json_text);
RuntimeProfile load_runtime_profile(const std::filesystem::path& path);
std::string runtime_profile_json(const RuntimeProfile& profile);
void validate_profile(const RuntimeProfile& profile);

// Smallest value the profile can produce before contention and overhead.
double min_runtime_ms(const RuntimeProfile& profile);

// Groups records by scene_id, keeping scenes in order of first appearance and
// records in their original order.
template <typename Record>
std::vector<std::vector<Record>> split_by_scene(const std::vector<Record>& all) {
  std::vector<std::vector<Record>> groups;
  std::vector<std::string> ids;
  for (const auto& r : all) {
    std::size_t i = 0;
    while (i < ids.size() && ids[i] != r.scene_id) ++i;
    if (i == ids.size()) {
      ids.push_back(r.scene_id);
      groups.emplace_back();
    }
    groups[i].push_back(r);
  }
  return groups;
}

// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);
// Writes (truncates) a whole file; throws IoError.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace asap

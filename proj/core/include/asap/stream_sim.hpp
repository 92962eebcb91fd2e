#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "asap/data.hpp"

namespace asap {

enum class FramePolicy { kLatestFrame };

struct SimConfig {
  std::uint64_t seed = 0;
  // Multiplicative slowdown from co-running workloads, applied on top of the
  // profile's own factor.
  double contention_factor = 1.0;
  FramePolicy policy = FramePolicy::kLatestFrame;
  // History spacing used by multi-frame detectors. The simulator replays
  // precomputed outputs, so this only travels with the stream as metadata.
  int input_frame_interval = 1;

  void validate() const;
};

// Boxes to score at one evaluation timestamp in place of the raw record.
struct EvalRefinement {
  TimestampUs eval_us = 0;
  std::vector<Box3D> boxes;

  friend bool operator==(const EvalRefinement&, const EvalRefinement&) = default;
};

struct StreamRecord {
  TimestampUs completion_us = 0;
  TimestampUs source_us = 0;
  FrameDetections detections;
  // Filled by the velocity-updating baseline; empty for raw streams.
  std::vector<EvalRefinement> refinements;

  friend bool operator==(const StreamRecord&, const StreamRecord&) = default;
};

struct StreamMetadata {
  std::string profile_name;
  std::uint64_t seed = 0;
  double contention_factor = 1.0;
  int input_frame_interval = 1;

  friend bool operator==(const StreamMetadata&, const StreamMetadata&) = default;
};

// Online predictions of one scene, ordered by completion time.
struct PredictionStream {
  std::string scene_id;
  StreamMetadata metadata;
  std::vector<StreamRecord> records;

  // Throws ValidationError unless completions strictly increase, sources do
  // not decrease and no record completes before its source frame.
  void validate() const;

  friend bool operator==(const PredictionStream&,
                         const PredictionStream&) = default;
};

// Deterministic RNG used for runtime draws.
using SimRng = std::mt19937_64;

// One inference duration in microseconds, already scaled by the profile's
// contention factor and with the overhead added. Never below 1 us.
TimestampUs sample_runtime(const RuntimeProfile& profile, SimRng& rng);

// Replays precomputed detector outputs through a single simulated model that
// always picks the newest frame available when it becomes idle. It stops
// once it is idle after the last input frame.
//   frame_timestamps  input timestamps of the scene, strictly increasing
//   outputs           detector output per source timestamp
PredictionStream simulate_stream(
    const std::string& scene_id,
    const std::vector<TimestampUs>& frame_timestamps,
    const std::map<TimestampUs, FrameDetections>& outputs,
    const RuntimeProfile& profile, const SimConfig& cfg);

// One derived profile per factor; each factor must be >= 1.
std::vector<RuntimeProfile> contention_sweep(const RuntimeProfile& base,
                                             const std::vector<double>& factors);

// Stream files are JSON-Lines: per scene one header line followed by that
// scene's records.
void write_streams(std::ostream& out,
                   const std::vector<PredictionStream>& streams);
std::vector<PredictionStream> read_streams(std::istream& in);
void save_streams(const std::filesystem::path& path,
                  const std::vector<PredictionStream>& streams);
std::vector<PredictionStream> load_streams(const std::filesystem::path& path);

}  // namespace asap

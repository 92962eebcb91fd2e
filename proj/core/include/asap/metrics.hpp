#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asap/data.hpp"
#include "asap/stream_sim.hpp"

namespace asap {

// The ten nuScenes detection classes.
const std::vector<std::string>& default_classes();

struct MatchResult {
  TimestampUs eval_us = 0;
  std::optional<std::size_t> record_index;
  // eval_us minus the matched record's completion time; 0 when unmatched.
  TimestampUs staleness_us = 0;
};

// Latest record whose completion time is strictly before `t_eval`.
MatchResult match_recent(const PredictionStream& stream, TimestampUs t_eval);

struct BoxMatch {
  // (gt index, prediction index) into the caller's vectors.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;
  // Indices of the class's predictions in descending score order; ties keep
  // input order. This is the order outcomes enter the PR curve.
  std::vector<std::size_t> ranked_predictions;
};

// Greedy center-distance matching for one class: predictions in descending
// score order take the nearest unmatched ground-truth box within
// `threshold_m` (inclusive).
BoxMatch match_boxes(const std::vector<Box3D>& gt,
                     const std::vector<Box3D>& pred, const std::string& cls,
                     double threshold_m);

struct ScoredOutcome {
  double score = 0.0;
  bool true_positive = false;
};

// Average precision over pooled outcomes: outcomes are ranked by descending
// score (stable), precision is made monotone from the right and sampled on a
// 101-point recall grid, and the area above precision 0.1 for recall above
// 0.1 is normalized to [0, 1]. nullopt when `num_gt` is 0.
std::optional<double> compute_ap(const std::vector<ScoredOutcome>& outcomes,
                                 std::size_t num_gt);

struct TpErrors {
  double ate = 1.0;
  double ase = 1.0;
  double aoe = 1.0;
  double aae = 1.0;
};

struct TpPair {
  const Box3D* gt = nullptr;
  const Box3D* pred = nullptr;
};

// Plain means over the pairs; every field is 1.0 when `pairs` is empty.
TpErrors compute_tp_errors(const std::vector<TpPair>& pairs);

// 1 - IoU of the two boxes after aligning centers and orientation.
double scale_error(const Size3& a, const Size3& b);

// |yaw difference| wrapped to [0, pi].
double orientation_error(const Quaternion& a, const Quaternion& b);

// Planar velocity error.
double velocity_error(const Vec2& a, const Vec2& b);

struct NdsInputs {
  double map_s = 0.0;
  double ate_s = 1.0;
  double ase_s = 1.0;
  double aoe_s = 1.0;
  double ave = 1.0;
  double aae_s = 1.0;
};

double compute_nds_s(const NdsInputs& in);

struct EvalConfig {
  std::vector<std::string> classes = default_classes();
  std::vector<double> thresholds = {0.5, 1.0, 2.0, 4.0};
  double tp_threshold = 2.0;
  // Evaluation timestamps up to and including the first completion are
  // skipped unless this is set, in which case they score as all-missed.
  bool score_warmup = false;
  // Score the per-timestamp refinements carried by the stream.
  bool use_refinements = false;
  // Restrict the offline velocity error to keyframe ground truth.
  bool ave_keyframes_only = false;

  void validate() const;
};

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ReportMetadata {
  std::string profile_name;
  std::uint64_t seed = 0;
  double contention_factor = 1.0;
  int input_frame_interval = 1;
  bool refined = false;
  std::size_t scenes = 0;
  std::size_t eval_frames = 0;
};

struct MetricReport {
  // (class, threshold) -> AP, for classes with ground truth.
  std::map<std::pair<std::string, double>, double> per_class_ap;
  std::map<std::string, TpErrors> per_class_tp;
  double map_s = 0.0;
  double ate_s = 1.0;
  double ase_s = 1.0;
  double aoe_s = 1.0;
  double aae_s = 1.0;
  double ave_offline = 1.0;
  double nds_s = 0.0;
  MatchCounts counts;
  ReportMetadata metadata;
  EvalConfig config;

  NdsInputs nds_inputs() const {
    return {map_s, ate_s, ase_s, aoe_s, ave_offline, aae_s};
  }
};

// Pools per-scene evaluation state; scenes merge associatively.
class StreamingAccumulator {
 public:
  explicit StreamingAccumulator(EvalConfig cfg);

  // Scores every ground-truth frame of one scene against its latest completed
  // prediction, and the offline outputs against their own source frames.
  void add_scene(const std::vector<FrameAnnotations>& gt,
                 const PredictionStream& stream,
                 const std::vector<FrameDetections>& offline);

  void merge(const StreamingAccumulator& other);

  MetricReport finalize() const;

 private:
  struct ApBucket {
    std::vector<ScoredOutcome> outcomes;
    std::size_t num_gt = 0;
  };
  struct ErrorSums {
    double ate = 0.0;
    double ase = 0.0;
    double aoe = 0.0;
    double aae = 0.0;
    std::size_t n = 0;
  };
  struct VelocitySums {
    double sum = 0.0;
    std::size_t n = 0;
    std::size_t num_gt = 0;
  };

  EvalConfig cfg_;
  std::map<std::pair<std::string, double>, ApBucket> ap_;
  std::map<std::string, ErrorSums> errors_;
  std::map<std::string, VelocitySums> velocity_;
  MatchCounts counts_;
  std::optional<StreamMetadata> stream_meta_;
  bool refined_ = false;
  std::size_t scenes_ = 0;
  std::size_t eval_frames_ = 0;
};

// Single-scene convenience wrapper around StreamingAccumulator.
MetricReport evaluate_streaming(const std::vector<FrameAnnotations>& gt,
                                const PredictionStream& stream,
                                const std::vector<FrameDetections>& offline,
                                const EvalConfig& cfg = {});

// Offline velocity error: outputs matched against the ground truth of their
// own source frames at `cfg.tp_threshold`. 1.0 when nothing matches.
double compute_ave_offline(const std::vector<FrameDetections>& outputs,
                           const std::vector<FrameAnnotations>& gt,
                           const EvalConfig& cfg = {});

constexpr int kReportSchemaVersion = 1;

std::string report_json(const MetricReport& report);
MetricReport parse_report(const std::string& json_text);
MetricReport load_report(const std::filesystem::path& path);
// One row per (class, threshold) AP, then a summary row.
std::string report_csv(const MetricReport& report);

}  // namespace asap

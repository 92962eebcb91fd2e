#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "asap/data.hpp"
#include "asap/stream_sim.hpp"

namespace asap {

struct KalmanConfig {
  double process_noise_pos = 0.5;  // m^2/s
  double process_noise_vel = 0.5;  // m^2/s^3
  double meas_noise_pos = 0.5;     // m^2
  double meas_noise_vel = 1.0;     // m^2/s^2
  double assoc_iou_threshold = 0.1;
  TimestampUs max_coast_us = 1'000'000;

  void validate() const;
};

using KalmanVector = Eigen::Matrix<double, 5, 1>;
using KalmanMatrix = Eigen::Matrix<double, 5, 5>;

// State is (x, y, z, vx, vy).
struct TrackState {
  KalmanVector state = KalmanVector::Zero();
  KalmanMatrix covariance = KalmanMatrix::Identity();
  TimestampUs last_update = 0;
  int track_id = 0;
  int hits = 0;
};

// Constant-velocity displacement of the center by dt seconds; everything else
// is copied.
Box3D cv_update(const Box3D& box, double dt_s);

struct Association {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (prev, curr)
  std::vector<std::size_t> unmatched_prev;
  std::vector<std::size_t> unmatched_curr;
};

// Greedy one-to-one matching by descending BEV IoU within the same category.
// `prev_boxes` must already be propagated to the time of `curr_boxes`.
Association greedy_associate(const std::vector<Box3D>& prev_boxes,
                             const std::vector<Box3D>& curr_boxes,
                             const KalmanConfig& cfg);

// New track from a detection, with covariance 10x the measurement noise.
TrackState init_track(const Box3D& box, TimestampUs t, int track_id,
                      const KalmanConfig& cfg);

// One constant-velocity predict step over dt seconds followed by an update
// with the detection's center and velocity. dt must be > 0.
TrackState kalman_step(const TrackState& track, const Box3D& measurement,
                       double dt_s, const KalmanConfig& cfg);

enum class SvMode {
  kConstantVelocity,  // raw per-frame velocities only
  kKalman,            // associate and refine first
};

// Copies `stream` and attaches, for every evaluation timestamp matched to a
// record, that record's boxes advanced to the evaluation time. Only centers
// and velocities ever change.
PredictionStream sv_pipeline(const PredictionStream& stream,
                             const std::vector<TimestampUs>& eval_timestamps,
                             const KalmanConfig& cfg,
                             SvMode mode = SvMode::kKalman);

}  // namespace asap

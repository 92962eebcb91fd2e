#include "asap/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Dense>

#include "asap/error.hpp"
#include "asap/geom.hpp"
#include "asap/metrics.hpp"

namespace asap {

namespace {

KalmanVector measurement_of(const Box3D& box) {
  KalmanVector z;
  z << box.center.x, box.center.y, box.center.z, box.velocity.x, box.velocity.y;
  return z;
}

KalmanMatrix measurement_noise(const KalmanConfig& cfg) {
  KalmanVector d;
  d << cfg.meas_noise_pos, cfg.meas_noise_pos, cfg.meas_noise_pos,
      cfg.meas_noise_vel, cfg.meas_noise_vel;
  return d.asDiagonal();
}

// Restores symmetry and clips negative eigenvalues left by rounding.
KalmanMatrix make_psd(const KalmanMatrix& p) {
  KalmanMatrix sym = (p + p.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<KalmanMatrix> es(sym);
  if (es.eigenvalues().minCoeff() >= 0.0) return sym;
  const KalmanVector clipped = es.eigenvalues().cwiseMax(0.0);
  KalmanMatrix out =
      es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return (out + out.transpose()) / 2.0;
}

struct Track {
  TrackState kf;
  Box3D shape;  // last associated detection
};

Box3D predicted_box(const Track& t, TimestampUs now) {
  Box3D b = t.shape;
  b.center = {t.kf.state(0), t.kf.state(1), t.kf.state(2)};
  b.velocity = {t.kf.state(3), t.kf.state(4)};
  return cv_update(b, us_to_seconds(now - t.kf.last_update));
}

}  // namespace

void KalmanConfig::validate() const {
  for (double v : {process_noise_pos, process_noise_vel, meas_noise_pos,
                   meas_noise_vel}) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw ValidationError("Kalman noise parameters must be > 0");
    }
  }
  if (!(assoc_iou_threshold >= 0.0 && assoc_iou_threshold <= 1.0)) {
    throw ValidationError("assoc_iou_threshold must be in [0, 1]");
  }
  if (max_coast_us < 0) throw ValidationError("max_coast must be >= 0");
}

Box3D cv_update(const Box3D& box, double dt_s) {
  if (!(dt_s >= 0.0)) throw ValidationError("cv_update needs dt >= 0");
  Box3D out = box;
  out.center.x += dt_s * box.velocity.x;
  out.center.y += dt_s * box.velocity.y;
  return out;
}

Association greedy_associate(const std::vector<Box3D>& prev_boxes,
                             const std::vector<Box3D>& curr_boxes,
                             const KalmanConfig& cfg) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  std::vector<BevRect> curr_rects;
  curr_rects.reserve(curr_boxes.size());
  for (const auto& b : curr_boxes) curr_rects.push_back(b.footprint());
  for (std::size_t i = 0; i < prev_boxes.size(); ++i) {
    const BevRect pr = prev_boxes[i].footprint();
    for (std::size_t j = 0; j < curr_boxes.size(); ++j) {
      if (prev_boxes[i].category != curr_boxes[j].category) continue;
      const double iou = bev_iou(pr, curr_rects[j]);
      if (iou >= cfg.assoc_iou_threshold && iou > 0.0) {
        candidates.emplace_back(iou, i, j);
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) {
                     return std::get<0>(a) > std::get<0>(b);
                   });

  Association out;
  std::vector<char> prev_used(prev_boxes.size(), 0);
  std::vector<char> curr_used(curr_boxes.size(), 0);
  for (const auto& [iou, i, j] : candidates) {
    if (prev_used[i] || curr_used[j]) continue;
    prev_used[i] = curr_used[j] = 1;
    out.pairs.emplace_back(i, j);
  }
  for (std::size_t i = 0; i < prev_boxes.size(); ++i) {
    if (!prev_used[i]) out.unmatched_prev.push_back(i);
  }
  for (std::size_t j = 0; j < curr_boxes.size(); ++j) {
    if (!curr_used[j]) out.unmatched_curr.push_back(j);
  }
  return out;
}

TrackState init_track(const Box3D& box, TimestampUs t, int track_id,
                      const KalmanConfig& cfg) {
  TrackState s;
  s.state = measurement_of(box);
  s.covariance = 10.0 * measurement_noise(cfg);
  s.last_update = t;
  s.track_id = track_id;
  s.hits = 1;
  return s;
}

TrackState kalman_step(const TrackState& track, const Box3D& measurement,
                       double dt_s, const KalmanConfig& cfg) {
  if (!(dt_s > 0.0)) throw ValidationError("kalman_step needs dt > 0");

  KalmanMatrix f = KalmanMatrix::Identity();
  f(0, 3) = dt_s;
  f(1, 4) = dt_s;
  KalmanVector q;
  q << cfg.process_noise_pos, cfg.process_noise_pos, cfg.process_noise_pos,
      cfg.process_noise_vel, cfg.process_noise_vel;
  const KalmanMatrix process = (q * dt_s).asDiagonal();

  const KalmanVector x_pred = f * track.state;
  const KalmanMatrix p_pred = f * track.covariance * f.transpose() + process;

  const KalmanMatrix r = measurement_noise(cfg);
  const KalmanMatrix s = p_pred + r;
  const KalmanMatrix k = s.ldlt().solve(p_pred.transpose()).transpose();
  const KalmanVector innovation = measurement_of(measurement) - x_pred;
  const KalmanMatrix i_k = KalmanMatrix::Identity() - k;

  TrackState out = track;
  out.state = x_pred + k * innovation;
  // Joseph form keeps the covariance PSD.
  out.covariance =
      make_psd(i_k * p_pred * i_k.transpose() + k * r * k.transpose());
  if (!out.state.allFinite() || !out.covariance.allFinite()) {
    throw Error("Kalman filter diverged (NaN)");
  }
  out.hits = track.hits + 1;
  return out;
}

PredictionStream sv_pipeline(const PredictionStream& stream,
                             const std::vector<TimestampUs>& eval_timestamps,
                             const KalmanConfig& cfg, SvMode mode) {
  cfg.validate();
  stream.validate();
  PredictionStream out = stream;
  for (auto& rec : out.records) rec.refinements.clear();

  // Which evaluation timestamps each record serves.
  std::vector<std::vector<TimestampUs>> served(stream.records.size());
  for (TimestampUs t : eval_timestamps) {
    const MatchResult m = match_recent(stream, t);
    if (m.record_index) served[*m.record_index].push_back(t);
  }

  std::vector<Track> tracks;
  int next_id = 0;
  for (std::size_t k = 0; k < out.records.size(); ++k) {
    StreamRecord& rec = out.records[k];
    const TimestampUs now = rec.source_us;
    std::vector<Box3D> refined = rec.detections.boxes;

    if (mode == SvMode::kKalman) {
      std::erase_if(tracks, [&](const Track& t) {
        return now - t.kf.last_update > cfg.max_coast_us;
      });
      std::vector<Box3D> predicted;
      predicted.reserve(tracks.size());
      for (const auto& t : tracks) predicted.push_back(predicted_box(t, now));

      const Association assoc = greedy_associate(predicted, refined, cfg);
      for (const auto& [ti, di] : assoc.pairs) {
        Track& t = tracks[ti];
        const double dt = us_to_seconds(now - t.kf.last_update);
        const Box3D& det = rec.detections.boxes[di];
        if (dt > 0.0) {
          t.kf = kalman_step(t.kf, det, dt, cfg);
        } else {
          t.kf = init_track(det, now, t.kf.track_id, cfg);
        }
        t.kf.last_update = now;
        t.shape = det;
        refined[di].center = {t.kf.state(0), t.kf.state(1), t.kf.state(2)};
        refined[di].velocity = {t.kf.state(3), t.kf.state(4)};
      }
      for (std::size_t di : assoc.unmatched_curr) {
        tracks.push_back(
            {init_track(rec.detections.boxes[di], now, next_id++, cfg),
             rec.detections.boxes[di]});
      }
    }

    for (TimestampUs t : served[k]) {
      EvalRefinement ref;
      ref.eval_us = t;
      ref.boxes.reserve(refined.size());
      const double dt = us_to_seconds(t - rec.source_us);
      for (const auto& b : refined) ref.boxes.push_back(cv_update(b, dt));
      rec.refinements.push_back(std::move(ref));
    }
  }
  return out;
}

}  // namespace asap

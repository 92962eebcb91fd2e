#include "asap/interp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "asap/error.hpp"
#include "asap/geom.hpp"

namespace asap {

void InterpolationConfig::validate() const {
  if (!(clean_iou_threshold >= 0.0 && clean_iou_threshold <= 1.0)) {
    throw ValidationError("clean_iou_threshold must be in [0, 1]");
  }
  if (!(min_db_score >= 0.0 && min_db_score <= 1.0)) {
    throw ValidationError("min_db_score must be in [0, 1]");
  }
  if (!(std::isfinite(target_rate_hz) && target_rate_hz > 0.0)) {
    throw ValidationError("target_rate_hz must be > 0");
  }
}

Box3D interpolate_instance(const Box3D& box_s, const Box3D& box_e,
                           TimestampUs t_s, TimestampUs t_e, TimestampUs t) {
  if (!box_s.instance_id || box_s.instance_id != box_e.instance_id) {
    throw ValidationError("instance mismatch");
  }
  if (!(t_s < t && t < t_e)) {
    throw ValidationError("interpolation time must lie strictly inside the interval");
  }
  const double span = static_cast<double>(t_e - t_s);
  const double u = static_cast<double>(t - t_s) / span;

  Box3D out = box_s;
  out.center = lerp_translation(box_s.center, box_e.center,
                                static_cast<double>(t_s),
                                static_cast<double>(t_e),
                                static_cast<double>(t));
  out.rotation = slerp(box_s.rotation, box_e.rotation, u);
  const double span_s = us_to_seconds(t_e - t_s);
  out.velocity = {(box_e.center.x - box_s.center.x) / span_s,
                  (box_e.center.y - box_s.center.y) / span_s};
  return out;
}

std::vector<Box3D> query_temporal_db(const TemporalDatabase& db, TimestampUs t,
                                     double min_score) {
  if (db.entries.empty()) throw ValidationError("empty temporal database");
  auto it = std::lower_bound(
      db.entries.begin(), db.entries.end(), t,
      [](const DatabaseEntry& e, TimestampUs v) { return e.timestamp_us < v; });
  const DatabaseEntry* best;
  if (it == db.entries.end()) {
    best = &db.entries.back();
  } else if (it == db.entries.begin()) {
    best = &*it;
  } else {
    const auto& later = *it;
    const auto& earlier = *std::prev(it);
    best = (later.timestamp_us - t < t - earlier.timestamp_us) ? &later
                                                               : &earlier;
  }
  std::vector<Box3D> out;
  for (const auto& b : best->boxes) {
    if (b.score >= min_score) out.push_back(b);
  }
  return out;
}

std::vector<Box3D> auto_clean(const std::vector<Box3D>& interpolated,
                              const std::vector<Box3D>& queried,
                              const InterpolationConfig& cfg) {
  std::vector<Box3D> out = interpolated;
  std::vector<BevRect> rects;
  rects.reserve(interpolated.size());
  for (const auto& b : interpolated) rects.push_back(b.footprint());

  for (const auto& q : queried) {
    const BevRect qr = q.footprint();
    double best = 0.0;
    for (const auto& r : rects) best = std::max(best, bev_iou(qr, r));
    if (best < cfg.clean_iou_threshold) out.push_back(q);
  }
  return out;
}

std::vector<TimestampUs> intermediate_timestamps(TimestampUs t_s,
                                                 TimestampUs t_e,
                                                 double rate_hz) {
  const double period_us = 1e6 / rate_hz;
  const double limit = static_cast<double>(t_e - t_s) - period_us / 2.0;
  std::vector<TimestampUs> out;
  for (std::int64_t k = 1;; ++k) {
    const double offset = std::round(static_cast<double>(k) * period_us);
    if (offset >= limit) break;
    out.push_back(t_s + static_cast<TimestampUs>(offset));
  }
  return out;
}

std::vector<FrameAnnotations> extend_annotations(
    const std::vector<FrameAnnotations>& frames, const TemporalDatabase& db,
    const InterpolationConfig& cfg) {
  cfg.validate();
  std::vector<const FrameAnnotations*> keys;
  for (const auto& f : frames) {
    if (f.is_keyframe) keys.push_back(&f);
  }
  if (keys.size() < 2) {
    throw ValidationError("need at least 2 keyframes to interpolate");
  }
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i]->scene_id != keys[0]->scene_id) {
      throw ValidationError("keyframes span more than one scene");
    }
    if (keys[i]->timestamp_us <= keys[i - 1]->timestamp_us) {
      throw ValidationError("unsorted scene");
    }
  }
  if (!db.entries.empty() && !db.scene_id.empty() &&
      db.scene_id != keys[0]->scene_id) {
    throw ValidationError("scene mismatch");
  }

  std::vector<FrameAnnotations> out;
  for (std::size_t k = 0; k + 1 < keys.size(); ++k) {
    const FrameAnnotations& ks = *keys[k];
    const FrameAnnotations& ke = *keys[k + 1];
    out.push_back(ks);

    // Instances present in both brackets.
    std::map<std::string, const Box3D*> later;
    for (const auto& b : ke.boxes) {
      if (b.instance_id) later.emplace(*b.instance_id, &b);
    }
    std::vector<std::pair<const Box3D*, const Box3D*>> pairs;
    for (const auto& b : ks.boxes) {
      if (!b.instance_id) continue;
      auto it = later.find(*b.instance_id);
      if (it != later.end()) pairs.emplace_back(&b, it->second);
    }

    for (TimestampUs t : intermediate_timestamps(
             ks.timestamp_us, ke.timestamp_us, cfg.target_rate_hz)) {
      std::vector<Box3D> interpolated;
      interpolated.reserve(pairs.size());
      for (const auto& [bs, be] : pairs) {
        interpolated.push_back(
            interpolate_instance(*bs, *be, ks.timestamp_us, ke.timestamp_us, t));
      }
      FrameAnnotations f;
      f.scene_id = ks.scene_id;
      f.timestamp_us = t;
      f.is_keyframe = false;
      if (db.entries.empty()) {
        f.boxes = std::move(interpolated);
      } else {
        const std::size_t n_interp = interpolated.size();
        f.boxes = auto_clean(interpolated,
                             query_temporal_db(db, t, cfg.min_db_score), cfg);
        // Appended database boxes become annotations: unit score, and an id
        // only if it does not collide with one already in the frame.
        std::set<std::string> ids;
        for (std::size_t i = 0; i < f.boxes.size(); ++i) {
          Box3D& b = f.boxes[i];
          if (i >= n_interp) {
            b.score = 1.0;
            if (b.instance_id && ids.count(*b.instance_id)) b.instance_id.reset();
          }
          if (b.instance_id) ids.insert(*b.instance_id);
        }
      }
      out.push_back(std::move(f));
    }
  }
  out.push_back(*keys.back());
  return out;
}

}  // namespace asap

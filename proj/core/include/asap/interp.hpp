#pragma once

#include <vector>

#include "asap/data.hpp"

namespace asap {

struct InterpolationConfig {
  // Queried boxes whose BEV IoU with any interpolated box reaches this value
  // are treated as duplicates.
  double clean_iou_threshold = 0.1;
  // Database boxes scoring below this are ignored.
  double min_db_score = 0.3;
  double target_rate_hz = 12.0;

  void validate() const;
};

// Pose of one instance at `t`, strictly inside (t_s, t_e). Center is lerped,
// rotation slerped, size/category/attribute come from `box_s`, and velocity is
// the finite difference of the two centers.
Box3D interpolate_instance(const Box3D& box_s, const Box3D& box_e,
                           TimestampUs t_s, TimestampUs t_e, TimestampUs t);

// Boxes of the entry nearest to `t` (ties go to the earlier entry), keeping
// only those scoring at least `min_score`.
std::vector<Box3D> query_temporal_db(const TemporalDatabase& db, TimestampUs t,
                                     double min_score);

// Interpolated boxes plus every queried box that does not overlap any of them.
std::vector<Box3D> auto_clean(const std::vector<Box3D>& interpolated,
                              const std::vector<Box3D>& queried,
                              const InterpolationConfig& cfg);

// Timestamps strictly between two keyframes on the target-rate grid anchored
// at `t_s`. Grid points within half a period of `t_e` are dropped.
std::vector<TimestampUs> intermediate_timestamps(TimestampUs t_s,
                                                 TimestampUs t_e,
                                                 double rate_hz);

// Densifies one scene. Only frames flagged as keyframes are used; they pass
// through unchanged and every gap between consecutive keyframes is filled by
// interpolation of co-visible instances followed by auto-clean against `db`.
std::vector<FrameAnnotations> extend_annotations(
    const std::vector<FrameAnnotations>& frames, const TemporalDatabase& db,
    const InterpolationConfig& cfg);

}  // namespace asap

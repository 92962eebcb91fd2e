#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asap/data.hpp"
#include "asap/stream_sim.hpp"

namespace fixtures {

inline asap::Box3D box(std::optional<std::string> id, std::string category,
                       double x, double y, double yaw = 0.0,
                       asap::Vec2 velocity = {}, double score = 1.0) {
  asap::Box3D b;
  b.instance_id = std::move(id);
  b.category = std::move(category);
  b.center = {x, y, 0.0};
  b.size = {1.9, 4.6, 1.7};
  b.rotation = asap::Quaternion::from_yaw(yaw);
  b.velocity = velocity;
  b.score = score;
  return b;
}

inline asap::FrameAnnotations frame(std::string scene, asap::TimestampUs t,
                                    bool keyframe,
                                    std::vector<asap::Box3D> boxes) {
  return {std::move(scene), t, keyframe, std::move(boxes)};
}

inline asap::StreamRecord record(asap::TimestampUs completion,
                                 asap::TimestampUs source,
                                 std::vector<asap::Box3D> boxes,
                                 const std::string& scene = "s") {
  asap::StreamRecord r;
  r.completion_us = completion;
  r.source_us = source;
  r.detections = {scene, source, std::move(boxes)};
  return r;
}

inline asap::PredictionStream stream_of(std::vector<asap::StreamRecord> recs,
                                        const std::string& scene = "s") {
  asap::PredictionStream s;
  s.scene_id = scene;
  s.records = std::move(recs);
  return s;
}

inline asap::RuntimeProfile constant_profile(double ms,
                                             std::string name = "const") {
  asap::RuntimeProfile p;
  p.name = std::move(name);
  p.distribution = asap::ConstantRuntime{ms};
  return p;
}

}  // namespace fixtures

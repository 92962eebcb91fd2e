#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asap/data.hpp"

namespace asap {

struct ObjectSpec {
  std::string category = "car";
  Vec3 center;
  Size3 size{1.9, 4.6, 1.7};
  double yaw = 0.0;
  Vec2 velocity;
  double yaw_rate = 0.0;  // rad/s
  std::optional<std::string> attribute;
};

struct SceneSpec {
  std::string scene_id = "synthetic";
  double duration_s = 1.0;
  double rate_hz = 12.0;
  // Keyframes every rate_hz / keyframe_rate_hz frames; equal rates make
  // every frame a keyframe.
  double keyframe_rate_hz = 2.0;
  std::vector<ObjectSpec> objects;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class ScoreModel {
  kConstant,       // every detection scores 1.0
  kInverseError,   // exp(-|center perturbation|), 1.0 when noise-free
};

struct DetectorNoise {
  double pos_sigma = 0.0;  // m, per planar axis
  double vel_sigma = 0.0;  // m/s, per planar axis
  double drop_rate = 0.0;  // probability of missing a box
  ScoreModel score_model = ScoreModel::kConstant;

  void validate() const;
};

// Frame k sits at round(k * 1e6 / rate_hz) microseconds.
TimestampUs frame_timestamp(std::int64_t k, double rate_hz);

// Exact kinematic pose of one object at `t`.
Box3D object_at(const ObjectSpec& obj, std::size_t index, TimestampUs t);

// Frames over [0, duration_s] with constant-velocity, constant-yaw-rate
// objects. Instance ids are "obj-<index>".
std::vector<FrameAnnotations> gen_scene(const SceneSpec& spec);

// Ground truth copied per frame with Gaussian center/velocity noise, random
// drops and a score model. Deterministic for a given seed.
std::map<TimestampUs, FrameDetections> oracle_detector(
    const std::vector<FrameAnnotations>& scene, const DetectorNoise& noise,
    std::uint64_t seed);

// Spec files: {"scene_id", "duration_s", "rate_hz", "keyframe_rate_hz",
// "seed", "objects": [...], "detector": {...}}.
struct SynthFile {
  SceneSpec scene;
  DetectorNoise detector;
};
SynthFile parse_synth_spec(const std::string& json_text);

}  // namespace asap

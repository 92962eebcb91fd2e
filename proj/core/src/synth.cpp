#include "asap/synth.hpp"

#include <cmath>

#include "asap/error.hpp"
#include "asap/random.hpp"
#include "json_codec.hpp"

namespace asap {

using codec::Json;

void SceneSpec::validate() const {
  if (!(std::isfinite(duration_s) && duration_s > 0.0)) {
    throw ValidationError("duration_s must be > 0");
  }
  if (!(std::isfinite(rate_hz) && rate_hz > 0.0)) {
    throw ValidationError("rate_hz must be > 0");
  }
  if (!(std::isfinite(keyframe_rate_hz) && keyframe_rate_hz > 0.0 &&
        keyframe_rate_hz <= rate_hz)) {
    throw ValidationError("keyframe_rate_hz must be in (0, rate_hz]");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    Box3D probe = object_at(o, i, 0);
    validate_box(probe, "objects[" + std::to_string(i) + "].");
  }
}

void DetectorNoise::validate() const {
  if (!(pos_sigma >= 0.0) || !(vel_sigma >= 0.0)) {
    throw ValidationError("noise sigmas must be >= 0");
  }
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
    throw ValidationError("drop_rate must be in [0, 1]");
  }
}

TimestampUs frame_timestamp(std::int64_t k, double rate_hz) {
  return static_cast<TimestampUs>(
      std::llround(static_cast<double>(k) * 1e6 / rate_hz));
}

Box3D object_at(const ObjectSpec& obj, std::size_t index, TimestampUs t) {
  const double ts = us_to_seconds(t);
  Box3D b;
  b.instance_id = "obj-" + std::to_string(index);
  b.category = obj.category;
  b.center = {obj.center.x + obj.velocity.x * ts,
              obj.center.y + obj.velocity.y * ts, obj.center.z};
  b.size = obj.size;
  b.rotation = Quaternion::from_yaw(obj.yaw + obj.yaw_rate * ts);
  b.velocity = obj.velocity;
  b.score = 1.0;
  b.attribute = obj.attribute;
  return b;
}

std::vector<FrameAnnotations> gen_scene(const SceneSpec& spec) {
  spec.validate();
  const auto n_frames =
      static_cast<std::int64_t>(std::floor(spec.duration_s * spec.rate_hz + 1e-9)) + 1;
  const auto stride = std::max<std::int64_t>(
      1, std::llround(spec.rate_hz / spec.keyframe_rate_hz));

  std::vector<FrameAnnotations> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  for (std::int64_t k = 0; k < n_frames; ++k) {
    FrameAnnotations f;
    f.scene_id = spec.scene_id;
    f.timestamp_us = frame_timestamp(k, spec.rate_hz);
    f.is_keyframe = k % stride == 0;
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      f.boxes.push_back(object_at(spec.objects[i], i, f.timestamp_us));
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

std::map<TimestampUs, FrameDetections> oracle_detector(
    const std::vector<FrameAnnotations>& scene, const DetectorNoise& noise,
    std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed);
  std::map<TimestampUs, FrameDetections> out;
  for (const auto& frame : scene) {
    FrameDetections det;
    det.scene_id = frame.scene_id;
    det.source_timestamp_us = frame.timestamp_us;
    for (const auto& gt : frame.boxes) {
      // Fixed number of draws per box keeps streams aligned across settings.
      const double drop = uniform01(rng);
      const double dx = standard_normal(rng) * noise.pos_sigma;
      const double dy = standard_normal(rng) * noise.pos_sigma;
      const double dvx = standard_normal(rng) * noise.vel_sigma;
      const double dvy = standard_normal(rng) * noise.vel_sigma;
      if (drop < noise.drop_rate) continue;
      Box3D b = gt;
      b.center.x += dx;
      b.center.y += dy;
      b.velocity.x += dvx;
      b.velocity.y += dvy;
      b.score = noise.score_model == ScoreModel::kConstant
                    ? 1.0
                    : std::exp(-std::hypot(dx, dy));
      det.boxes.push_back(std::move(b));
    }
    out.emplace(frame.timestamp_us, std::move(det));
  }
  return out;
}

static SynthFile parse_synth_spec_impl(const std::string& json_text) {
  const std::string where = "synth spec: ";
  const Json j = codec::parse(json_text, where);
  if (!j.is_object()) throw ValidationError(where + "expected object");
  SynthFile f;
  SceneSpec& s = f.scene;
  s.scene_id = j.value("scene_id", s.scene_id);
  s.duration_s = codec::require_number(j, "duration_s", where);
  s.rate_hz = codec::require_number(j, "rate_hz", where);
  s.keyframe_rate_hz = j.value("keyframe_rate_hz", s.keyframe_rate_hz);
  s.seed = j.value("seed", std::uint64_t{0});
  const Json& objs = codec::require(j, "objects", where);
  if (!objs.is_array()) throw ValidationError(where + "objects: expected array");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const Json& o = objs[i];
    const std::string ow = where + "objects[" + std::to_string(i) + "].";
    ObjectSpec spec;
    spec.category = codec::require_string(o, "category", ow);
    const auto c = codec::require(o, "center", ow).get<std::vector<double>>();
    const auto sz = codec::require(o, "size", ow).get<std::vector<double>>();
    if (c.size() != 3 || sz.size() != 3) {
      throw ValidationError(ow + "center and size need 3 values");
    }
    spec.center = {c[0], c[1], c[2]};
    spec.size = {sz[0], sz[1], sz[2]};
    spec.yaw = o.value("yaw", 0.0);
    if (o.contains("velocity")) {
      const auto v = o.at("velocity").get<std::vector<double>>();
      if (v.size() != 2) throw ValidationError(ow + "velocity needs 2 values");
      spec.velocity = {v[0], v[1]};
    }
    spec.yaw_rate = o.value("yaw_rate", 0.0);
    if (o.contains("attribute") && o.at("attribute").is_string()) {
      spec.attribute = o.at("attribute").get<std::string>();
    }
    s.objects.push_back(std::move(spec));
  }
  if (j.contains("detector")) {
    const Json& d = j.at("detector");
    f.detector.pos_sigma = d.value("pos_sigma", 0.0);
    f.detector.vel_sigma = d.value("vel_sigma", 0.0);
    f.detector.drop_rate = d.value("drop_rate", 0.0);
    const std::string model = d.value("score_model", std::string("constant"));
    if (model == "constant") {
      f.detector.score_model = ScoreModel::kConstant;
    } else if (model == "inverse_error") {
      f.detector.score_model = ScoreModel::kInverseError;
    } else {
      throw ValidationError(where + "unknown score_model '" + model + "'");
    }
  }
  s.validate();
  f.detector.validate();
  return f;
}

SynthFile parse_synth_spec(const std::string& json_text) {
  return codec::guarded("synth spec: ", [&] { return parse_synth_spec_impl(json_text); });
}

}  // namespace asap

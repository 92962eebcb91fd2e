// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "asap/baseline.hpp"
#include "asap/interp.hpp"
#include "asap/metrics.hpp"
#include "asap/stream_sim.hpp"
#include "asap/synth.hpp"
#include "cli/cli.hpp"
#include "oracles/iou_oracle.hpp"
#include "oracles/schedule_oracle.hpp"
#include "oracles/slerp_oracle.hpp"
#include "oracles/streaming_oracle.hpp"

namespace fs = std::filesystem;
using asap::TimestampUs;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome nds_regression() {
  struct Row {
    const char* name;
    asap::NdsInputs in;
    double want;
  };
  const Row rows[] = {
      {"BEVDepth", {0.323, 0.654, 0.272, 0.414, 0.440, 0.198}, 0.464},
      {"FCOS3D", {0.208, 0.828, 0.269, 0.512, 1.315, 0.175}, 0.326},
      {"BEVFormer", {0.310, 0.760, 0.276, 0.385, 0.397, 0.216}, 0.452},
  };
  double worst = 0;
  std::string detail;
  for (const auto& r : rows) {
    const double got = asap::compute_nds_s(r.in);
    worst = std::max(worst, std::abs(got - r.want));
    detail += std::string(r.name) + fmt("=%.4f ", got);
  }
  return {worst <= 5e-4, detail + fmt("max|err|=%.1e", worst)};
}

Outcome theta_matching() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(0, 30);
  std::uniform_int_distribution<TimestampUs> gap(1, 200'000);
  std::bernoulli_distribution on_boundary(0.25);
  int failures = 0;
  int boundary_cases = 0;
  for (int trial = 0; trial < 10'000; ++trial) {
    asap::PredictionStream s;
    s.scene_id = "s";
    TimestampUs c = 0;
    for (int i = len(rng); i > 0; --i) {
      c += gap(rng);
      asap::StreamRecord r;
      r.completion_us = c;
      r.source_us = c - 1;
      r.detections = {"s", c - 1, {}};
      s.records.push_back(r);
    }
    std::uniform_int_distribution<TimestampUs> when(0, c + 300'000);
    TimestampUs t0 = when(rng);
    if (on_boundary(rng) && !s.records.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, s.records.size() - 1);
      t0 = s.records[pick(rng)].completion_us;
      ++boundary_cases;
    }
    const TimestampUs t1 = t0 + when(rng) / 4;
    const auto m0 = asap::match_recent(s, t0);
    const auto m1 = asap::match_recent(s, t1);

    bool ok = true;
    if (m0.record_index) {
      const auto& rec = s.records[*m0.record_index];
      ok = ok && rec.completion_us < t0 && m0.staleness_us == t0 - rec.completion_us;
      // Nothing later also qualifies.
      if (*m0.record_index + 1 < s.records.size()) {
        ok = ok && s.records[*m0.record_index + 1].completion_us >= t0;
      }
    } else {
      ok = ok && (s.records.empty() || s.records.front().completion_us >= t0);
    }
    if (m0.record_index) ok = ok && m1.record_index && *m1.record_index >= *m0.record_index;
    failures += !ok;
  }
  return {failures == 0, std::to_string(10'000 - failures) + "/10000 pairs hold, " +
                             std::to_string(boundary_cases) + " at a completion time"};
}

Outcome interpolation_fidelity() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(-60, 60);
  std::uniform_real_distribution<double> speed(-15, 15);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  std::uniform_real_distribution<double> yaw_rate(-1.5, 1.5);
  std::uniform_int_distribution<int> count(1, 8);
  std::uniform_int_distribution<int> seconds(2, 8);
  double worst_center = 0;
  double worst_yaw = 0;
  bool shapes_ok = true;
  for (int scene = 0; scene < 100; ++scene) {
    asap::SceneSpec spec;
    spec.scene_id = "fid" + std::to_string(scene);
    spec.duration_s = seconds(rng);
    for (int i = count(rng); i > 0; --i) {
      asap::ObjectSpec o;
      o.center = {pos(rng), pos(rng), 0.8};
      o.velocity = {speed(rng), speed(rng)};
      o.yaw = yaw(rng);
      o.yaw_rate = yaw_rate(rng);
      spec.objects.push_back(o);
    }
    const auto dense = asap::gen_scene(spec);
    std::vector<asap::FrameAnnotations> keys;
    for (const auto& f : dense) {
      if (f.is_keyframe) keys.push_back(f);
    }
    asap::TemporalDatabase db;
    db.scene_id = spec.scene_id;
    const auto rebuilt = asap::extend_annotations(keys, db, {});
    if (rebuilt.size() != dense.size()) {
      shapes_ok = false;
      continue;
    }
    for (std::size_t k = 0; k < dense.size(); ++k) {
      if (rebuilt[k].timestamp_us != dense[k].timestamp_us ||
          rebuilt[k].boxes.size() != dense[k].boxes.size()) {
        shapes_ok = false;
        continue;
      }
      for (std::size_t i = 0; i < dense[k].boxes.size(); ++i) {
        const auto& a = rebuilt[k].boxes[i];
        const auto& b = dense[k].boxes[i];
        worst_center = std::max({worst_center, std::abs(a.center.x - b.center.x),
                                 std::abs(a.center.y - b.center.y),
                                 std::abs(a.center.z - b.center.z)});
        worst_yaw = std::max(
            worst_yaw, std::abs(asap::wrap_angle(a.rotation.yaw() - b.rotation.yaw())));
      }
    }
  }
  return {shapes_ok && worst_center <= 1e-9 && worst_yaw <= 1e-9,
          fmt("100 scenes, max center err %.1e m", worst_center) +
              fmt(", max yaw err %.1e rad", worst_yaw)};
}

Outcome auto_clean_late_object() {
  // Car "a" drives through the whole gap; car "late" is only annotated in
  // the second keyframe and moves at 8 m/s.
  auto late_x = [](TimestampUs t) { return 30.0 + 8.0 * t / 1e6; };
  const auto car = [](const char* id, double x, double y, double score) {
    asap::Box3D b;
    b.instance_id = id;
    b.category = "car";
    b.center = {x, y, 0.9};
    b.size = {1.9, 4.6, 1.7};
    b.velocity = {8, 0};
    b.score = score;
    return b;
  };
  const std::vector<asap::FrameAnnotations> keys = {
      {"fig", 0, true, {car("a", 0, 0, 1)}},
      {"fig", 500'000, true, {car("a", 4, 0, 1), car("late", late_x(500'000), 6, 1)}}};

  // Auxiliary detections at 20 Hz; they also see "a", which must be cleaned.
  asap::TemporalDatabase db;
  db.scene_id = "fig";
  for (TimestampUs t = 0; t <= 500'000; t += 50'000) {
    db.entries.push_back(
        {t, {car("db-a", 8.0 * t / 1e6, 0, 0.9), car("db-late", late_x(t), 6, 0.9)}});
  }

  const auto with_db = asap::extend_annotations(keys, db, {});
  const auto without = asap::extend_annotations(keys, {"fig", {}}, {});
  bool present_ok = with_db.size() == 7;
  double worst = 0;
  for (std::size_t k = 1; present_ok && k + 1 < with_db.size(); ++k) {
    const auto& f = with_db[k];
    const auto nearest = asap::query_temporal_db(db, f.timestamp_us, 0.0);
    if (f.boxes.size() != 2 || nearest.size() != 2) {
      present_ok = false;
      break;
    }
    worst = std::max({worst, std::abs(f.boxes[1].center.x - nearest[1].center.x),
                      std::abs(f.boxes[1].center.y - nearest[1].center.y)});
  }
  bool absent_ok = without.size() == 7;
  for (std::size_t k = 1; absent_ok && k + 1 < without.size(); ++k) {
    absent_ok = without[k].boxes.size() == 1 && without[k].boxes[0].instance_id == "a";
  }
  return {present_ok && absent_ok && worst == 0.0,
          std::string("db: late object in 5/5 intermediate frames") +
              fmt(" (max offset from db %.1e m)", worst) +
              (absent_ok ? ", empty db: absent" : ", empty db: PRESENT")};
}

// One object per class, all moving at `speed` in different directions, and a
// matching perfect detector.
asap::SceneSpec class_fixture(double speed, double duration_s) {
  asap::SceneSpec spec;
  spec.scene_id = "fixture";
  spec.duration_s = duration_s;
  const auto& classes = asap::default_classes();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    asap::ObjectSpec o;
    o.category = classes[i];
    const double dir = 2 * kPi * static_cast<double>(i) / classes.size();
    o.center = {30.0 * std::cos(dir), 30.0 * std::sin(dir), 0.5};
    o.velocity = {speed * std::cos(dir), speed * std::sin(dir)};
    o.yaw = dir;
    spec.objects.push_back(o);
  }
  return spec;
}

std::vector<TimestampUs> times_of(const std::vector<asap::FrameAnnotations>& f) {
  std::vector<TimestampUs> out;
  for (const auto& a : f) out.push_back(a.timestamp_us);
  return out;
}

double streaming_map(const asap::SceneSpec& spec, const asap::RuntimeProfile& p,
                     double contention, std::uint64_t seed) {
  const auto gt = asap::gen_scene(spec);
  const auto dets = asap::oracle_detector(gt, {}, seed);
  asap::SimConfig cfg;
  cfg.seed = seed;
  cfg.contention_factor = contention;
  const auto stream = asap::simulate_stream(spec.scene_id, times_of(gt), dets, p, cfg);
  std::vector<asap::FrameDetections> offline;
  for (const auto& [t, d] : dets) offline.push_back(d);
  return asap::evaluate_streaming(gt, stream, offline).map_s;
}

asap::RuntimeProfile constant(double ms) {
  asap::RuntimeProfile p;
  p.name = "const" + std::to_string(static_cast<int>(ms));
  p.distribution = asap::ConstantRuntime{ms};
  return p;
}

// mAP-S predicted independently: hand-written schedule, closed-form
// positions, and a per-object linear scan into the brute-force PR curve.
double oracle_map(const asap::SceneSpec& spec, double runtime_ms) {
  const auto gt = asap::gen_scene(spec);
  const auto frames = times_of(gt);
  const std::vector<std::int64_t> durations(
      frames.size(), static_cast<std::int64_t>(std::llround(runtime_ms * 1000)));
  const auto schedule = oracle::latest_frame_schedule(frames, durations);
  double sum = 0;
  int n = 0;
  for (const auto& obj : spec.objects) {
    auto at = [&](std::int64_t t) {
      const double s = t / 1e6;
      return std::pair{obj.center.x + obj.velocity.x * s, obj.center.y + obj.velocity.y * s};
    };
    std::vector<oracle::TimedPosition> truth;
    for (TimestampUs t : frames) truth.push_back({t, at(t).first, at(t).second});
    std::vector<oracle::Emitted> emitted;
    for (const auto& s : schedule) {
      emitted.push_back({s.completion, at(s.source).first, at(s.source).second, 1.0});
    }
    for (double thr : {0.5, 1.0, 2.0, 4.0}) {
      sum += oracle::single_object_ap(truth, emitted, thr);
      ++n;
    }
  }
  return sum / n;
}

Outcome streaming_degradation() {
  // 4.1 m/s keeps every displacement off the thresholds: at 4 m/s six frames
  // of staleness land exactly on 2 m and rounding decides the match.
  const auto moving = class_fixture(4.1, 6.0);
  const auto still = class_fixture(0.0, 6.0);
  std::string detail;
  bool ok = true;
  double prev = 2.0;
  double worst_oracle = 0;
  for (double ms : {40.0, 250.0, 1000.0}) {
    const double got = streaming_map(moving, constant(ms), 1.0, 0);
    const double want = oracle_map(moving, ms);
    const double s = streaming_map(still, constant(ms), 1.0, 0);
    worst_oracle = std::max(worst_oracle, std::abs(got - want));
    ok = ok && got < prev && std::abs(s - 1.0) <= 1e-9;
    prev = got;
    detail += fmt("%.0fms:", ms) + fmt("%.4f", got) + fmt("(oracle %.4f)", want) +
              fmt("/static %.4f ", s);
  }
  ok = ok && worst_oracle <= 1e-9 && prev == 0.0;
  return {ok, detail + fmt("oracle |err|=%.1e", worst_oracle)};
}

struct CenterError {
  double sum = 0;
  std::size_t n = 0;
};

// Adds |center - truth| over every refined box of every served timestamp.
void add_center_errors(const asap::PredictionStream& s,
                       const std::vector<asap::FrameAnnotations>& gt,
                       CenterError& acc) {
  std::map<TimestampUs, const asap::FrameAnnotations*> by_t;
  for (const auto& f : gt) by_t[f.timestamp_us] = &f;
  for (const auto& rec : s.records) {
    for (const auto& ref : rec.refinements) {
      const auto* frame = by_t.at(ref.eval_us);
      for (const auto& b : ref.boxes) {
        for (const auto& g : frame->boxes) {
          if (g.instance_id != b.instance_id) continue;
          acc.sum += asap::center_distance(b.center, g.center);
          ++acc.n;
        }
      }
    }
  }
}

Outcome baseline_gain() {
  int wins = 0;
  CenterError kalman;
  CenterError cv;
  const auto profile = constant(250);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> speed(3, 12);
    std::uniform_real_distribution<double> dir(-kPi, kPi);
    std::uniform_real_distribution<double> pos(-40, 40);
    asap::SceneSpec spec;
    spec.scene_id = "cv" + std::to_string(seed);
    spec.duration_s = 6.0;
    spec.seed = seed;
    for (int i = 0; i < 8; ++i) {
      asap::ObjectSpec o;
      o.category = asap::default_classes()[static_cast<std::size_t>(i) % 3];
      o.center = {pos(rng), pos(rng), 0.5};
      const double a = dir(rng);
      const double v = speed(rng);
      o.velocity = {v * std::cos(a), v * std::sin(a)};
      o.yaw = a;
      spec.objects.push_back(o);
    }
    const auto gt = asap::gen_scene(spec);
    asap::DetectorNoise noise;
    noise.vel_sigma = 0.5;
    const auto dets = asap::oracle_detector(gt, noise, seed);
    asap::SimConfig cfg;
    cfg.seed = seed;
    const auto raw = asap::simulate_stream(spec.scene_id, times_of(gt), dets, profile, cfg);
    const auto sv = asap::sv_pipeline(raw, times_of(gt), {});
    const auto sv_cv =
        asap::sv_pipeline(raw, times_of(gt), {}, asap::SvMode::kConstantVelocity);

    std::vector<asap::FrameDetections> offline;
    for (const auto& [t, d] : dets) offline.push_back(d);
    asap::EvalConfig refined;
    refined.use_refinements = true;
    const double raw_map = asap::evaluate_streaming(gt, raw, offline).map_s;
    const double sv_map = asap::evaluate_streaming(gt, sv, offline, refined).map_s;
    wins += sv_map > raw_map;
    add_center_errors(sv, gt, kalman);
    add_center_errors(sv_cv, gt, cv);
  }
  const double k = kalman.sum / static_cast<double>(kalman.n);
  const double c = cv.sum / static_cast<double>(cv.n);
  return {wins >= 95 && k < c, "sv beats raw on " + std::to_string(wins) +
                                   "/100 seeds; mean center err kalman " +
                                   fmt("%.4f m", k) + fmt(" vs cv %.4f m", c)};
}

Outcome contention_monotone() {
  const auto spec = class_fixture(4.1, 8.0);
  asap::RuntimeProfile p;
  p.name = "emp";
  p.distribution = asap::EmpiricalRuntime{{55, 61, 70, 78, 90, 104, 118}};
  double prev = 2.0;
  bool ok = true;
  std::string detail;
  for (double f : {1.0, 2.0, 4.0, 8.0}) {
    const double m = streaming_map(spec, p, f, 11);
    ok = ok && m <= prev;
    prev = m;
    detail += fmt("x%.0f:", f) + fmt("%.4f ", m);
  }
  return {ok, detail};
}

Outcome geometry_oracles() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> c(-1.5, 1.5);
  std::uniform_real_distribution<double> d(0.5, 4.0);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  double worst_iou = 0;
  for (int i = 0; i < 200; ++i) {
    const asap::BevRect a{c(rng), c(rng), d(rng), d(rng), yaw(rng)};
    const asap::BevRect b{c(rng), c(rng), d(rng), d(rng), yaw(rng)};
    worst_iou = std::max(worst_iou, std::abs(asap::bev_iou(a, b) -
                                             oracle::monte_carlo_iou(a, b, 1'000'000, rng)));
  }
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> ang(-3 * kPi, 3 * kPi);
  std::uniform_real_distribution<double> frac(0, 1);
  double worst_slerp = 0;
  for (int i = 0; i < 10'000; ++i) {
    std::array<double, 3> n{g(rng), g(rng), g(rng)};
    const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    for (double& x : n) x /= len;
    const double a0 = ang(rng);
    const double a1 = ang(rng);
    const double u = frac(rng);
    const auto s = oracle::axis_angle(n, a0);
    const auto e = oracle::axis_angle(n, a1);
    const auto got = asap::slerp(asap::Quaternion::normalized(s[0], s[1], s[2], s[3]),
                                 asap::Quaternion::normalized(e[0], e[1], e[2], e[3]), u);
    worst_slerp = std::max(
        worst_slerp, oracle::rotation_gap(got.wxyz(), oracle::coaxial_slerp(n, a0, a1, u)));
  }
  return {worst_iou <= 2e-3 && worst_slerp <= 1e-9,
          fmt("iou max|err| %.1e over 200 pairs", worst_iou) +
              fmt(", slerp max|err| %.1e over 10^4", worst_slerp)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "asap_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto at = [&](const char* f) { return (dir / f).string(); };
  std::ofstream(at("spec.json")) << R"({
    "scene_id": "det", "duration_s": 4, "rate_hz": 12, "seed": 3,
    "objects": [
      {"category": "car", "center": [0, 0, 0], "size": [1.9, 4.6, 1.7], "velocity": [7, 1], "yaw_rate": 0.2},
      {"category": "bus", "center": [20, -5, 0], "size": [2.9, 11, 3.4], "velocity": [-4, 0]},
      {"category": "pedestrian", "center": [-6, 4, 0], "size": [0.7, 0.7, 1.8], "velocity": [0.3, 1.1]}],
    "detector": {"pos_sigma": 0.1, "vel_sigma": 0.5, "drop_rate": 0.05, "score_model": "inverse_error"}})";
  std::ofstream(at("profile.json"))
      << R"({"name":"ln","distribution":"lognormal","params":{"mu":5.0,"sigma":0.4}})";

  const std::vector<std::vector<std::string>> commands = {
      {"synth", "--spec", at("spec.json"), "--out-gt", at("gt.jsonl"), "--out-det",
       at("det.jsonl")},
      {"interpolate", "--gt", at("gt.jsonl"), "--tdb", at("det.jsonl"), "--out",
       at("dense.jsonl")},
      {"simulate", "--det", at("det.jsonl"), "--gt", at("dense.jsonl"), "--profile",
       at("profile.json"), "--seed", "5", "--contention", "1.5", "--out",
       at("stream.jsonl")},
      {"baseline-sv", "--stream", at("stream.jsonl"), "--gt", at("dense.jsonl"), "--out",
       at("sv.jsonl")},
      {"evaluate", "--gt", at("dense.jsonl"), "--stream", at("stream.jsonl"), "--offline",
       at("det.jsonl"), "--out", at("raw.json"), "--csv", at("raw.csv")},
      {"evaluate", "--gt", at("dense.jsonl"), "--stream", at("sv.jsonl"), "--offline",
       at("det.jsonl"), "--sv", "--out", at("sv.json")},
      {"report", at("raw.json"), at("sv.json"), "--out", at("table.csv"), "--pivot",
       at("pivot.csv")},
      {"report", "--compare", at("raw.json"), at("sv.json"), "--out", at("cmp.csv")},
  };
  const char* outputs[] = {"gt.jsonl",  "det.jsonl", "dense.jsonl", "stream.jsonl",
                           "sv.jsonl",  "raw.json",  "raw.csv",     "sv.json",
                           "table.csv", "pivot.csv", "cmp.csv"};

  std::map<std::string, std::string> first;
  for (int round = 0; round < 2; ++round) {
    for (auto args : commands) {
      args.push_back("--quiet");
      std::ostringstream out;
      std::ostringstream err;
      if (asap::cli::run(args, out, err) != asap::cli::kExitOk) {
        return {false, args[0] + " failed: " + err.str()};
      }
    }
    for (const char* f : outputs) {
      const std::string bytes = slurp(dir / f);
      if (round == 0) {
        first[f] = bytes;
      } else if (bytes != first[f] || bytes.empty()) {
        return {false, std::string(f) + " differs between runs"};
      }
    }
  }
  fs::remove_all(dir);
  return {true, "6 subcommands, " + std::to_string(std::size(outputs)) +
                    " outputs identical across reruns"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"NDS-S regression", nds_regression},
      {"theta matching", theta_matching},
      {"interpolation fidelity", interpolation_fidelity},
      {"auto-clean late object", auto_clean_late_object},
      {"streaming degradation", streaming_degradation},
      {"baseline gain direction", baseline_gain},
      {"contention monotonicity", contention_monotone},
      {"geometry oracles", geometry_oracles},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %zu %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}

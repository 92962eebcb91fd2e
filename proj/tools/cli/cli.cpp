#include "cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "asap/baseline.hpp"
#include "asap/data.hpp"
#include "asap/error.hpp"
#include "asap/interp.hpp"
#include "asap/metrics.hpp"
#include "asap/stream_sim.hpp"
#include "asap/synth.hpp"
#include "cli/manifest.hpp"
#include "cli/report_table.hpp"
#include "json.hpp"

namespace asap::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// Top-level keys set global options; nested objects address subcommands,
// e.g. {"seed": 3, "evaluate": {"tp-threshold": 1.0}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool,
                        std::string) const override {
    return {};
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    Json j;
    try {
      in >> j;
    } catch (const Json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) {
      throw CLI::ConversionError("config: expected a JSON object");
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static void flatten(const Json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v, key));
      } else {
        item.inputs.push_back(scalar(value, key));
      }
      items.push_back(std::move(item));
    }
  }

  static std::string scalar(const Json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config: unsupported value for '" + key + "'");
  }
};

std::size_t thread_cap() {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("ASAP_STREAM_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    throw ValidationError("ASAP_STREAM_THREADS must be a positive integer");
  }
  return static_cast<std::size_t>(n);
}

// Runs fn(0..n-1) on up to thread_cap() threads. Results keep index order and
// the lowest-index failure is rethrown, so output never depends on
// scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(n, thread_cap());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct Session {
  std::ostream& err;
  bool quiet = false;
  std::uint64_t seed = 0;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  void info(const std::string& msg) const {
    if (!quiet) err << msg << '\n';
  }
  void input(const fs::path& p) { inputs.push_back(p); }
  void wrote(const fs::path& p) {
    outputs.push_back(p);
    info("wrote " + p.string());
  }
};

template <typename Record>
std::map<std::string, std::vector<Record>> by_scene(
    const std::vector<Record>& all) {
  std::map<std::string, std::vector<Record>> out;
  for (auto& group : split_by_scene(all)) {
    const std::string id = group.front().scene_id;
    out.emplace(id, std::move(group));
  }
  return out;
}

template <typename T>
std::vector<T> flatten(std::vector<std::vector<T>> groups) {
  std::vector<T> out;
  for (auto& g : groups) {
    std::move(g.begin(), g.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<TimestampUs> timestamps_of(
    const std::vector<FrameAnnotations>& frames) {
  std::vector<TimestampUs> ts;
  ts.reserve(frames.size());
  for (const auto& f : frames) ts.push_back(f.timestamp_us);
  return ts;
}

// --- interpolate -----------------------------------------------------------

struct InterpolateArgs {
  std::string gt;
  std::string tdb;
  std::string out;
  InterpolationConfig cfg;
};

void cmd_interpolate(const InterpolateArgs& a, Session& s) {
  a.cfg.validate();
  s.input(a.gt);
  const auto scenes = split_by_scene(load_scene_annotations(a.gt));
  std::map<std::string, TemporalDatabase> dbs;
  if (!a.tdb.empty()) {
    s.input(a.tdb);
    for (auto& db : load_temporal_databases(a.tdb)) {
      const std::string id = db.scene_id;
      dbs.emplace(id, std::move(db));
    }
  }
  auto dense = parallel_map<std::vector<FrameAnnotations>>(
      scenes.size(), [&](std::size_t i) {
        TemporalDatabase db;
        db.scene_id = scenes[i].front().scene_id;
        if (auto it = dbs.find(db.scene_id); it != dbs.end()) db = it->second;
        return extend_annotations(scenes[i], db, a.cfg);
      });
  save_scene_annotations(a.out, flatten(std::move(dense)));
  s.wrote(a.out);
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  std::string out_gt;
  std::string out_det;
};

void cmd_synth(const SynthArgs& a, bool seed_given, Session& s) {
  s.input(a.spec);
  SynthFile f = parse_synth_spec(read_file(a.spec));
  if (seed_given) f.scene.seed = s.seed;
  s.seed = f.scene.seed;
  const auto frames = gen_scene(f.scene);
  const auto det = oracle_detector(frames, f.detector, f.scene.seed);
  std::vector<FrameDetections> det_frames;
  for (const auto& [t, d] : det) det_frames.push_back(d);
  save_scene_annotations(a.out_gt, frames);
  s.wrote(a.out_gt);
  save_detections(a.out_det, det_frames);
  s.wrote(a.out_det);
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string det;
  std::string gt;
  std::string profile;
  std::string out;
  double contention = 1.0;
  int input_frame_interval = 1;
};

void cmd_simulate(const SimulateArgs& a, Session& s) {
  SimConfig cfg;
  cfg.seed = s.seed;
  cfg.contention_factor = a.contention;
  cfg.input_frame_interval = a.input_frame_interval;
  cfg.validate();

  s.input(a.det);
  s.input(a.gt);
  s.input(a.profile);
  const auto det = load_detections(a.det);
  const auto scenes = split_by_scene(load_scene_annotations(a.gt));
  const RuntimeProfile profile = load_runtime_profile(a.profile);

  std::map<std::string, std::map<TimestampUs, FrameDetections>> outputs;
  for (const auto& f : det) outputs[f.scene_id].emplace(f.source_timestamp_us, f);

  // Every scene replays its own generator seeded with --seed.
  auto streams =
      parallel_map<PredictionStream>(scenes.size(), [&](std::size_t i) {
        const std::string& id = scenes[i].front().scene_id;
        auto it = outputs.find(id);
        if (it == outputs.end()) {
          throw ValidationError("no detections for scene '" + id + "'");
        }
        return simulate_stream(id, timestamps_of(scenes[i]), it->second,
                               profile, cfg);
      });
  save_streams(a.out, streams);
  s.wrote(a.out);
}

// --- baseline-sv -----------------------------------------------------------

struct BaselineArgs {
  std::string stream;
  std::string gt;
  std::string out;
  std::string mode = "kalman";
  KalmanConfig cfg;
};

void cmd_baseline(const BaselineArgs& a, Session& s) {
  a.cfg.validate();
  s.input(a.stream);
  s.input(a.gt);
  const auto streams = load_streams(a.stream);
  const auto gt = by_scene(load_scene_annotations(a.gt));
  const SvMode mode =
      a.mode == "cv" ? SvMode::kConstantVelocity : SvMode::kKalman;
  auto refined =
      parallel_map<PredictionStream>(streams.size(), [&](std::size_t i) {
        auto it = gt.find(streams[i].scene_id);
        if (it == gt.end()) {
          throw ValidationError("no ground truth for scene '" +
                                streams[i].scene_id + "'");
        }
        return sv_pipeline(streams[i], timestamps_of(it->second), a.cfg, mode);
      });
  save_streams(a.out, refined);
  s.wrote(a.out);
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string gt;
  std::string stream;
  std::string offline;
  std::string out;
  std::string csv;
  bool sv = false;
  bool score_warmup = false;
  bool ave_keyframes_only = false;
  double tp_threshold = 2.0;
};

void cmd_evaluate(const EvaluateArgs& a, Session& s) {
  EvalConfig cfg;
  cfg.tp_threshold = a.tp_threshold;
  cfg.use_refinements = a.sv;
  cfg.score_warmup = a.score_warmup;
  cfg.ave_keyframes_only = a.ave_keyframes_only;
  cfg.validate();

  s.input(a.gt);
  s.input(a.stream);
  s.input(a.offline);
  const auto scenes = split_by_scene(load_scene_annotations(a.gt));
  std::map<std::string, PredictionStream> streams;
  for (auto& st : load_streams(a.stream)) {
    const std::string id = st.scene_id;
    if (!streams.emplace(id, std::move(st)).second) {
      throw ValidationError("duplicate stream for scene '" + id + "'");
    }
  }
  const auto offline = by_scene(load_detections(a.offline));

  auto parts =
      parallel_map<StreamingAccumulator>(scenes.size(), [&](std::size_t i) {
        const std::string& id = scenes[i].front().scene_id;
        auto st = streams.find(id);
        if (st == streams.end()) {
          throw ValidationError("no stream for scene '" + id + "'");
        }
        StreamingAccumulator acc(cfg);
        auto off = offline.find(id);
        acc.add_scene(scenes[i], st->second,
                      off == offline.end() ? std::vector<FrameDetections>{}
                                           : off->second);
        return acc;
      });
  StreamingAccumulator total(cfg);
  for (const auto& p : parts) total.merge(p);
  const MetricReport report = total.finalize();

  write_file(a.out, report_json(report));
  s.wrote(a.out);
  if (!a.csv.empty()) {
    write_file(a.csv, report_csv(report));
    s.wrote(a.csv);
  }
  s.info("map_s=" + std::to_string(report.map_s) +
         " nds_s=" + std::to_string(report.nds_s));
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> reports;
  std::vector<std::string> compare;
  std::string out;
  std::string pivot;
};

NamedReport load_named(const std::string& path, Session& s) {
  s.input(path);
  return {path, load_report(path)};
}

void cmd_report(const ReportArgs& a, Session& s) {
  if (!a.compare.empty()) {
    if (!a.reports.empty() || !a.pivot.empty()) {
      throw ValidationError("--compare cannot be combined with other reports");
    }
    const NamedReport lhs = load_named(a.compare[0], s);
    const NamedReport rhs = load_named(a.compare[1], s);
    write_file(a.out, compare_csv(lhs, rhs));
    s.wrote(a.out);
    return;
  }
  std::vector<NamedReport> reports;
  for (const auto& p : a.reports) reports.push_back(load_named(p, s));
  write_file(a.out, summary_csv(reports));
  s.wrote(a.out);
  if (!a.pivot.empty()) {
    write_file(a.pivot, pivot_csv(reports));
    s.wrote(a.pivot);
  }
}

// ---------------------------------------------------------------------------

void snapshot_options(const CLI::App* app, const std::string& prefix,
                      std::vector<ConfigEntry>& out) {
  for (const CLI::Option* opt : app->get_options()) {
    if (opt == app->get_help_ptr() || opt == app->get_config_ptr()) continue;
    std::vector<std::string> values = opt->results();
    if (values.empty()) {
      if (opt->get_default_str().empty()) continue;
      values.push_back(opt->get_default_str());
    }
    out.push_back({prefix + opt->get_single_name(), std::move(values)});
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();

  CLI::App app{"Streaming 3D detection evaluation toolkit", "asap_stream"};
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::uint64_t seed = 0;
  bool quiet = false;
  auto* seed_opt =
      app.add_option("--seed", seed, "Seed for every random draw");
  app.set_config("--config", "", "JSON file with option values");
  app.add_flag("--quiet", quiet, "Suppress progress messages");
  app.set_version_flag("--version", ASAP_VERSION);

  InterpolateArgs ia;
  auto* interp = app.add_subcommand(
      "interpolate", "Densify keyframe annotations to a target rate");
  interp->add_option("--gt", ia.gt, "Keyframe annotations (JSON-Lines)")
      ->required();
  interp->add_option("--tdb", ia.tdb, "Temporal database (detection schema)");
  interp->add_option("--rate", ia.cfg.target_rate_hz, "Target rate in Hz");
  interp->add_option("--clean-iou", ia.cfg.clean_iou_threshold,
                     "BEV IoU at which a database box counts as duplicate");
  interp->add_option("--min-db-score", ia.cfg.min_db_score,
                     "Minimum score of database boxes");
  interp->add_option("--out", ia.out, "Dense annotations output")->required();

  SynthArgs ya;
  auto* synth =
      app.add_subcommand("synth", "Generate a synthetic scene and detections");
  synth->add_option("--spec", ya.spec, "Scene spec (JSON)")->required();
  synth->add_option("--out-gt", ya.out_gt, "Ground truth output")->required();
  synth->add_option("--out-det", ya.out_det, "Detections output")->required();

  SimulateArgs sa;
  auto* sim = app.add_subcommand(
      "simulate", "Replay detector outputs under a runtime profile");
  sim->add_option("--det", sa.det, "Per-frame detector outputs")->required();
  sim->add_option("--gt", sa.gt, "Annotations giving the input frame times")
      ->required();
  sim->add_option("--profile", sa.profile, "Runtime profile (JSON)")
      ->required();
  sim->add_option("--contention", sa.contention, "Runtime slowdown factor");
  sim->add_option("--input-frame-interval", sa.input_frame_interval,
                  "History spacing recorded with the stream");
  sim->add_option("--out", sa.out, "Stream output")->required();

  BaselineArgs ba;
  auto* base = app.add_subcommand(
      "baseline-sv", "Attach velocity-updated boxes for every eval timestamp");
  base->add_option("--stream", ba.stream, "Input stream")->required();
  base->add_option("--gt", ba.gt, "Annotations giving the eval timestamps")
      ->required();
  base->add_option("--mode", ba.mode, "kalman or cv")
      ->check(CLI::IsMember({"kalman", "cv"}));
  base->add_option("--assoc-iou", ba.cfg.assoc_iou_threshold,
                   "Minimum BEV IoU for track association");
  base->add_option("--q-pos", ba.cfg.process_noise_pos);
  base->add_option("--q-vel", ba.cfg.process_noise_vel);
  base->add_option("--r-pos", ba.cfg.meas_noise_pos);
  base->add_option("--r-vel", ba.cfg.meas_noise_vel);
  base->add_option("--max-coast-us", ba.cfg.max_coast_us,
                   "Drop tracks not updated for this long");
  base->add_option("--out", ba.out, "Refined stream output")->required();

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "Score a stream");
  eval->add_option("--gt", ea.gt, "Dense annotations")->required();
  eval->add_option("--stream", ea.stream, "Stream to score")->required();
  eval->add_option("--offline", ea.offline,
                   "Per-frame detector outputs for the velocity error")
      ->required();
  eval->add_option("--out", ea.out, "Report JSON output")->required();
  eval->add_option("--csv", ea.csv, "Optional CSV output");
  eval->add_flag("--sv", ea.sv, "Score the stream's refinements");
  eval->add_flag("--score-warmup", ea.score_warmup,
                 "Count frames before the first completion as missed");
  eval->add_flag("--ave-keyframes-only", ea.ave_keyframes_only,
                 "Velocity error against keyframes only");
  eval->add_option("--tp-threshold", ea.tp_threshold,
                   "Center distance for true-positive errors (m)");

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Tabulate or compare reports");
  rep->add_option("reports", ra.reports, "Report JSON files");
  rep->add_option("--compare", ra.compare, "Two reports to diff")
      ->expected(2);
  rep->add_option("--out", ra.out, "CSV output")->required();
  rep->add_option("--pivot", ra.pivot,
                  "Optional CSV of mAP-S/NDS-S across contention factors");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto selected = app.get_subcommands();
    err << (selected.empty() ? app.help() : selected.front()->help());
    return kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  Session s{err, quiet, seed, {}, {}};
  try {
    if (const CLI::Option* cfg = app.get_config_ptr(); cfg->count() > 0) {
      s.input(cfg->as<std::string>());
    }
    if (sub == interp) {
      cmd_interpolate(ia, s);
    } else if (sub == synth) {
      cmd_synth(ya, seed_opt->count() > 0, s);
    } else if (sub == sim) {
      cmd_simulate(sa, s);
    } else if (sub == base) {
      cmd_baseline(ba, s);
    } else if (sub == eval) {
      cmd_evaluate(ea, s);
    } else {
      if (ra.reports.empty() && ra.compare.empty()) {
        throw ValidationError("report: no reports given");
      }
      cmd_report(ra, s);
    }

    RunManifest m;
    m.command.push_back("asap_stream");
    m.command.insert(m.command.end(), args.begin(), args.end());
    m.subcommand = sub->get_name();
    snapshot_options(&app, "", m.config);
    snapshot_options(sub, sub->get_name() + ".", m.config);
    m.inputs = s.inputs;
    m.outputs = s.outputs;
    m.seed = s.seed;
    m.started = started;
    m.elapsed_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    write_manifests(m);
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace asap::cli

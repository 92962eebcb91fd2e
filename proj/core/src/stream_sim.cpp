#include "asap/stream_sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "asap/error.hpp"
#include "asap/random.hpp"
#include "json_codec.hpp"

namespace asap {

using codec::BoxKind;
using codec::Json;
using codec::OrderedJson;

namespace {

constexpr int kStreamSchemaVersion = 1;

double draw_ms(const RuntimeDistribution& dist, SimRng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalRuntime>) {
          return d.samples_ms[uniform_index(rng, d.samples_ms.size())];
        } else if constexpr (std::is_same_v<T, ConstantRuntime>) {
          return d.ms;
        } else {
          return std::exp(d.mu + d.sigma * standard_normal(rng));
        }
      },
      dist);
}

}  // namespace

void SimConfig::validate() const {
  if (!std::isfinite(contention_factor) || contention_factor < 1.0) {
    throw ValidationError("contention factor must be >= 1");
  }
  if (input_frame_interval < 1) {
    throw ValidationError("input_frame_interval must be >= 1");
  }
}

void PredictionStream::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.completion_us < r.source_us) {
      throw ValidationError("record completes before its source frame");
    }
    if (i > 0) {
      if (r.completion_us <= records[i - 1].completion_us) {
        throw ValidationError("stream completions must strictly increase");
      }
      if (r.source_us < records[i - 1].source_us) {
        throw ValidationError("stream source timestamps decrease");
      }
    }
  }
}

TimestampUs sample_runtime(const RuntimeProfile& profile, SimRng& rng) {
  const double ms = draw_ms(profile.distribution, rng) *
                        profile.contention_factor +
                    profile.overhead_ms;
  const auto us = static_cast<TimestampUs>(std::llround(ms * 1000.0));
  return std::max<TimestampUs>(us, 1);
}

PredictionStream simulate_stream(
    const std::string& scene_id,
    const std::vector<TimestampUs>& frame_timestamps,
    const std::map<TimestampUs, FrameDetections>& outputs,
    const RuntimeProfile& profile, const SimConfig& cfg) {
  cfg.validate();
  validate_profile(profile);
  for (std::size_t i = 1; i < frame_timestamps.size(); ++i) {
    if (frame_timestamps[i] <= frame_timestamps[i - 1]) {
      throw ValidationError("unsorted scene");
    }
  }

  RuntimeProfile effective = profile;
  effective.contention_factor *= cfg.contention_factor;

  PredictionStream stream;
  stream.scene_id = scene_id;
  stream.metadata = {profile.name, cfg.seed, effective.contention_factor,
                     cfg.input_frame_interval};
  if (frame_timestamps.empty()) return stream;

  SimRng rng(cfg.seed);
  const auto& ts = frame_timestamps;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(ts.size());
  std::ptrdiff_t last = -1;
  TimestampUs now = ts.front();

  // Work starting after the last input frame could never be scored.
  while (now <= ts.back()) {
    // Newest frame already captured at `now`.
    const std::ptrdiff_t newest =
        std::upper_bound(ts.begin(), ts.end(), now) - ts.begin() - 1;
    if (newest <= last) {
      if (last + 1 >= n) break;
      now = ts[static_cast<std::size_t>(last + 1)];
      continue;
    }
    const TimestampUs source = ts[static_cast<std::size_t>(newest)];
    auto it = outputs.find(source);
    if (it == outputs.end()) {
      throw ValidationError("missing detector output at " +
                            std::to_string(source));
    }
    const TimestampUs done = now + sample_runtime(effective, rng);
    StreamRecord rec;
    rec.completion_us = done;
    rec.source_us = source;
    rec.detections = it->second;
    rec.detections.scene_id = scene_id;
    rec.detections.source_timestamp_us = source;
    stream.records.push_back(std::move(rec));
    last = newest;
    now = done;
  }
  return stream;
}

std::vector<RuntimeProfile> contention_sweep(
    const RuntimeProfile& base, const std::vector<double>& factors) {
  validate_profile(base);
  std::vector<RuntimeProfile> out;
  out.reserve(factors.size());
  for (double f : factors) {
    if (!std::isfinite(f) || f < 1.0) {
      throw ValidationError("contention factor must be >= 1");
    }
    RuntimeProfile p = base;
    p.contention_factor = base.contention_factor * f;
    out.push_back(std::move(p));
  }
  return out;
}

void write_streams(std::ostream& out,
                   const std::vector<PredictionStream>& streams) {
  for (const auto& s : streams) {
    OrderedJson h;
    h["kind"] = "header";
    h["schema_version"] = kStreamSchemaVersion;
    h["scene_id"] = s.scene_id;
    h["profile"] = s.metadata.profile_name;
    h["seed"] = s.metadata.seed;
    h["contention_factor"] = s.metadata.contention_factor;
    h["input_frame_interval"] = s.metadata.input_frame_interval;
    h["records"] = s.records.size();
    out << h.dump() << '\n';
    for (const auto& r : s.records) {
      OrderedJson j;
      j["kind"] = "record";
      j["scene_id"] = s.scene_id;
      j["completion_us"] = r.completion_us;
      j["source_us"] = r.source_us;
      j["boxes"] = codec::boxes_to_json(r.detections.boxes, BoxKind::kDetection);
      if (!r.refinements.empty()) {
        OrderedJson arr = OrderedJson::array();
        for (const auto& ref : r.refinements) {
          OrderedJson e;
          e["eval_us"] = ref.eval_us;
          e["boxes"] = codec::boxes_to_json(ref.boxes, BoxKind::kDetection);
          arr.push_back(std::move(e));
        }
        j["refinements"] = std::move(arr);
      }
      out << j.dump() << '\n';
    }
  }
}

std::vector<PredictionStream> read_streams(std::istream& in) {
  std::vector<PredictionStream> streams;
  std::size_t expected = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = codec::line_context(line_no);
    const Json j = codec::parse(line, where);
    const std::string kind = codec::require_string(j, "kind", where);
    if (kind == "header") {
      if (!streams.empty() && streams.back().records.size() != expected) {
        throw ValidationError(where + "previous scene is truncated");
      }
      const auto version = codec::require_integer(j, "schema_version", where);
      if (version != kStreamSchemaVersion) {
        throw ValidationError(where + "unsupported stream schema_version " +
                              std::to_string(version));
      }
      PredictionStream s;
      s.scene_id = codec::require_string(j, "scene_id", where);
      s.metadata.profile_name = codec::require_string(j, "profile", where);
      s.metadata.seed =
          codec::require(j, "seed", where).get<std::uint64_t>();
      s.metadata.contention_factor =
          codec::require_number(j, "contention_factor", where);
      s.metadata.input_frame_interval = static_cast<int>(
          codec::require_integer(j, "input_frame_interval", where));
      expected = static_cast<std::size_t>(
          codec::require_integer(j, "records", where));
      streams.push_back(std::move(s));
    } else if (kind == "record") {
      if (streams.empty()) {
        throw ValidationError(where + "record before any header");
      }
      PredictionStream& s = streams.back();
      if (codec::require_string(j, "scene_id", where) != s.scene_id) {
        throw ValidationError(where + "scene mismatch");
      }
      StreamRecord r;
      r.completion_us = codec::require_integer(j, "completion_us", where);
      r.source_us = codec::require_integer(j, "source_us", where);
      r.detections.scene_id = s.scene_id;
      r.detections.source_timestamp_us = r.source_us;
      r.detections.boxes = codec::boxes_from_json(
          codec::require(j, "boxes", where), BoxKind::kDetection, where);
      if (auto it = j.find("refinements"); it != j.end()) {
        if (!it->is_array()) {
          throw ValidationError(where + "refinements: expected array");
        }
        for (const auto& e : *it) {
          EvalRefinement ref;
          ref.eval_us = codec::require_integer(e, "eval_us", where);
          ref.boxes = codec::boxes_from_json(codec::require(e, "boxes", where),
                                             BoxKind::kDetection, where);
          r.refinements.push_back(std::move(ref));
        }
      }
      if (r.completion_us < r.source_us) {
        throw ValidationError(where + "record completes before its source frame");
      }
      if (!s.records.empty()) {
        const StreamRecord& prev = s.records.back();
        if (r.completion_us <= prev.completion_us) {
          throw ValidationError(where + "stream completions must strictly increase");
        }
        if (r.source_us < prev.source_us) {
          throw ValidationError(where + "stream source timestamps decrease");
        }
      }
      s.records.push_back(std::move(r));
    } else {
      throw ValidationError(where + "unknown line kind '" + kind + "'");
    }
  }
  if (!streams.empty() && streams.back().records.size() != expected) {
    throw ValidationError("stream file truncated: scene " +
                          streams.back().scene_id);
  }
  return streams;
}

void save_streams(const std::filesystem::path& path,
                  const std::vector<PredictionStream>& streams) {
  std::ostringstream os;
  write_streams(os, streams);
  write_file(path, os.str());
}

std::vector<PredictionStream> load_streams(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_streams(in);
}

}  // namespace asap

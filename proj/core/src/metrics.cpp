#include "asap/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "asap/error.hpp"
#include "json_codec.hpp"

namespace asap {

using codec::Json;
using codec::OrderedJson;

namespace {

constexpr double kMinRecall = 0.1;
constexpr double kMinPrecision = 0.1;
constexpr int kRecallBins = 100;  // 101 grid points, 0..1

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& default_classes() {
  static const std::vector<std::string> kClasses = {
      "car",     "truck",      "bus",        "trailer",
      "construction_vehicle",  "pedestrian", "motorcycle",
      "bicycle", "traffic_cone", "barrier"};
  return kClasses;
}

MatchResult match_recent(const PredictionStream& stream, TimestampUs t_eval) {
  MatchResult m;
  m.eval_us = t_eval;
  const auto& recs = stream.records;
  auto it = std::lower_bound(
      recs.begin(), recs.end(), t_eval,
      [](const StreamRecord& r, TimestampUs t) { return r.completion_us < t; });
  if (it != recs.begin()) {
    const auto idx = static_cast<std::size_t>(std::prev(it) - recs.begin());
    m.record_index = idx;
    m.staleness_us = t_eval - recs[idx].completion_us;
  }
  return m;
}

BoxMatch match_boxes(const std::vector<Box3D>& gt,
                     const std::vector<Box3D>& pred, const std::string& cls,
                     double threshold_m) {
  if (!(threshold_m > 0.0)) {
    throw ValidationError("distance threshold must be > 0");
  }
  BoxMatch out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].category == cls) out.ranked_predictions.push_back(i);
  }
  std::stable_sort(out.ranked_predictions.begin(),
                   out.ranked_predictions.end(),
                   [&pred](std::size_t a, std::size_t b) {
                     return pred[a].score > pred[b].score;
                   });

  std::vector<char> taken(gt.size(), 0);
  for (std::size_t pi : out.ranked_predictions) {
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
      if (taken[gi] || gt[gi].category != cls) continue;
      const double d = center_distance(pred[pi].center, gt[gi].center);
      if (d <= threshold_m && (!best || d < best_d)) {
        best = gi;
        best_d = d;
      }
    }
    if (best) {
      taken[*best] = 1;
      out.pairs.emplace_back(*best, pi);
    } else {
      out.false_positives.push_back(pi);
    }
  }
  for (std::size_t gi = 0; gi < gt.size(); ++gi) {
    if (!taken[gi] && gt[gi].category == cls) out.false_negatives.push_back(gi);
  }
  return out;
}

std::optional<double> compute_ap(const std::vector<ScoredOutcome>& outcomes,
                                 std::size_t num_gt) {
  if (num_gt == 0) return std::nullopt;
  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&outcomes](std::size_t a, std::size_t b) {
                     return outcomes[a].score > outcomes[b].score;
                   });

  const std::size_t n = order.size();
  std::vector<std::size_t> cum_tp(n);
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[order[i]].true_positive) ++tp;
    cum_tp[i] = tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Monotone envelope: best precision at this recall or any higher one.
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }

  const int first_bin = static_cast<int>(std::lround(kMinRecall * kRecallBins)) + 1;
  double area = 0.0;
  std::size_t cursor = 0;
  for (int k = first_bin; k <= kRecallBins; ++k) {
    // First operating point with recall >= k / 100, in exact integer math.
    while (cursor < n && cum_tp[cursor] * kRecallBins <
                             static_cast<std::size_t>(k) * num_gt) {
      ++cursor;
    }
    const double p = cursor < n ? precision[cursor] : 0.0;
    area += std::max(p - kMinPrecision, 0.0);
  }
  const double bins = static_cast<double>(kRecallBins - first_bin + 1);
  return std::clamp(area / bins / (1.0 - kMinPrecision), 0.0, 1.0);
}

double scale_error(const Size3& a, const Size3& b) {
  const double inter = std::min(a.width, b.width) *
                       std::min(a.length, b.length) *
                       std::min(a.height, b.height);
  const double va = a.width * a.length * a.height;
  const double vb = b.width * b.length * b.height;
  return 1.0 - inter / (va + vb - inter);
}

double orientation_error(const Quaternion& a, const Quaternion& b) {
  return std::abs(wrap_angle(a.yaw() - b.yaw()));
}

double velocity_error(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

TpErrors compute_tp_errors(const std::vector<TpPair>& pairs) {
  if (pairs.empty()) return {};
  double ate = 0.0;
  double ase = 0.0;
  double aoe = 0.0;
  double aae = 0.0;
  for (const auto& p : pairs) {
    ate += center_distance(p.pred->center, p.gt->center);
    ase += scale_error(p.pred->size, p.gt->size);
    aoe += orientation_error(p.pred->rotation, p.gt->rotation);
    aae += p.pred->attribute == p.gt->attribute ? 0.0 : 1.0;
  }
  const double n = static_cast<double>(pairs.size());
  return {ate / n, ase / n, aoe / n, aae / n};
}

double compute_nds_s(const NdsInputs& in) {
  double tp_sum = 0.0;
  for (double e : {in.ave, in.ate_s, in.ase_s, in.aoe_s, in.aae_s}) {
    tp_sum += 1.0 - std::min(1.0, e);
  }
  return (5.0 * in.map_s + tp_sum) / 10.0;
}

void EvalConfig::validate() const {
  if (classes.empty()) throw ValidationError("no classes to evaluate");
  if (thresholds.empty()) throw ValidationError("no distance thresholds");
  for (double t : thresholds) {
    if (!(t > 0.0)) throw ValidationError("distance threshold must be > 0");
  }
  if (!(tp_threshold > 0.0)) {
    throw ValidationError("tp threshold must be > 0");
  }
}

StreamingAccumulator::StreamingAccumulator(EvalConfig cfg)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  for (const auto& c : cfg_.classes) {
    for (double t : cfg_.thresholds) ap_[{c, t}];
    errors_[c];
    velocity_[c];
  }
}

void StreamingAccumulator::add_scene(
    const std::vector<FrameAnnotations>& gt, const PredictionStream& stream,
    const std::vector<FrameDetections>& offline) {
  if (gt.empty()) throw ValidationError("empty ground truth");
  const std::string& scene = gt.front().scene_id;
  for (const auto& f : gt) {
    if (f.scene_id != scene) throw ValidationError("scene mismatch");
  }
  if (stream.scene_id != scene) throw ValidationError("scene mismatch");
  stream.validate();
  if (!stream_meta_) stream_meta_ = stream.metadata;
  refined_ = refined_ || cfg_.use_refinements;
  ++scenes_;

  static const std::vector<Box3D> kEmpty;
  for (const auto& frame : gt) {
    const MatchResult m = match_recent(stream, frame.timestamp_us);
    if (!m.record_index && !stream.records.empty() && !cfg_.score_warmup) {
      continue;
    }
    ++eval_frames_;
    const std::vector<Box3D>* pred = &kEmpty;
    if (m.record_index) {
      const StreamRecord& rec = stream.records[*m.record_index];
      if (cfg_.use_refinements) {
        auto it = std::find_if(
            rec.refinements.begin(), rec.refinements.end(),
            [&](const EvalRefinement& r) { return r.eval_us == frame.timestamp_us; });
        if (it == rec.refinements.end()) {
          throw ValidationError("missing refinement for eval timestamp " +
                                std::to_string(frame.timestamp_us));
        }
        pred = &it->boxes;
      } else {
        pred = &rec.detections.boxes;
      }
    }

    for (const auto& cls : cfg_.classes) {
      for (double thr : cfg_.thresholds) {
        const BoxMatch bm = match_boxes(frame.boxes, *pred, cls, thr);
        ApBucket& bucket = ap_[{cls, thr}];
        bucket.num_gt += bm.pairs.size() + bm.false_negatives.size();
        std::vector<char> is_tp(pred->size(), 0);
        for (const auto& [g, p] : bm.pairs) is_tp[p] = 1;
        for (std::size_t p : bm.ranked_predictions) {
          bucket.outcomes.push_back({(*pred)[p].score, is_tp[p] != 0});
        }
      }
      const BoxMatch tm = match_boxes(frame.boxes, *pred, cls, cfg_.tp_threshold);
      ErrorSums& es = errors_[cls];
      for (const auto& [g, p] : tm.pairs) {
        const Box3D& gb = frame.boxes[g];
        const Box3D& pb = (*pred)[p];
        es.ate += center_distance(pb.center, gb.center);
        es.ase += scale_error(pb.size, gb.size);
        es.aoe += orientation_error(pb.rotation, gb.rotation);
        es.aae += pb.attribute == gb.attribute ? 0.0 : 1.0;
        ++es.n;
      }
      counts_.tp += tm.pairs.size();
      counts_.fp += tm.false_positives.size();
      counts_.fn += tm.false_negatives.size();
    }
  }

  // Offline velocity error against each output's own source frame.
  std::map<TimestampUs, const FrameAnnotations*> by_time;
  for (const auto& f : gt) by_time.emplace(f.timestamp_us, &f);
  for (const auto& det : offline) {
    if (det.scene_id != scene) throw ValidationError("scene mismatch");
    auto it = by_time.find(det.source_timestamp_us);
    if (it == by_time.end()) continue;
    const FrameAnnotations& frame = *it->second;
    if (cfg_.ave_keyframes_only && !frame.is_keyframe) continue;
    for (const auto& cls : cfg_.classes) {
      const BoxMatch bm = match_boxes(frame.boxes, det.boxes, cls, cfg_.tp_threshold);
      VelocitySums& vs = velocity_[cls];
      vs.num_gt += bm.pairs.size() + bm.false_negatives.size();
      for (const auto& [g, p] : bm.pairs) {
        vs.sum += velocity_error(det.boxes[p].velocity, frame.boxes[g].velocity);
        ++vs.n;
      }
    }
  }
}

void StreamingAccumulator::merge(const StreamingAccumulator& other) {
  for (const auto& [key, b] : other.ap_) {
    ApBucket& mine = ap_[key];
    mine.outcomes.insert(mine.outcomes.end(), b.outcomes.begin(), b.outcomes.end());
    mine.num_gt += b.num_gt;
  }
  for (const auto& [cls, e] : other.errors_) {
    ErrorSums& mine = errors_[cls];
    mine.ate += e.ate;
    mine.ase += e.ase;
    mine.aoe += e.aoe;
    mine.aae += e.aae;
    mine.n += e.n;
  }
  for (const auto& [cls, v] : other.velocity_) {
    VelocitySums& mine = velocity_[cls];
    mine.sum += v.sum;
    mine.n += v.n;
    mine.num_gt += v.num_gt;
  }
  counts_.tp += other.counts_.tp;
  counts_.fp += other.counts_.fp;
  counts_.fn += other.counts_.fn;
  if (!stream_meta_) stream_meta_ = other.stream_meta_;
  refined_ = refined_ || other.refined_;
  scenes_ += other.scenes_;
  eval_frames_ += other.eval_frames_;
}

MetricReport StreamingAccumulator::finalize() const {
  MetricReport r;
  r.config = cfg_;

  std::vector<std::string> present;
  double ap_sum = 0.0;
  std::size_t ap_n = 0;
  for (const auto& cls : cfg_.classes) {
    bool has_gt = false;
    for (double thr : cfg_.thresholds) {
      auto it = ap_.find({cls, thr});
      if (it == ap_.end()) continue;
      if (auto ap = compute_ap(it->second.outcomes, it->second.num_gt)) {
        r.per_class_ap[{cls, thr}] = *ap;
        ap_sum += *ap;
        ++ap_n;
        has_gt = true;
      }
    }
    if (has_gt) present.push_back(cls);
  }
  if (present.empty()) {
    throw ValidationError("no ground truth boxes for the evaluated classes");
  }
  r.map_s = ap_sum / static_cast<double>(ap_n);

  TpErrors mean{0.0, 0.0, 0.0, 0.0};
  for (const auto& cls : present) {
    const ErrorSums& e = errors_.at(cls);
    TpErrors ce;
    if (e.n > 0) {
      const double n = static_cast<double>(e.n);
      ce = {e.ate / n, e.ase / n, e.aoe / n, e.aae / n};
    }
    r.per_class_tp[cls] = ce;
    mean.ate += ce.ate;
    mean.ase += ce.ase;
    mean.aoe += ce.aoe;
    mean.aae += ce.aae;
  }
  const double nc = static_cast<double>(present.size());
  r.ate_s = mean.ate / nc;
  r.ase_s = mean.ase / nc;
  r.aoe_s = mean.aoe / nc;
  r.aae_s = mean.aae / nc;

  double ave_sum = 0.0;
  std::size_t ave_classes = 0;
  for (const auto& cls : cfg_.classes) {
    auto it = velocity_.find(cls);
    if (it == velocity_.end() || it->second.num_gt == 0) continue;
    const VelocitySums& v = it->second;
    ave_sum += v.n > 0 ? v.sum / static_cast<double>(v.n) : 1.0;
    ++ave_classes;
  }
  r.ave_offline = ave_classes > 0 ? ave_sum / static_cast<double>(ave_classes) : 1.0;

  r.nds_s = compute_nds_s(r.nds_inputs());
  r.counts = counts_;
  if (stream_meta_) {
    r.metadata.profile_name = stream_meta_->profile_name;
    r.metadata.seed = stream_meta_->seed;
    r.metadata.contention_factor = stream_meta_->contention_factor;
    r.metadata.input_frame_interval = stream_meta_->input_frame_interval;
  }
  r.metadata.refined = refined_;
  r.metadata.scenes = scenes_;
  r.metadata.eval_frames = eval_frames_;
  return r;
}

MetricReport evaluate_streaming(const std::vector<FrameAnnotations>& gt,
                                const PredictionStream& stream,
                                const std::vector<FrameDetections>& offline,
                                const EvalConfig& cfg) {
  StreamingAccumulator acc(cfg);
  acc.add_scene(gt, stream, offline);
  return acc.finalize();
}

double compute_ave_offline(const std::vector<FrameDetections>& outputs,
                           const std::vector<FrameAnnotations>& gt,
                           const EvalConfig& cfg) {
  cfg.validate();
  std::map<std::pair<std::string, TimestampUs>, const FrameAnnotations*> by_key;
  for (const auto& f : gt) by_key.emplace(std::pair{f.scene_id, f.timestamp_us}, &f);

  std::map<std::string, std::pair<double, std::size_t>> sums;
  std::map<std::string, std::size_t> num_gt;
  for (const auto& det : outputs) {
    auto it = by_key.find({det.scene_id, det.source_timestamp_us});
    if (it == by_key.end()) continue;
    const FrameAnnotations& frame = *it->second;
    if (cfg.ave_keyframes_only && !frame.is_keyframe) continue;
    for (const auto& cls : cfg.classes) {
      const BoxMatch bm = match_boxes(frame.boxes, det.boxes, cls, cfg.tp_threshold);
      num_gt[cls] += bm.pairs.size() + bm.false_negatives.size();
      auto& [sum, n] = sums[cls];
      for (const auto& [g, p] : bm.pairs) {
        sum += velocity_error(det.boxes[p].velocity, frame.boxes[g].velocity);
        ++n;
      }
    }
  }
  double total = 0.0;
  std::size_t classes = 0;
  for (const auto& [cls, n_gt] : num_gt) {
    if (n_gt == 0) continue;
    const auto& [sum, n] = sums[cls];
    total += n > 0 ? sum / static_cast<double>(n) : 1.0;
    ++classes;
  }
  return classes > 0 ? total / static_cast<double>(classes) : 1.0;
}

std::string report_json(const MetricReport& r) {
  OrderedJson j;
  j["schema_version"] = kReportSchemaVersion;
  j["map_s"] = r.map_s;
  j["nds_s"] = r.nds_s;
  j["ate_s"] = r.ate_s;
  j["ase_s"] = r.ase_s;
  j["aoe_s"] = r.aoe_s;
  j["aae_s"] = r.aae_s;
  j["ave_offline"] = r.ave_offline;
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}};
  OrderedJson aps = OrderedJson::array();
  for (const auto& [key, ap] : r.per_class_ap) {
    aps.push_back({{"class", key.first}, {"threshold_m", key.second}, {"ap", ap}});
  }
  j["per_class_ap"] = std::move(aps);
  OrderedJson tps = OrderedJson::array();
  for (const auto& [cls, e] : r.per_class_tp) {
    tps.push_back({{"class", cls},
                   {"ate", e.ate},
                   {"ase", e.ase},
                   {"aoe", e.aoe},
                   {"aae", e.aae}});
  }
  j["per_class_tp"] = std::move(tps);
  j["metadata"] = {{"profile", r.metadata.profile_name},
                   {"seed", r.metadata.seed},
                   {"contention_factor", r.metadata.contention_factor},
                   {"input_frame_interval", r.metadata.input_frame_interval},
                   {"refined", r.metadata.refined},
                   {"scenes", r.metadata.scenes},
                   {"eval_frames", r.metadata.eval_frames}};
  j["config"] = {{"classes", r.config.classes},
                 {"thresholds_m", r.config.thresholds},
                 {"tp_threshold_m", r.config.tp_threshold},
                 {"score_warmup", r.config.score_warmup},
                 {"use_refinements", r.config.use_refinements},
                 {"ave_keyframes_only", r.config.ave_keyframes_only}};
  return j.dump(2) + "\n";
}

static MetricReport parse_report_impl(const std::string& json_text) {
  const std::string where = "report: ";
  const Json j = codec::parse(json_text, where);
  const auto version = codec::require_integer(j, "schema_version", where);
  if (version != kReportSchemaVersion) {
    throw ValidationError(where + "schema version mismatch (got " +
                          std::to_string(version) + ", want " +
                          std::to_string(kReportSchemaVersion) + ")");
  }
  MetricReport r;
  r.map_s = codec::require_number(j, "map_s", where);
  r.nds_s = codec::require_number(j, "nds_s", where);
  r.ate_s = codec::require_number(j, "ate_s", where);
  r.ase_s = codec::require_number(j, "ase_s", where);
  r.aoe_s = codec::require_number(j, "aoe_s", where);
  r.aae_s = codec::require_number(j, "aae_s", where);
  r.ave_offline = codec::require_number(j, "ave_offline", where);
  const Json& counts = codec::require(j, "counts", where);
  r.counts.tp = counts.at("tp").get<std::size_t>();
  r.counts.fp = counts.at("fp").get<std::size_t>();
  r.counts.fn = counts.at("fn").get<std::size_t>();
  for (const auto& e : codec::require(j, "per_class_ap", where)) {
    r.per_class_ap[{codec::require_string(e, "class", where),
                    codec::require_number(e, "threshold_m", where)}] =
        codec::require_number(e, "ap", where);
  }
  for (const auto& e : codec::require(j, "per_class_tp", where)) {
    r.per_class_tp[codec::require_string(e, "class", where)] = {
        codec::require_number(e, "ate", where),
        codec::require_number(e, "ase", where),
        codec::require_number(e, "aoe", where),
        codec::require_number(e, "aae", where)};
  }
  const Json& m = codec::require(j, "metadata", where);
  r.metadata.profile_name = codec::require_string(m, "profile", where);
  r.metadata.seed = codec::require(m, "seed", where).get<std::uint64_t>();
  r.metadata.contention_factor = codec::require_number(m, "contention_factor", where);
  r.metadata.input_frame_interval =
      static_cast<int>(codec::require_integer(m, "input_frame_interval", where));
  r.metadata.refined = codec::require_bool(m, "refined", where);
  r.metadata.scenes = codec::require(m, "scenes", where).get<std::size_t>();
  r.metadata.eval_frames = codec::require(m, "eval_frames", where).get<std::size_t>();
  const Json& c = codec::require(j, "config", where);
  r.config.classes = codec::require(c, "classes", where).get<std::vector<std::string>>();
  r.config.thresholds = codec::require(c, "thresholds_m", where).get<std::vector<double>>();
  r.config.tp_threshold = codec::require_number(c, "tp_threshold_m", where);
  r.config.score_warmup = codec::require_bool(c, "score_warmup", where);
  r.config.use_refinements = codec::require_bool(c, "use_refinements", where);
  r.config.ave_keyframes_only = codec::require_bool(c, "ave_keyframes_only", where);
  return r;
}

MetricReport parse_report(const std::string& json_text) {
  return codec::guarded("report: ", [&] { return parse_report_impl(json_text); });
}

MetricReport load_report(const std::filesystem::path& path) {
  return parse_report(read_file(path));
}

std::string report_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "row,class,threshold_m,ap,map_s,nds_s,ate_s,ase_s,aoe_s,ave,aae_s\n";
  for (const auto& [key, ap] : r.per_class_ap) {
    os << "ap," << key.first << ',' << fmt_double(key.second) << ','
       << fmt_double(ap) << ",,,,,,,\n";
  }
  os << "summary,,,," << fmt_double(r.map_s) << ',' << fmt_double(r.nds_s) << ','
     << fmt_double(r.ate_s) << ',' << fmt_double(r.ase_s) << ','
     << fmt_double(r.aoe_s) << ',' << fmt_double(r.ave_offline) << ','
     << fmt_double(r.aae_s) << '\n';
  return os.str();
}

}  // namespace asap

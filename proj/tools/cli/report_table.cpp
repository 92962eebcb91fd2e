#include "cli/report_table.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>
#include <tuple>

#include "asap/error.hpp"

namespace asap::cli {

namespace {

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

struct Metric {
  const char* name;
  double MetricReport::*member;
};

constexpr Metric kMetrics[] = {
    {"map_s", &MetricReport::map_s}, {"nds_s", &MetricReport::nds_s},
    {"ate_s", &MetricReport::ate_s}, {"ase_s", &MetricReport::ase_s},
    {"aoe_s", &MetricReport::aoe_s}, {"ave", &MetricReport::ave_offline},
    {"aae_s", &MetricReport::aae_s},
};

}  // namespace

std::string summary_csv(const std::vector<NamedReport>& reports) {
  if (reports.empty()) throw ValidationError("report: no reports given");
  std::ostringstream os;
  os << "report,profile,seed,contention_factor,refined";
  for (const auto& m : kMetrics) os << ',' << m.name;
  os << '\n';
  for (const auto& [name, r] : reports) {
    os << field(name) << ',' << field(r.metadata.profile_name) << ','
       << r.metadata.seed << ',' << num(r.metadata.contention_factor) << ','
       << (r.metadata.refined ? "true" : "false");
    for (const auto& m : kMetrics) os << ',' << num(r.*m.member);
    os << '\n';
  }
  return os.str();
}

std::string pivot_csv(const std::vector<NamedReport>& reports) {
  if (reports.empty()) throw ValidationError("report: no reports given");
  std::vector<const NamedReport*> rows;
  for (const auto& r : reports) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    const auto& ma = a->report.metadata;
    const auto& mb = b->report.metadata;
    return std::tie(ma.profile_name, ma.refined, ma.contention_factor) <
           std::tie(mb.profile_name, mb.refined, mb.contention_factor);
  });
  std::ostringstream os;
  os << "profile,refined,contention_factor,map_s,nds_s,report\n";
  for (const auto* r : rows) {
    const auto& m = r->report.metadata;
    os << field(m.profile_name) << ',' << (m.refined ? "true" : "false") << ','
       << num(m.contention_factor) << ',' << num(r->report.map_s) << ','
       << num(r->report.nds_s) << ',' << field(r->name) << '\n';
  }
  return os.str();
}

std::string compare_csv(const NamedReport& a, const NamedReport& b) {
  std::ostringstream os;
  os << "metric," << field(a.name) << ',' << field(b.name) << ",delta\n";
  for (const auto& m : kMetrics) {
    const double va = a.report.*m.member;
    const double vb = b.report.*m.member;
    os << m.name << ',' << num(va) << ',' << num(vb) << ',' << num(vb - va)
       << '\n';
  }
  return os.str();
}

}  // namespace asap::cli

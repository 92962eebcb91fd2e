#pragma once

#include <string>
#include <vector>

#include "asap/metrics.hpp"

namespace asap::cli {

struct NamedReport {
  std::string name;
  MetricReport report;
};

// One row per report with its summary metrics. Throws on an empty list.
std::string summary_csv(const std::vector<NamedReport>& reports);

// mAP-S and NDS-S per (profile, refined) series across contention factors,
// factors ascending.
std::string pivot_csv(const std::vector<NamedReport>& reports);

// metric,a,b,delta rows with delta = b - a.
std::string compare_csv(const NamedReport& a, const NamedReport& b);

}  // namespace asap::cli

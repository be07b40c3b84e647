#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bovir/trec_io.hpp"

namespace bovir {

inline constexpr double kGmapFloor = 1e-5;
inline constexpr std::size_t kRecallDepth = 1000;

struct MetricsReport {
  std::map<std::string, double> per_query_ap;
  double map = 0.0;
  double gmap = 0.0;
  double p_at_5 = 0.0;
  double recall_at_1000 = 0.0;
  std::size_t evaluated_query_count = 0;
  /// Run queries without any relevant judgment.
  std::vector<std::string> skipped;
};

/// Non-interpolated AP in run order; unretrieved relevant documents count
/// as zero precision. Absent when the query has no relevant judgment.
std::optional<double> average_precision(const RankedList& run, const Qrels& qrels);

/// MAP, GMAP (AP floored at 1e-5), P@5 and Recall@1000 over the run's
/// queries that have at least one relevant document.
MetricsReport compute_metrics(const RunSet& runs, const Qrels& qrels);

struct ApDiff {
  std::map<std::string, double> diffs;  // AP_a - AP_b, ordered by query id
  std::vector<std::string> excluded;    // evaluated in only one run
};

ApDiff per_query_ap_diff(const RunSet& run_a, const RunSet& run_b, const Qrels& qrels);

/// Per query, keeps whichever run has the higher AP (ties go to run_a).
struct OracleResult {
  MetricsReport metrics;
  std::map<std::string, char> choice;  // 'a' or 'b'
  std::vector<std::string> excluded;
};

OracleResult oracle_merge(const RunSet& run_a, const RunSet& run_b, const Qrels& qrels);

struct Significance {
  double t = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Two-sided paired t-test on per-query AP. All-zero differences give p = 1;
/// constant non-zero differences give an infinite t and p = 0. Throws
/// ArgumentError with fewer than two shared evaluated queries.
Significance paired_significance(const RunSet& run_a, const RunSet& run_b, const Qrels& qrels);

/// `metric<TAB>value` lines.
void write_metrics(std::ostream& out, const MetricsReport& report);
/// `query_id<TAB>ap` lines.
void write_per_query(std::ostream& out, const MetricsReport& report);

}  // namespace bovir

#include "bovir/evaluation.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "bovir/error.hpp"

namespace bovir {

namespace {

struct QueryMetrics {
  double ap = 0.0;
  double p_at_5 = 0.0;
  double recall = 0.0;
};

std::optional<QueryMetrics> evaluate_query(const RankedList& run, const Qrels& qrels) {
  const std::size_t relevant = qrels.num_relevant(run.query_id);
  if (relevant == 0) return std::nullopt;
  QueryMetrics m;
  std::size_t hits = 0;
  double precision_sum = 0.0;
  for (std::size_t i = 0; i < run.docs.size(); ++i) {
    if (qrels.grade(run.query_id, run.docs[i].doc_id) < 1) continue;
    ++hits;
    precision_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    if (i < 5) m.p_at_5 += 1.0;
    if (i < kRecallDepth) m.recall += 1.0;
  }
  m.ap = precision_sum / static_cast<double>(relevant);
  m.p_at_5 /= 5.0;
  m.recall /= static_cast<double>(relevant);
  return m;
}

}  // namespace

std::optional<double> average_precision(const RankedList& run, const Qrels& qrels) {
  auto m = evaluate_query(run, qrels);
  if (!m) return std::nullopt;
  return m->ap;
}

MetricsReport compute_metrics(const RunSet& runs, const Qrels& qrels) {
  MetricsReport report;
  double log_sum = 0.0;
  for (const auto& [qid, list] : runs) {
    auto m = evaluate_query(list, qrels);
    if (!m) {
      report.skipped.push_back(qid);
      continue;
    }
    report.per_query_ap[qid] = m->ap;
    report.map += m->ap;
    report.p_at_5 += m->p_at_5;
    report.recall_at_1000 += m->recall;
    log_sum += std::log(std::max(m->ap, kGmapFloor));
  }
  report.evaluated_query_count = report.per_query_ap.size();
  if (report.evaluated_query_count > 0) {
    const auto n = static_cast<double>(report.evaluated_query_count);
    report.map /= n;
    report.p_at_5 /= n;
    report.recall_at_1000 /= n;
    report.gmap = std::exp(log_sum / n);
  }
  return report;
}

ApDiff per_query_ap_diff(const RunSet& run_a, const RunSet& run_b, const Qrels& qrels) {
  const auto a = compute_metrics(run_a, qrels).per_query_ap;
  const auto b = compute_metrics(run_b, qrels).per_query_ap;
  ApDiff out;
  for (const auto& [qid, ap] : a) {
    auto it = b.find(qid);
    if (it == b.end())
      out.excluded.push_back(qid);
    else
      out.diffs[qid] = ap - it->second;
  }
  for (const auto& [qid, ap] : b)
    if (!a.count(qid)) out.excluded.push_back(qid);
  std::sort(out.excluded.begin(), out.excluded.end());
  return out;
}

OracleResult oracle_merge(const RunSet& run_a, const RunSet& run_b, const Qrels& qrels) {
  const auto a = compute_metrics(run_a, qrels).per_query_ap;
  const auto b = compute_metrics(run_b, qrels).per_query_ap;
  OracleResult out;
  RunSet merged;
  for (const auto& [qid, ap_a] : a) {
    auto it = b.find(qid);
    if (it == b.end()) {
      out.excluded.push_back(qid);
      continue;
    }
    const bool take_a = ap_a >= it->second;
    out.choice[qid] = take_a ? 'a' : 'b';
    merged[qid] = take_a ? run_a.at(qid) : run_b.at(qid);
  }
  for (const auto& [qid, ap] : b)
    if (!a.count(qid)) out.excluded.push_back(qid);
  std::sort(out.excluded.begin(), out.excluded.end());
  out.metrics = compute_metrics(merged, qrels);
  return out;
}

Significance paired_significance(const RunSet& run_a, const RunSet& run_b, const Qrels& qrels) {
  const auto diff = per_query_ap_diff(run_a, run_b, qrels);
  Significance s;
  s.n = diff.diffs.size();
  if (s.n < 2)
    throw ArgumentError(
        fmt::format("paired test needs at least two shared queries, got {}", s.n));
  const auto n = static_cast<double>(s.n);
  double mean = 0.0;
  for (const auto& [qid, d] : diff.diffs) mean += d;
  mean /= n;
  double ss = 0.0;
  for (const auto& [qid, d] : diff.diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    if (mean == 0.0) {
      s.t = 0.0;
      s.p_value = 1.0;
    } else {
      s.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
      s.p_value = 0.0;
    }
    return s;
  }
  s.t = mean / (sd / std::sqrt(n));
  boost::math::students_t dist(n - 1.0);
  s.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(s.t)));
  s.p_value = std::min(1.0, s.p_value);
  return s;
}

void write_metrics(std::ostream& out, const MetricsReport& report) {
  fmt::memory_buffer buf;
  auto line = [&](std::string_view name, double v) {
    fmt::format_to(std::back_inserter(buf), "{}\t{:.6f}\n", name, v);
  };
  line("map", report.map);
  line("gm_map", report.gmap);
  line("P_5", report.p_at_5);
  line("recall_1000", report.recall_at_1000);
  fmt::format_to(std::back_inserter(buf), "num_q\t{}\n", report.evaluated_query_count);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_per_query(std::ostream& out, const MetricsReport& report) {
  fmt::memory_buffer buf;
  for (const auto& [qid, ap] : report.per_query_ap)
    fmt::format_to(std::back_inserter(buf), "{}\t{:.6f}\n", qid, ap);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace bovir

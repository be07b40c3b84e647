#include <bovir/error.hpp>
#include <bovir/evaluation.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace bovir;

namespace {
RankedList ranking(const std::string& qid, const std::vector<std::string>& docs) {
  RankedList l{qid, {}};
  for (std::size_t i = 0; i < docs.size(); ++i)
    l.docs.push_back({docs[i], static_cast<double>(docs.size() - i), i + 1});
  return l;
}

Qrels qrels_of(std::initializer_list<std::tuple<std::string, std::string, int>> rows) {
  Qrels q;
  for (const auto& [qid, doc, g] : rows) q.judgments[qid][doc] = g;
  return q;
}

// A run whose AP for `qid` is exactly 1/rank of its only relevant doc.
RunSet with_ap(const std::map<std::string, int>& rank_of_relevant) {
  RunSet runs;
  for (const auto& [qid, rank] : rank_of_relevant) {
    std::vector<std::string> docs;
    for (int i = 1; i <= 10; ++i) docs.push_back(i == rank ? "rel" : "n" + std::to_string(i));
    runs[qid] = ranking(qid, docs);
  }
  return runs;
}
}  // namespace

TEST(AveragePrecision, WorkedExamples) {
  const auto qrels = qrels_of({{"q", "r1", 1}, {"q", "r2", 2}, {"q", "n", 0}});
  EXPECT_NEAR(*average_precision(ranking("q", {"r1", "n", "r2"}), qrels), (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(*average_precision(ranking("q", {"r1", "n", "r2"}), qrels), 0.8333, 1e-4);
  EXPECT_EQ(*average_precision(ranking("q", {"n", "x"}), qrels), 0.0);
  EXPECT_EQ(*average_precision(ranking("q", {"r2", "r1", "n"}), qrels), 1.0);
  EXPECT_FALSE(average_precision(ranking("other", {"r1"}), qrels));
  EXPECT_FALSE(average_precision(ranking("q", {"r1"}), qrels_of({{"q", "r1", 0}})));
}

TEST(AveragePrecision, InvariantBelowLastRelevant) {
  const auto qrels = qrels_of({{"q", "r1", 1}, {"q", "r2", 1}});
  const auto a = *average_precision(ranking("q", {"x", "r1", "y", "r2", "n1", "n2", "n3"}), qrels);
  const auto b = *average_precision(ranking("q", {"x", "r1", "y", "r2", "n3", "n1", "n2"}), qrels);
  EXPECT_EQ(a, b);
}

TEST(ComputeMetrics, MapGmapPrecisionRecall) {
  Qrels qrels;
  qrels.judgments["a"]["rel"] = 1;
  qrels.judgments["b"]["rel"] = 1;
  const auto r = compute_metrics(with_ap({{"a", 5}, {"b", 1}}), qrels);
  EXPECT_EQ(r.evaluated_query_count, 2u);
  EXPECT_DOUBLE_EQ(r.map, 0.6);
  EXPECT_NEAR(r.gmap, std::sqrt(0.2), 1e-12);
  EXPECT_DOUBLE_EQ(r.p_at_5, 0.2);
  EXPECT_DOUBLE_EQ(r.recall_at_1000, 1.0);
}

TEST(ComputeMetrics, SpecExamples) {
  // AP {0.2, 0.8}: MAP 0.5, GMAP 0.4.
  Qrels qrels;
  RunSet runs;
  qrels.judgments["q1"] = {{"rel", 1}};
  runs["q1"] = ranking("q1", {"a", "b", "c", "d", "rel"});
  qrels.judgments["q2"] = {{"r1", 1}, {"r2", 1}, {"r3", 1}, {"r4", 1}, {"r5", 1}};
  // 0.8 = (1 + 1 + 1 + 1 + 0) / 5
  runs["q2"] = ranking("q2", {"r1", "r2", "r3", "r4"});
  auto r = compute_metrics(runs, qrels);
  EXPECT_NEAR(r.per_query_ap.at("q1"), 0.2, 1e-12);
  EXPECT_NEAR(r.per_query_ap.at("q2"), 0.8, 1e-12);
  EXPECT_NEAR(r.map, 0.5, 1e-12);
  EXPECT_NEAR(r.gmap, 0.4, 1e-12);
  EXPECT_NEAR(r.recall_at_1000, (1.0 + 0.8) / 2, 1e-12);

  // AP 0 takes the 1e-5 floor.
  runs["q1"] = ranking("q1", {"a"});
  r = compute_metrics(runs, qrels);
  EXPECT_NEAR(r.gmap, std::exp((std::log(1e-5) + std::log(0.8)) / 2), 1e-15);

  // Two relevant in the top five.
  qrels.judgments["q3"] = {{"x", 1}, {"y", 1}, {"z", 1}};
  runs = {{"q3", ranking("q3", {"n1", "x", "n2", "y", "n3", "z"})}};
  r = compute_metrics(runs, qrels);
  EXPECT_DOUBLE_EQ(r.p_at_5, 0.4);
}

TEST(ComputeMetrics, SkipsQueriesWithoutJudgments) {
  Qrels qrels;
  qrels.judgments["a"]["rel"] = 1;
  qrels.judgments["z"]["n"] = 0;
  const auto r = compute_metrics(with_ap({{"a", 2}, {"b", 1}, {"z", 1}}), qrels);
  EXPECT_EQ(r.evaluated_query_count, 1u);
  EXPECT_EQ(r.skipped, (std::vector<std::string>{"b", "z"}));
  EXPECT_DOUBLE_EQ(r.map, 0.5);
  const auto empty = compute_metrics({}, qrels);
  EXPECT_EQ(empty.evaluated_query_count, 0u);
  EXPECT_EQ(empty.map, 0.0);
}

TEST(ComputeMetrics, RecallCutoffAtThousand) {
  Qrels qrels;
  qrels.judgments["q"] = {{"early", 1}, {"late", 1}};
  std::vector<std::string> docs{"early"};
  for (int i = 0; i < 1100; ++i) docs.push_back("n" + std::to_string(i));
  docs.push_back("late");
  const auto r = compute_metrics({{"q", ranking("q", docs)}}, qrels);
  EXPECT_DOUBLE_EQ(r.recall_at_1000, 0.5);
}

TEST(ComputeMetrics, MatchesReferenceTool) {
  std::ifstream expected(BOVIR_TEST_DATA "/trec_eval/expected.tsv");
  ASSERT_TRUE(expected);
  const auto r = compute_metrics(read_run_file(BOVIR_TEST_DATA "/trec_eval/run.trec"),
                                 read_qrels_file(BOVIR_TEST_DATA "/trec_eval/qrels.txt"));
  EXPECT_EQ(r.evaluated_query_count, 20u);
  std::string scope, measure;
  double value;
  std::size_t rows = 0;
  while (expected >> scope >> measure >> value) {
    ++rows;
    if (scope != "all") {
      EXPECT_NEAR(r.per_query_ap.at(scope), value, 1e-4) << scope;
    } else if (measure == "map") {
      EXPECT_NEAR(r.map, value, 1e-4);
    } else if (measure == "gm_map") {
      EXPECT_NEAR(r.gmap, value, 1e-4);
    } else if (measure == "P_5") {
      EXPECT_NEAR(r.p_at_5, value, 1e-4);
    } else if (measure == "recall_1000") {
      EXPECT_NEAR(r.recall_at_1000, value, 1e-4);
    }
  }
  EXPECT_EQ(rows, 24u);
}

TEST(ComputeMetrics, QueryOrderDoesNotMatter) {
  Qrels qrels;
  RunSet runs;
  std::mt19937_64 rng(4);
  for (int q = 0; q < 12; ++q) {
    const std::string qid = "q" + std::to_string(q);
    qrels.judgments[qid]["rel"] = 1;
    runs[qid] = with_ap({{qid, 1 + static_cast<int>(rng() % 10)}}).at(qid);
  }
  const auto a = compute_metrics(runs, qrels);
  RunSet reversed;
  for (auto it = runs.rbegin(); it != runs.rend(); ++it) reversed.emplace(it->first, it->second);
  const auto b = compute_metrics(reversed, qrels);
  EXPECT_EQ(a.map, b.map);
  EXPECT_EQ(a.gmap, b.gmap);
}

TEST(ApDiff, DifferencesAndExclusions) {
  Qrels qrels;
  for (auto q : {"a", "b", "c"}) qrels.judgments[q]["rel"] = 1;
  const auto x = with_ap({{"a", 1}, {"b", 2}, {"c", 1}});
  const auto y = with_ap({{"a", 2}, {"b", 2}});
  const auto d = per_query_ap_diff(x, y, qrels);
  EXPECT_DOUBLE_EQ(d.diffs.at("a"), 0.5);
  EXPECT_DOUBLE_EQ(d.diffs.at("b"), 0.0);
  EXPECT_EQ(d.excluded, std::vector<std::string>{"c"});
  const auto back = per_query_ap_diff(y, x, qrels);
  for (const auto& [q, v] : d.diffs) EXPECT_EQ(back.diffs.at(q), -v);
  for (const auto& [q, v] : per_query_ap_diff(x, x, qrels).diffs) EXPECT_EQ(v, 0.0);
}

TEST(Oracle, PerQueryMaximum) {
  Qrels qrels;
  qrels.judgments["q1"] = {{"rel", 1}};
  qrels.judgments["q2"] = {{"rel", 1}};
  // a = (0.2, 0.5), b = (0.25, 0.1)
  const auto a = with_ap({{"q1", 5}, {"q2", 2}});
  const auto b = with_ap({{"q1", 4}, {"q2", 10}});
  const auto o = oracle_merge(a, b, qrels);
  EXPECT_DOUBLE_EQ(o.metrics.map, (0.25 + 0.5) / 2);
  EXPECT_EQ(o.choice.at("q1"), 'b');
  EXPECT_EQ(o.choice.at("q2"), 'a');
  const auto self = oracle_merge(a, a, qrels);
  EXPECT_EQ(self.metrics.map, compute_metrics(a, qrels).map);
  for (const auto& [q, c] : self.choice) EXPECT_EQ(c, 'a');
}

TEST(Significance, Conventions) {
  Qrels qrels;
  for (int q = 0; q < 4; ++q) qrels.judgments["q" + std::to_string(q)] = {{"rel", 1}};
  const auto a = with_ap({{"q0", 1}, {"q1", 2}, {"q2", 4}, {"q3", 5}});
  EXPECT_EQ(paired_significance(a, a, qrels).p_value, 1.0);
  // Constant differences: infinite t.
  const auto shifted = with_ap({{"q0", 2}, {"q1", 2}, {"q2", 4}, {"q3", 5}});
  const auto b = with_ap({{"q0", 1}, {"q1", 1}, {"q2", 1}, {"q3", 1}});
  const auto c = with_ap({{"q0", 2}, {"q1", 2}, {"q2", 2}, {"q3", 2}});
  const auto s = paired_significance(b, c, qrels);
  EXPECT_LT(s.p_value, 0.01);
  EXPECT_TRUE(std::isinf(s.t));
  const auto ab = paired_significance(a, shifted, qrels);
  EXPECT_EQ(ab.p_value, paired_significance(shifted, a, qrels).p_value);
  EXPECT_EQ(ab.n, 4u);
  Qrels one;
  one.judgments["q0"] = {{"rel", 1}};
  EXPECT_THROW(paired_significance(a, b, one), ArgumentError);
}

TEST(Significance, MatchesStudentT) {
  // diffs 0.5, 0.25, 0, -0.05 with df 3.
  Qrels qrels;
  for (int q = 0; q < 4; ++q) qrels.judgments["q" + std::to_string(q)] = {{"rel", 1}};
  const auto a = with_ap({{"q0", 1}, {"q1", 2}, {"q2", 3}, {"q3", 5}});
  const auto b = with_ap({{"q0", 2}, {"q1", 4}, {"q2", 3}, {"q3", 4}});
  const auto s = paired_significance(a, b, qrels);
  const std::vector<double> d{0.5, 0.25, 0.0, 0.2 - 0.25};
  const double mean = (d[0] + d[1] + d[2] + d[3]) / 4;
  double ss = 0;
  for (double x : d) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(s.t, mean / std::sqrt(ss / 3 / 4), 1e-12);
  EXPECT_NEAR(s.p_value, 0.26098016721417805, 1e-9);
}

TEST(MetricsOutput, TsvShape) {
  MetricsReport r;
  r.per_query_ap = {{"q1", 0.5}, {"q2", 0.25}};
  r.map = 0.375;
  r.evaluated_query_count = 2;
  std::ostringstream m, p;
  write_metrics(m, r);
  write_per_query(p, r);
  EXPECT_EQ(m.str(), "map\t0.375000\ngm_map\t0.000000\nP_5\t0.000000\nrecall_1000\t0.000000\nnum_q\t2\n");
  EXPECT_EQ(p.str(), "q1\t0.500000\nq2\t0.250000\n");
}

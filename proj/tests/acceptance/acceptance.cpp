// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <bovir/clustering.hpp>
#include <bovir/evaluation.hpp>
#include <bovir/feedback.hpp>
#include <bovir/index.hpp>
#include <bovir/retrieval.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace bovir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> check;
};

unsigned cores() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<std::string> order(const RankedList& l) {
  std::vector<std::string> ids;
  ids.reserve(l.docs.size());
  for (const auto& d : l.docs) ids.push_back(d.doc_id);
  return ids;
}

Outcome similarity() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim_pick(2, 8), count(1, 12);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int pair = 0; pair < 500; ++pair) {
    const std::size_t dim = dim_pick(rng);
    std::vector<QueryVector> query(count(rng));
    std::vector<CentroidEntry> centroids(count(rng));
    std::vector<Vector> qv, cv;
    for (std::size_t i = 0; i < query.size(); ++i) {
      query[i].term = fmt::format("q{}", i);
      query[i].vector = synth::random_unit_vector(dim, rng);
      qv.push_back(query[i].vector);
    }
    for (std::size_t i = 0; i < centroids.size(); ++i) {
      Vector v(dim);
      for (auto& x : v) x = normal(rng);
      centroids[i] = {static_cast<ClusterId>(i), v, 1};
      cv.push_back(v);
    }
    worst = std::max(worst, std::abs(wvsim_kmeans(query, centroids) - oracle::average_link(qv, cv)));
  }
  if (worst > 1e-9) return {false, fmt::format("max deviation {:.3g}", worst)};

  // Documents with every term once: collapsing to one centroid and keeping
  // every token are the same mean.
  const auto space = unit_normalize(synth::random_space(200, 6, 12));
  KMeansConfig kc;
  kc.k = 8;
  const auto model = cluster_vocabulary(space, kc);
  AnalyzerConfig plain;
  plain.stemming = false;
  std::vector<ParsedDoc> flat;
  for (int d = 0; d < 100; ++d) {
    std::string text;
    for (int w = 0; w < 10; ++w) text += fmt::format("w{} ", (d * 13 + w * 17) % 200);
    flat.push_back({fmt::format("f{}", d), text});
  }
  const auto flat_index = build_index(flat, plain, space, model);
  const auto q = make_query("q", {"w3", "w40", "w77"}, flat_index.term_vectors());
  for (const auto& d : flat)
    if (wvsim_one_cluster(q, flat_index, d.doc_id) != wvsim_no_cluster(q, flat_index, d.doc_id, space))
      return {false, "one_cluster != no_cluster on a tf-1 document " + d.doc_id};
  const auto tf_index = build_index(std::vector<ParsedDoc>{{"t", "w3 w3 w3 w90"}}, plain, space, model);
  const auto tq = make_query("q", {"w3", "w40"}, tf_index.term_vectors());
  if (wvsim_one_cluster(tq, tf_index, "t") == wvsim_no_cluster(tq, tf_index, "t", space))
    return {false, "one_cluster == no_cluster on the tf-weighted document"};
  return {true, fmt::format("max deviation {:.3g} over 500 pairs", worst)};
}

Outcome clustering() {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> k_pick(2, 3), dim_pick(2, 4);
  std::normal_distribution<double> normal;
  int optimal = 0, monotone = 0;
  const int instances = 50;
  for (int inst = 0; inst < instances; ++inst) {
    const int k = k_pick(rng);
    const std::size_t dim = dim_pick(rng);
    std::uniform_int_distribution<int> n_pick(k + 2, 12);
    const int n = n_pick(rng);
    // Centres far apart, members within a small radius: separation ratio > 4.
    std::vector<Vector> centres;
    while (static_cast<int>(centres.size()) < k) {
      Vector c(dim);
      for (auto& x : c) x = 20.0 * normal(rng);
      bool far = true;
      for (const auto& o : centres) far = far && std::sqrt(squared_distance(c, o)) > 10.0;
      if (far) centres.push_back(c);
    }
    std::vector<Vector> points;
    for (int i = 0; i < n; ++i) {
      Vector p = centres[i % k];
      Vector off(dim);
      double len = 0.0;
      for (auto& x : off) {
        x = normal(rng);
        len += x * x;
      }
      const double radius = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      for (std::size_t j = 0; j < dim; ++j) p[j] += radius * off[j] / std::sqrt(len);
      points.push_back(p);
    }
    const auto truth = oracle::best_partition(points, k);
    double best = std::numeric_limits<double>::infinity();
    bool all_monotone = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      KMeansConfig kc;
      kc.k = static_cast<std::size_t>(k);
      kc.seed = seed;
      const auto r = kmeans(points, kc);
      best = std::min(best, r.sse);
      for (std::size_t i = 1; i < r.sse_history.size(); ++i)
        all_monotone = all_monotone && r.sse_history[i] <= r.sse_history[i - 1];
    }
    optimal += best <= truth.sse * (1 + 1e-9) + 1e-12;
    monotone += all_monotone;
  }
  const bool ok = optimal >= 0.95 * instances && monotone == instances;
  return {ok, fmt::format("optimal {}/{}, monotone {}/{}", optimal, instances, monotone, instances)};
}

Outcome reductions() {
  const auto space = unit_normalize(synth::random_space(2000, 16, 31));
  KMeansConfig kc;
  kc.k = 40;
  const auto model = cluster_vocabulary(space, kc);
  const auto corpus = synth::zipf_corpus(1000, 60, space.words(), 32);
  const auto analyzer = AnalyzerConfig::standard();
  const auto index = build_index(corpus, analyzer, space, model);
  const auto topics = synth::sampled_topics(50, corpus, 33);
  ScoringConfig lm, combined, kmeans_default;
  lm.variant = Variant::lm_only;
  combined.alpha = 1.0;
  FeedbackConfig fb;
  fb.beta = 1.0;
  int alpha_same = 0, beta_same = 0;
  for (const auto& t : topics) {
    const auto q = make_query(t.query_id, analyze(t.text, analyzer), index.term_vectors());
    alpha_same += order(combine_and_rank(index, q, combined)) == order(combine_and_rank(index, q, lm));
    const auto first = combine_and_rank(index, q, kmeans_default);
    const auto rm = estimate_relevance_model(index, first, q, fb, kmeans_default.lambda);
    beta_same += search_expanded(index, rm3_expand(q, rm, 1.0), kmeans_default) == first;
  }
  return {alpha_same == 50 && beta_same == 50,
          fmt::format("alpha=1 identical {}/50, beta=1 identical {}/50", alpha_same, beta_same)};
}

Outcome metric_fidelity() {
  const auto r = compute_metrics(read_run_file(BOVIR_TEST_DATA "/trec_eval/run.trec"),
                                 read_qrels_file(BOVIR_TEST_DATA "/trec_eval/qrels.txt"));
  std::ifstream expected(BOVIR_TEST_DATA "/trec_eval/expected.tsv");
  std::string scope, measure;
  double value = 0.0, worst = 0.0;
  std::size_t compared = 0;
  while (expected >> scope >> measure >> value) {
    double got;
    if (scope != "all") got = r.per_query_ap.count(scope) ? r.per_query_ap.at(scope) : -1.0;
    else if (measure == "map") got = r.map;
    else if (measure == "gm_map") got = r.gmap;
    else if (measure == "P_5") got = r.p_at_5;
    else if (measure == "recall_1000") got = r.recall_at_1000;
    else continue;
    worst = std::max(worst, std::abs(got - value));
    ++compared;
  }
  Qrels worked;
  worked.judgments["q"] = {{"r1", 1}, {"r2", 1}, {"n", 0}};
  const double ap = *average_precision({"q", {{"r1", 3, 1}, {"n", 2, 2}, {"r2", 1, 3}}}, worked);
  const bool ok = compared == 24 && r.evaluated_query_count == 20 && worst <= 1e-4 &&
                  std::abs(ap - 0.8333) <= 1e-4;
  return {ok, fmt::format("{} values, max deviation {:.2g}; worked AP {:.4f}", compared, worst, ap)};
}

Outcome oracle_merge_property() {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int dominated = 0, strict = 0;
  for (int pair = 0; pair < 100; ++pair) {
    Qrels qrels;
    RunSet a, b;
    for (int q = 0; q < 8; ++q) {
      const std::string qid = fmt::format("q{}", q);
      std::vector<std::string> docs;
      for (int d = 0; d < 20; ++d) {
        docs.push_back(fmt::format("d{}", d));
        if (unit(rng) < 0.25) qrels.judgments[qid][docs.back()] = 1;
      }
      qrels.judgments[qid]["d0"] = 1;
      auto make = [&](std::vector<std::string> ids) {
        RankedList l{qid, {}};
        for (std::size_t i = 0; i < ids.size(); ++i)
          l.docs.push_back({ids[i], static_cast<double>(ids.size() - i), i + 1});
        return l;
      };
      std::shuffle(docs.begin(), docs.end(), rng);
      a[qid] = make(docs);
      // Every other pair: b is a with relevant documents demoted, so a dominates.
      if (pair % 2 == 0) {
        std::stable_partition(docs.begin(), docs.end(),
                              [&](const std::string& d) { return unit(rng) < 0.5 || !qrels.grade(qid, d); });
      } else {
        std::shuffle(docs.begin(), docs.end(), rng);
      }
      b[qid] = make(docs);
    }
    const auto ma = compute_metrics(a, qrels), mb = compute_metrics(b, qrels);
    const auto o = oracle_merge(a, b, qrels);
    if (o.metrics.map < std::max(ma.map, mb.map))
      return {false, fmt::format("pair {}: oracle MAP below the better run", pair)};
    bool a_ge = true, b_ge = true;
    for (const auto& [qid, ap] : ma.per_query_ap) {
      a_ge = a_ge && ap >= mb.per_query_ap.at(qid);
      b_ge = b_ge && mb.per_query_ap.at(qid) >= ap;
    }
    const bool equal = o.metrics.map == std::max(ma.map, mb.map);
    if (equal != (a_ge || b_ge))
      return {false, fmt::format("pair {}: equality does not match weak dominance", pair)};
    (a_ge || b_ge ? dominated : strict) += 1;
  }
  return {dominated > 0 && strict > 0,
          fmt::format("100 pairs: {} dominated (equal), {} mixed (strictly above)", dominated, strict)};
}

Outcome directional() {
  const auto c = synth::directional_collection({});
  const auto space = unit_normalize(c.space);
  KMeansConfig kc;
  kc.k = 30;
  const auto model = cluster_vocabulary(space, kc);
  const auto analyzer = AnalyzerConfig::standard();
  const auto index = build_index(c.corpus, analyzer, space, model);
  std::vector<Query> queries;
  for (const auto& t : c.topics)
    queries.push_back(make_query(t.query_id, analyze(t.text, analyzer), index.term_vectors()));
  auto map_at = [&](double alpha) {
    ScoringConfig sc;
    sc.alpha = alpha;
    RunSet runs;
    for (const auto& q : queries) runs[q.query_id] = combine_and_rank(index, q, sc);
    return compute_metrics(runs, c.qrels).map;
  };
  std::vector<double> maps;
  std::string table;
  for (int i = 0; i <= 10; ++i) {
    maps.push_back(map_at(i / 10.0));
    table += fmt::format(" {:.1f}:{:.4f}", i / 10.0, maps.back());
  }
  const auto best = static_cast<std::size_t>(std::max_element(maps.begin(), maps.end()) - maps.begin());
  const bool beats = maps[4] > maps[10];
  const bool interior = best > 0 && best < 10 && maps[best] > maps[0] && maps[best] > maps[10];
  return {beats && interior,
          fmt::format("MAP alpha=0.4 {:.4f} vs alpha=1 {:.4f} ({:+.2f}%), argmax alpha={:.1f};{}", maps[4],
                      maps[10], 100.0 * (maps[4] / maps[10] - 1.0), best / 10.0, table)};
}

Outcome determinism() {
  const auto dir = synth::scratch_dir("acceptance_determinism");
  synth::write_collection(synth::directional_collection({}), dir);
  const std::vector<std::string> files = {"model.txt", "run.trec", "metrics.tsv"};
  std::vector<std::string> reference;
  std::ostringstream sink;
  for (unsigned threads : {1u, 2u, 8u}) {
    const auto out = dir / fmt::format("t{}", threads);
    const std::string t = std::to_string(threads);
    const auto p = [&](const char* name) { return (dir / name).string(); };
    std::vector<std::vector<std::string>> steps = {
        {"cluster", "--embeddings", p("embeddings.txt"), "--k", "30", "--seed", "42", "--threads", t,
         "--output", (out / "cluster").string()},
        {"index", "--corpus", p("corpus.tsv"), "--embeddings", p("embeddings.txt"), "--model",
         (out / "cluster/model.txt").string(), "--index", (out / "index").string(), "--threads", t},
        {"search", "--index", (out / "index").string(), "--topics", p("topics.tsv"), "--threads", t,
         "--output", (out / "search").string()},
        {"eval", "--run", (out / "search/run.trec").string(), "--qrels", p("qrels.txt"), "--output",
         (out / "eval").string()},
    };
    for (const auto& args : steps)
      if (const int code = cli::run_cli(args, sink, sink); code != 0)
        return {false, fmt::format("{} failed at {} threads (exit {})", args[0], threads, code)};
    std::vector<std::string> contents = {synth::read_text(out / "cluster/model.txt"),
                                         synth::read_text(out / "search/run.trec"),
                                         synth::read_text(out / "eval/metrics.tsv")};
    if (reference.empty()) {
      reference = contents;
      continue;
    }
    for (std::size_t i = 0; i < files.size(); ++i)
      if (contents[i] != reference[i]) return {false, fmt::format("{} differs at {} threads", files[i], threads)};
  }
  return {true, "model.txt, run.trec and metrics.tsv identical at 1, 2 and 8 threads"};
}

Outcome scale() {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto space = unit_normalize(synth::random_space(50000, 200, 51));
  KMeansConfig kc;
  kc.k = 100;
  kc.threads = cores();
  const auto model = cluster_vocabulary(space, kc);
  const auto t1 = Clock::now();
  const auto corpus = synth::zipf_corpus(10000, 100, space.words(), 52);
  const auto index = build_index(corpus, AnalyzerConfig::standard(), space, model, cores());
  const auto t2 = Clock::now();
  const auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  return {index.num_docs() == 10000 && model.nonempty_clusters() == 100,
          fmt::format("clustered 50000x200 into 100 in {:.1f}s ({} iterations), indexed 10000 docs in {:.1f}s, "
                      "{} threads",
                      secs(t0, t1), model.iterations_run, secs(t1, t2), cores())};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"similarity matches brute force", 10, similarity},
      {"k-means++ reaches the optimal partition", 60, clustering},
      {"alpha=1 and beta=1 reduce to the baselines", 30, reductions},
      {"metrics agree with the reference tool", 10, metric_fidelity},
      {"oracle merge bounds both runs", 10, oracle_merge_property},
      {"directional: clustered similarity improves MAP", 120, directional},
      {"pipeline output independent of thread count", 300, determinism},
      {"scale: 10k docs, 50k words at dim 200", 300, scale},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.ok = false;
      o.detail += fmt::format("; over the {:.0f}s budget", c.budget_seconds);
    }
    failures += !o.ok;
    std::cout << fmt::format("[{}] {} ({:.2f}s): {}", o.ok ? "PASS" : "FAIL", c.name, secs, o.detail) << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
  return failures == 0 ? 0 : 1;
}

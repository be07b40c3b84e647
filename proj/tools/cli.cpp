#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <bovir/clustering.hpp>
#include <bovir/embeddings.hpp>
#include <bovir/error.hpp>
#include <bovir/evaluation.hpp>
#include <bovir/feedback.hpp>
#include <bovir/index.hpp>
#include <bovir/parallel.hpp>
#include <bovir/retrieval.hpp>
#include <bovir/textproc.hpp>
#include <bovir/trec_io.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

namespace bovir::cli {

namespace fs = std::filesystem;

std::string to_config_text(const ExperimentConfig& c) {
  fmt::memory_buffer b;
  auto out = std::back_inserter(b);
  auto s = [&](std::string_view key, const auto& value) { fmt::format_to(out, "{}={}\n", key, value); };
  auto flag = [&](std::string_view key, bool value) { s(key, value ? "true" : "false"); };
  s("corpus", c.corpus);
  s("corpus_format", c.corpus_format);
  s("embeddings", c.embeddings);
  s("model", c.model);
  s("index", c.index);
  s("topics", c.topics);
  s("qrels", c.qrels);
  s("run", c.run);
  s("run_a", c.run_a);
  s("run_b", c.run_b);
  s("output", c.output);
  s("stopwords", c.stopwords);
  flag("stemming", c.stemming);
  flag("lowercase", c.lowercase);
  flag("normalize", c.normalize);
  s("k", c.k);
  s("seed", c.seed);
  s("max_iterations", c.max_iterations);
  s("rel_tol", c.rel_tol);
  s("lambda", c.lambda);
  s("alpha", c.alpha);
  s("variant", c.variant);
  s("rerank_depth", c.rerank_depth);
  s("top_k", c.top_k);
  s("run_tag", c.run_tag);
  s("fb_docs", c.fb_docs);
  s("fb_terms", c.fb_terms);
  s("beta", c.beta);
  s("alphas", c.alphas);
  s("ks", c.ks);
  s("threads", c.threads);
  return fmt::to_string(b);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(const std::string& value, std::string_view flag) {
  if (value.empty()) throw ArgumentError(fmt::format("--{} is required", flag));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed for " + path.string());
}

fs::path prepare_output(const std::string& dir, std::string_view command, const ExperimentConfig& c) {
  require(dir, "output");
  fs::create_directories(dir);
  write_file(fs::path(dir) / fmt::format("{}.config", command), to_config_text(c));
  return dir;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, std::string_view what) {
  std::vector<T> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string_view v = std::string_view(item).substr(b, e - b + 1);
    T value{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw ArgumentError(fmt::format("bad {} entry '{}'", what, v));
    values.push_back(value);
  }
  return values;
}

AnalyzerConfig make_analyzer(const ExperimentConfig& c) {
  AnalyzerConfig a;
  a.stemming = c.stemming;
  a.lowercase = c.lowercase;
  if (c.stopwords == "smart") {
    a.stopwords = smart_stopwords();
  } else if (c.stopwords != "none" && !c.stopwords.empty()) {
    std::istringstream in(read_file(c.stopwords));
    a.stopwords = parse_stopwords(in);
  }
  return a;
}

ScoringConfig make_scoring(const ExperimentConfig& c) {
  ScoringConfig s;
  s.lambda = c.lambda;
  s.alpha = c.alpha;
  s.variant = parse_variant(c.variant);
  s.rerank_depth = c.rerank_depth;
  s.top_k = c.top_k;
  validate(s);
  return s;
}

KMeansConfig make_kmeans(const ExperimentConfig& c, std::size_t k) {
  KMeansConfig m;
  m.k = k;
  m.seed = c.seed;
  m.max_iterations = c.max_iterations;
  m.rel_tol = c.rel_tol;
  m.threads = resolve_threads(c.threads);
  return m;
}

EmbeddingSpace load_space(const ExperimentConfig& c, std::ostream& err) {
  require(c.embeddings, "embeddings");
  auto loaded = load_text_embeddings_file(c.embeddings);
  if (loaded.duplicate_words > 0)
    err << fmt::format("warning: {} duplicate words in {} (last occurrence kept)\n",
                       loaded.duplicate_words, c.embeddings);
  if (c.normalize && !loaded.space.normalized()) return unit_normalize(loaded.space);
  return std::move(loaded.space);
}

std::vector<ParsedDoc> load_corpus(const ExperimentConfig& c) {
  require(c.corpus, "corpus");
  const std::string data = read_file(c.corpus);
  bool trec = c.corpus_format == "trec";
  if (c.corpus_format == "auto") trec = data.find("<DOC>") != std::string::npos;
  else if (c.corpus_format != "trec" && c.corpus_format != "tsv")
    throw ArgumentError("corpus_format must be auto, trec or tsv");
  if (trec) return parse_trec_corpus(data);
  std::istringstream in(data);
  return parse_tsv_corpus(in);
}

Index open_index(const ExperimentConfig& c, const AnalyzerConfig& analyzer) {
  require(c.index, "index");
  Index index = load_index(c.index);
  if (index.analyzer_fingerprint() != analyzer.fingerprint())
    throw ConfigError(fmt::format(
        "analyzer settings differ from those the index at {} was built with "
        "(fingerprint {:08x} vs {:08x}); refusing to run",
        c.index, analyzer.fingerprint(), index.analyzer_fingerprint()));
  return index;
}

std::vector<Query> analyze_topics(const std::vector<Topic>& topics, const AnalyzerConfig& analyzer,
                                  const Index& index, std::ostream& err) {
  std::vector<Query> queries;
  queries.reserve(topics.size());
  for (const auto& t : topics) {
    queries.push_back(make_query(t.query_id, analyze(t.text, analyzer), index.term_vectors()));
    if (queries.back().terms.empty())
      err << fmt::format("warning: topic {} is empty after analysis; no results\n", t.query_id);
  }
  return queries;
}

std::vector<RankedList> search_all(const Index& index, const std::vector<Query>& queries,
                                   const ScoringConfig& scoring, unsigned threads) {
  std::vector<RankedList> lists(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) lists[i] = combine_and_rank(index, queries[i], scoring);
  });
  return lists;
}

RunSet to_run_set(const std::vector<RankedList>& lists) {
  RunSet runs;
  for (const auto& l : lists)
    if (!l.docs.empty()) runs[l.query_id] = l;
  return runs;
}

std::string run_text(const std::vector<RankedList>& lists, std::string_view tag) {
  std::ostringstream s;
  write_run(s, lists, tag);
  return s.str();
}

std::string metrics_text(const MetricsReport& r) {
  std::ostringstream s;
  write_metrics(s, r);
  return s.str();
}

void warn_skipped(const std::vector<std::string>& ids, std::string_view why, std::ostream& err) {
  for (const auto& q : ids) err << fmt::format("warning: query {} {}\n", q, why);
}

// --- commands ---------------------------------------------------------------

void cmd_cluster(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto dir = prepare_output(c.output, "cluster", c);
  const auto start = Clock::now();
  const EmbeddingSpace space = load_space(c, err);
  err << fmt::format("loaded {} vectors of dim {}\n", space.size(), space.dim());
  const ClusterModel model = cluster_vocabulary(space, make_kmeans(c, c.k));
  save_cluster_model_file((dir / "model.txt").string(), model);
  out << fmt::format("sse\t{:.6f}\nnonempty_clusters\t{}\niterations\t{}\n", model.sse,
                     model.nonempty_clusters(), model.iterations_run);
  err << fmt::format("clustered in {:.2f}s\n", seconds_since(start));
}

void cmd_index(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  require(c.model, "model");
  require(c.index, "index");
  const auto start = Clock::now();
  const auto corpus = load_corpus(c);
  const EmbeddingSpace space = load_space(c, err);
  const ClusterModel model = load_cluster_model_file(c.model);
  const Index index = build_index(corpus, make_analyzer(c), space, model, resolve_threads(c.threads));
  persist(index, c.index);
  prepare_output(c.index, "index", c);

  const std::set<std::string> vocab(index.terms().begin(), index.terms().end());
  const auto cov = coverage(space, vocab);
  if (cov.covered < cov.index_vocab_size)
    err << fmt::format("warning: {} of {} index terms have no embedding\n",
                       cov.index_vocab_size - cov.covered, cov.index_vocab_size);
  out << fmt::format("num_docs\t{}\nvocab_size\t{}\nmean_centroids_per_doc\t{:.4f}\n",
                     index.num_docs(), index.vocab_size(), index.mean_centroids_per_doc());
  err << fmt::format("indexed in {:.2f}s\n", seconds_since(start));
}

void cmd_search(const ExperimentConfig& c, std::ostream&, std::ostream& err) {
  require(c.topics, "topics");
  const AnalyzerConfig analyzer = make_analyzer(c);
  const ScoringConfig scoring = make_scoring(c);
  const Index index = open_index(c, analyzer);
  const auto dir = prepare_output(c.output, "search", c);
  for (const auto& w : config_warnings(scoring)) err << "warning: " << w << '\n';

  const auto queries = analyze_topics(read_topics_file(c.topics), analyzer, index, err);
  const auto lists = search_all(index, queries, scoring, resolve_threads(c.threads));
  const std::string tag = c.run_tag.empty() ? c.variant : c.run_tag;
  write_file(dir / "run.trec", run_text(lists, tag));
  err << fmt::format("searched {} topics\n", queries.size());
}

void cmd_feedback(const ExperimentConfig& c, std::ostream&, std::ostream& err) {
  require(c.topics, "topics");
  const AnalyzerConfig analyzer = make_analyzer(c);
  const ScoringConfig scoring = make_scoring(c);
  FeedbackConfig fb;
  fb.fb_docs = c.fb_docs;
  fb.fb_terms = c.fb_terms;
  fb.beta = c.beta;
  validate(fb);
  const Index index = open_index(c, analyzer);
  const auto dir = prepare_output(c.output, "feedback", c);
  const unsigned threads = resolve_threads(c.threads);

  const auto queries = analyze_topics(read_topics_file(c.topics), analyzer, index, err);
  RunSet first;
  if (!c.run.empty())
    first = read_run_file(c.run);
  else
    for (auto& l : search_all(index, queries, scoring, threads)) first[l.query_id] = std::move(l);

  std::vector<RankedList> lists(queries.size());
  std::vector<ExpandedQuery> expanded(queries.size());
  std::vector<std::string> notes(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& q = queries[i];
      lists[i].query_id = q.query_id;
      expanded[i].query_id = q.query_id;
      auto it = first.find(q.query_id);
      if (q.terms.empty()) continue;
      if (it == first.end() || it->second.docs.empty()) {
        notes[i] = fmt::format("warning: no first-pass results for query {}; skipped\n", q.query_id);
        continue;
      }
      const auto model = estimate_relevance_model(index, it->second, q, fb, scoring.lambda);
      expanded[i] = rm3_expand(q, model, fb.beta);
      lists[i] = search_expanded(index, expanded[i], scoring);
    }
  });
  for (const auto& n : notes) err << n;

  const std::string tag = c.run_tag.empty() ? c.variant + "_rm3" : c.run_tag;
  write_file(dir / "run.trec", run_text(lists, tag));
  std::ostringstream eq;
  write_expanded_queries(eq, expanded);
  write_file(dir / "expanded.tsv", eq.str());
}

void cmd_eval(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  require(c.run, "run");
  require(c.qrels, "qrels");
  const auto report = compute_metrics(read_run_file(c.run), read_qrels_file(c.qrels));
  warn_skipped(report.skipped, "has no relevant judgments; excluded", err);
  const std::string text = metrics_text(report);
  out << text;
  if (!c.output.empty()) {
    const auto dir = prepare_output(c.output, "eval", c);
    write_file(dir / "metrics.tsv", text);
    std::ostringstream pq;
    write_per_query(pq, report);
    write_file(dir / "per_query.tsv", pq.str());
  }
}

void cmd_sweep(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  require(c.topics, "topics");
  require(c.qrels, "qrels");
  const AnalyzerConfig analyzer = make_analyzer(c);
  const auto alphas = parse_list<double>(c.alphas, "alphas");
  const auto ks = parse_list<std::size_t>(c.ks, "ks");
  if (alphas.empty()) throw ArgumentError("--alphas is empty");
  const auto dir = prepare_output(c.output, "sweep", c);
  const Qrels qrels = read_qrels_file(c.qrels);
  const auto topics = read_topics_file(c.topics);
  const unsigned threads = resolve_threads(c.threads);

  fmt::memory_buffer table;
  auto row = std::back_inserter(table);
  fmt::format_to(row, "k\talpha\tmap\tgm_map\tP_5\trecall_1000\tstatus\n");
  std::size_t failures = 0;

  auto sweep_alphas = [&](const Index& index, std::size_t k) {
    const auto queries = analyze_topics(topics, analyzer, index, err);
    for (double a : alphas) {
      try {
        ExperimentConfig point = c;
        point.alpha = a;
        const auto report = compute_metrics(
            to_run_set(search_all(index, queries, make_scoring(point), threads)), qrels);
        fmt::format_to(row, "{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\tok\n", k, a, report.map,
                       report.gmap, report.p_at_5, report.recall_at_1000);
      } catch (const std::exception& e) {
        ++failures;
        err << fmt::format("error: k={} alpha={}: {}\n", k, a, e.what());
        fmt::format_to(row, "{}\t{}\t\t\t\t\terror: {}\n", k, a, e.what());
      }
    }
  };

  if (!ks.empty() && !c.corpus.empty() && !c.embeddings.empty()) {
    const auto corpus = load_corpus(c);
    const EmbeddingSpace space = load_space(c, err);
    for (std::size_t k : ks) {
      std::optional<Index> index;
      try {
        const ClusterModel model = cluster_vocabulary(space, make_kmeans(c, k));
        index = build_index(corpus, analyzer, space, model, threads);
      } catch (const std::exception& e) {
        err << fmt::format("error: k={}: {}\n", k, e.what());
        for (double a : alphas) {
          ++failures;
          fmt::format_to(row, "{}\t{}\t\t\t\t\terror: {}\n", k, a, e.what());
        }
        continue;
      }
      sweep_alphas(*index, k);
    }
  } else {
    const Index index = open_index(c, analyzer);
    sweep_alphas(index, index.num_clusters());
  }

  const std::string text = fmt::to_string(table);
  write_file(dir / "sweep.tsv", text);
  out << text;
  if (failures > 0) throw Error(fmt::format("{} grid points failed", failures));
}

void cmd_oracle(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  require(c.run_a, "run-a");
  require(c.run_b, "run-b");
  require(c.qrels, "qrels");
  const Qrels qrels = read_qrels_file(c.qrels);
  const RunSet a = read_run_file(c.run_a);
  const RunSet b = read_run_file(c.run_b);
  const auto ma = compute_metrics(a, qrels);
  const auto mb = compute_metrics(b, qrels);
  const auto oracle = oracle_merge(a, b, qrels);
  warn_skipped(oracle.excluded, "is evaluated in only one run; excluded", err);

  fmt::memory_buffer t;
  auto it = std::back_inserter(t);
  fmt::format_to(it, "metric\trun_a\trun_b\toracle\n");
  fmt::format_to(it, "map\t{:.6f}\t{:.6f}\t{:.6f}\n", ma.map, mb.map, oracle.metrics.map);
  fmt::format_to(it, "gm_map\t{:.6f}\t{:.6f}\t{:.6f}\n", ma.gmap, mb.gmap, oracle.metrics.gmap);
  fmt::format_to(it, "P_5\t{:.6f}\t{:.6f}\t{:.6f}\n", ma.p_at_5, mb.p_at_5, oracle.metrics.p_at_5);
  fmt::format_to(it, "recall_1000\t{:.6f}\t{:.6f}\t{:.6f}\n", ma.recall_at_1000, mb.recall_at_1000,
                 oracle.metrics.recall_at_1000);
  const std::string text = fmt::to_string(t);
  out << text;
  if (!c.output.empty()) {
    const auto dir = prepare_output(c.output, "oracle", c);
    write_file(dir / "oracle.tsv", text);
    fmt::memory_buffer ch;
    for (const auto& [qid, pick] : oracle.choice)
      fmt::format_to(std::back_inserter(ch), "{}\t{:.6f}\t{:.6f}\t{}\n", qid, ma.per_query_ap.at(qid),
                     mb.per_query_ap.at(qid), pick);
    write_file(dir / "choices.tsv", fmt::to_string(ch));
  }
}

void cmd_apdiff(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  require(c.run_a, "run-a");
  require(c.run_b, "run-b");
  require(c.qrels, "qrels");
  const Qrels qrels = read_qrels_file(c.qrels);
  const RunSet a = read_run_file(c.run_a);
  const RunSet b = read_run_file(c.run_b);
  const auto diff = per_query_ap_diff(a, b, qrels);
  warn_skipped(diff.excluded, "is evaluated in only one run; excluded", err);

  fmt::memory_buffer t;
  for (const auto& [qid, d] : diff.diffs) fmt::format_to(std::back_inserter(t), "{}\t{:.6f}\n", qid, d);
  const std::string text = fmt::to_string(t);
  out << text;

  std::string sig_text;
  if (diff.diffs.size() >= 2) {
    const auto sig = paired_significance(a, b, qrels);
    sig_text = fmt::format("t\t{:.6f}\np_value\t{:.6f}\nn\t{}\n", sig.t, sig.p_value, sig.n);
    err << fmt::format("paired t-test: t={:.4f} p={:.4f} n={}\n", sig.t, sig.p_value, sig.n);
  } else {
    err << "warning: fewer than two shared queries; no significance test\n";
  }
  if (!c.output.empty()) {
    const auto dir = prepare_output(c.output, "apdiff", c);
    write_file(dir / "apdiff.tsv", text);
    if (!sig_text.empty()) write_file(dir / "significance.tsv", sig_text);
  }
}

void add_options(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--corpus", c.corpus, "Corpus file (TREC SGML or TSV)");
  app.add_option("--corpus-format", c.corpus_format, "auto, trec or tsv")
      ->check(CLI::IsMember({"auto", "trec", "tsv"}));
  app.add_option("--embeddings", c.embeddings, "word2vec text embeddings");
  app.add_option("--model", c.model, "Cluster model file");
  app.add_option("--index", c.index, "Index directory");
  app.add_option("--topics", c.topics, "Topics (TSV or TREC <top>)");
  app.add_option("--qrels", c.qrels, "Relevance judgments");
  app.add_option("--run", c.run, "Run file");
  app.add_option("--run-a", c.run_a, "First run file");
  app.add_option("--run-b", c.run_b, "Second run file");
  app.add_option("--output", c.output, "Output directory");
  app.add_option("--stopwords", c.stopwords, "smart, none or a file");
  app.add_flag("--stemming,!--no-stemming", c.stemming, "Porter stemming");
  app.add_flag("--lowercase,!--no-lowercase", c.lowercase, "Lowercase tokens");
  app.add_flag("--normalize,!--no-normalize", c.normalize, "Unit-normalize embeddings");
  app.add_option("--k", c.k, "Number of clusters");
  app.add_option("--seed", c.seed, "Clustering seed");
  app.add_option("--max-iterations", c.max_iterations, "Lloyd iteration cap");
  app.add_option("--rel-tol", c.rel_tol, "Relative SSE improvement to stop at");
  app.add_option("--lambda", c.lambda, "Jelinek-Mercer weight");
  app.add_option("--alpha", c.alpha, "Weight of the language model score");
  app.add_option("--variant", c.variant, "lm_only, one_cluster, no_cluster or kmeans")
      ->check(CLI::IsMember({"lm_only", "one_cluster", "no_cluster", "kmeans"}));
  app.add_option("--rerank-depth", c.rerank_depth, "Candidates re-ranked per query");
  app.add_option("--top-k", c.top_k, "Results written per query");
  app.add_option("--run-tag", c.run_tag, "Run tag (default: variant name)");
  app.add_option("--fb-docs", c.fb_docs, "Feedback documents");
  app.add_option("--fb-terms", c.fb_terms, "Expansion terms");
  app.add_option("--beta", c.beta, "Weight of the original query");
  app.add_option("--alphas", c.alphas, "Comma-separated alpha grid");
  app.add_option("--ks", c.ks, "Comma-separated K grid (needs --corpus and --embeddings)");
  app.add_option("--threads", c.threads, "Worker threads, 0 for all cores");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  CLI::App app{"Bag-of-vectors retrieval experiments"};
  app.name("bovir");
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.require_subcommand(1);
  add_options(app, config);

  using Command = std::function<void(const ExperimentConfig&, std::ostream&, std::ostream&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"cluster", "Cluster the embedding vocabulary", cmd_cluster},
      {"index", "Build and persist an index", cmd_index},
      {"search", "Rank documents for a topic set", cmd_search},
      {"feedback", "Relevance-model feedback over a first-pass run", cmd_feedback},
      {"eval", "Compute MAP, GMAP, P@5 and Recall@1000", cmd_eval},
      {"sweep", "Grid search over alpha and K", cmd_sweep},
      {"oracle", "Per-query best-of-two merge", cmd_oracle},
      {"apdiff", "Per-query AP differences and paired t-test", cmd_apdiff},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<const char*> argv{"bovir"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  for (const auto& [name, help, fn] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      fn(config, out, err);
      return 0;
    } catch (const ArgumentError& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

}  // namespace bovir::cli

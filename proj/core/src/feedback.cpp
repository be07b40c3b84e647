#include "bovir/feedback.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "bovir/error.hpp"

namespace bovir {

void validate(const FeedbackConfig& config) {
  if (config.fb_docs == 0) throw ArgumentError("fb_docs must be at least 1");
  if (config.fb_terms == 0) throw ArgumentError("fb_terms must be at least 1");
  if (!(config.beta >= 0.0 && config.beta <= 1.0))
    throw ArgumentError(fmt::format("beta must lie in [0, 1], got {}", config.beta));
}

TermDistribution estimate_relevance_model(const Index& index, const RankedList& initial,
                                          const Query& query, const FeedbackConfig& config,
                                          double lambda) {
  validate(config);
  if (initial.docs.empty())
    throw FeedbackError("query " + initial.query_id + ": no documents to estimate feedback from");

  const std::size_t n = std::min(config.fb_docs, initial.docs.size());
  std::vector<DocId> docs;
  std::vector<double> log_likelihood;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = index.find_doc(initial.docs[i].doc_id);
    if (!id)
      throw FeedbackError("query " + initial.query_id + ": feedback document '" +
                          initial.docs[i].doc_id + "' is not in the index");
    docs.push_back(*id);
    log_likelihood.push_back(lm_log_likelihood(index, index.doc(*id), query, lambda));
  }
  // exp(ll - max) differs from exp(ll) by one factor for every document,
  // which the final normalisation removes; it keeps long queries from underflowing.
  const double shift = *std::max_element(log_likelihood.begin(), log_likelihood.end());
  std::vector<double> posterior(n);
  double posterior_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    posterior[i] = std::exp(log_likelihood[i] - shift);
    posterior_sum += posterior[i];
  }

  const auto total = static_cast<double>(index.stats().total_tokens);
  std::map<TermId, double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& doc = index.doc(docs[i]);
    if (doc.length == 0) continue;
    for (const auto& tc : doc.terms)
      weights[tc.term] += posterior[i] * lambda * static_cast<double>(tc.tf) /
                          static_cast<double>(doc.length);
  }
  // Every feedback document also contributes its collection-smoothing mass.
  for (auto& [term, w] : weights)
    w += posterior_sum * (1.0 - lambda) * static_cast<double>(index.stats().cf[term]) / total;

  TermDistribution dist;
  dist.reserve(weights.size());
  for (const auto& [term, w] : weights) dist.push_back({index.term(term), w});
  std::sort(dist.begin(), dist.end(), [](const WeightedTerm& a, const WeightedTerm& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.term < b.term;
  });
  if (dist.size() > config.fb_terms) dist.resize(config.fb_terms);
  return normalize_weights(std::move(dist));
}

ExpandedQuery rm3_expand(const Query& query, const TermDistribution& relevance_model, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw ArgumentError(fmt::format("beta must lie in [0, 1], got {}", beta));
  std::map<std::string, std::pair<double, double>> parts;  // (mle, model)
  for (const auto& wt : query_mle(query)) parts[wt.term].first = wt.weight;
  for (const auto& wt : relevance_model) parts[wt.term].second += wt.weight;

  std::vector<WeightedTerm> mixed;
  mixed.reserve(parts.size());
  for (const auto& [term, p] : parts)
    mixed.push_back({term, beta * p.first + (1.0 - beta) * p.second});
  return {query.query_id, normalize_weights(std::move(mixed))};
}

RankedList search_expanded(const Index& index, const ExpandedQuery& expanded,
                           const ScoringConfig& config) {
  std::vector<QueryVector> vectors;
  for (const auto& wt : expanded.weights) {
    if (!(wt.weight > 0.0)) continue;
    if (auto vec = index.term_vectors().lookup(wt.term))
      vectors.push_back({wt.term, Vector(vec->begin(), vec->end())});
  }
  std::sort(vectors.begin(), vectors.end(),
            [](const QueryVector& a, const QueryVector& b) { return a.term < b.term; });
  return rank_weighted(index, expanded.query_id, expanded.weights, vectors, config);
}

void write_expanded_queries(std::ostream& out, const std::vector<ExpandedQuery>& queries) {
  fmt::memory_buffer buf;
  for (const auto& q : queries)
    for (const auto& wt : q.weights)
      fmt::format_to(std::back_inserter(buf), "{}\t{}\t{}\n", q.query_id, wt.term, wt.weight);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<ExpandedQuery> read_expanded_queries(std::istream& in) {
  std::vector<ExpandedQuery> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw FormatError(fmt::format("expanded query line {}: expected 3 TAB-separated fields", line_no));
    std::string qid = line.substr(0, t1);
    std::string term = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string_view w = std::string_view(line).substr(t2 + 1);
    double weight = 0.0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
    if (ec != std::errc() || ptr != w.data() + w.size())
      throw FormatError(fmt::format("expanded query line {}: bad weight '{}'", line_no, w));
    if (queries.empty() || queries.back().query_id != qid) queries.push_back({qid, {}});
    queries.back().weights.push_back({std::move(term), weight});
  }
  return queries;
}

}  // namespace bovir

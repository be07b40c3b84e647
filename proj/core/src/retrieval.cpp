#include "bovir/retrieval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "bovir/error.hpp"

namespace bovir {

namespace {

struct ResolvedTerm {
  TermId id;
  double weight;
  double collection_prob;
};

std::vector<ResolvedTerm> resolve(const Index& index, std::span<const WeightedTerm> terms) {
  std::vector<ResolvedTerm> resolved;
  const auto total = static_cast<double>(index.stats().total_tokens);
  for (const auto& wt : terms) {
    const auto id = index.find_term(wt.term);
    if (!id || index.stats().cf[*id] == 0) continue;
    resolved.push_back({*id, wt.weight, static_cast<double>(index.stats().cf[*id]) / total});
  }
  return resolved;
}

double term_log_prob(const DocumentRecord& doc, TermId id, double collection_prob, double lambda) {
  const double mle =
      doc.length == 0 ? 0.0 : static_cast<double>(doc.tf(id)) / static_cast<double>(doc.length);
  return std::log(lambda * mle + (1.0 - lambda) * collection_prob);
}

double resolved_log_likelihood(const DocumentRecord& doc, std::span<const ResolvedTerm> terms,
                               double lambda) {
  double score = 0.0;
  for (const auto& t : terms) score += t.weight * term_log_prob(doc, t.id, t.collection_prob, lambda);
  return score;
}

// Weighted mean of a document's in-vocabulary term vectors, summed in term
// string order so that it reproduces compute_doc_centroids bit for bit.
std::optional<CentroidEntry> document_mean(const Index& index, const DocumentRecord& doc,
                                           const EmbeddingSpace& space, bool tf_weighted) {
  std::vector<std::pair<const std::string*, std::uint32_t>> members;
  members.reserve(doc.terms.size());
  for (const auto& tc : doc.terms) members.emplace_back(&index.term(tc.term), tc.tf);
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return *a.first < *b.first; });

  CentroidEntry mean{0, Vector(space.dim(), 0.0), 0};
  double total_weight = 0.0;
  for (const auto& [term, tf] : members) {
    const auto vec = space.lookup(*term);
    if (!vec) continue;
    if (tf_weighted) {
      const double w = tf;
      for (std::size_t d = 0; d < mean.centroid.size(); ++d) mean.centroid[d] += w * (*vec)[d];
      total_weight += w;
    } else {
      for (std::size_t d = 0; d < mean.centroid.size(); ++d) mean.centroid[d] += (*vec)[d];
      total_weight += 1.0;
    }
    ++mean.member_count;
  }
  if (mean.member_count == 0) return std::nullopt;
  for (double& v : mean.centroid) v /= total_weight;
  return mean;
}

double single_vector_similarity(std::span<const QueryVector> query,
                                const std::optional<CentroidEntry>& mean) {
  if (!mean) return 0.0;
  return wvsim_kmeans(query, std::span<const CentroidEntry>(&*mean, 1));
}

const DocumentRecord& doc_by_id(const Index& index, std::string_view doc_id) {
  const auto id = index.find_doc(doc_id);
  if (!id) throw ArgumentError("unknown document '" + std::string(doc_id) + "'");
  return index.doc(*id);
}

double variant_similarity(const Index& index, DocId doc, std::span<const QueryVector> vectors,
                          Variant variant) {
  switch (variant) {
    case Variant::kmeans:
      return wvsim_kmeans(vectors, index.centroids(doc));
    case Variant::one_cluster:
      return single_vector_similarity(
          vectors, document_mean(index, index.doc(doc), index.term_vectors(), false));
    case Variant::no_cluster:
      return single_vector_similarity(
          vectors, document_mean(index, index.doc(doc), index.term_vectors(), true));
    case Variant::lm_only:
      return 0.0;
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::lm_only: return "lm_only";
    case Variant::one_cluster: return "one_cluster";
    case Variant::no_cluster: return "no_cluster";
    case Variant::kmeans: return "kmeans";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::lm_only, Variant::one_cluster, Variant::no_cluster, Variant::kmeans})
    if (to_string(v) == name) return v;
  throw ArgumentError("unknown variant '" + std::string(name) +
                      "' (expected lm_only, one_cluster, no_cluster or kmeans)");
}

Query make_query(std::string query_id, std::vector<std::string> terms, const EmbeddingSpace& space) {
  Query q{std::move(query_id), std::move(terms), {}};
  std::vector<std::string> distinct = q.terms;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (auto& term : distinct)
    if (auto vec = space.lookup(term)) q.vectors.push_back({term, Vector(vec->begin(), vec->end())});
  return q;
}

std::vector<WeightedTerm> normalize_weights(std::vector<WeightedTerm> weights) {
  std::erase_if(weights, [](const WeightedTerm& w) { return !(w.weight > 0.0); });
  double total = 0.0;
  for (const auto& w : weights) total += w.weight;
  for (auto& w : weights) w.weight /= total;
  return weights;
}

std::vector<WeightedTerm> query_mle(const Query& query) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : query.terms) ++counts[t];
  std::vector<WeightedTerm> out;
  const auto n = static_cast<double>(query.terms.size());
  for (const auto& [term, c] : counts) out.push_back({term, static_cast<double>(c) / n});
  return out;
}

void validate(const ScoringConfig& config) {
  if (!(config.lambda > 0.0 && config.lambda < 1.0))
    throw ConfigError(fmt::format("lambda must lie in (0, 1), got {}", config.lambda));
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0))
    throw ConfigError(fmt::format("alpha must lie in [0, 1], got {}", config.alpha));
  if (config.top_k == 0) throw ConfigError("top_k must be at least 1");
  if (config.rerank_depth == 0) throw ConfigError("rerank_depth must be at least 1");
}

std::vector<std::string> config_warnings(const ScoringConfig& config) {
  std::vector<std::string> warnings;
  if (config.variant == Variant::lm_only && config.alpha != 1.0)
    warnings.push_back(fmt::format("variant lm_only ignores alpha = {}", config.alpha));
  return warnings;
}

double lm_log_likelihood(const Index& index, const DocumentRecord& doc, const Query& query,
                         double lambda) {
  const auto total = static_cast<double>(index.stats().total_tokens);
  double score = 0.0;
  for (const auto& term : query.terms) {
    const auto id = index.find_term(term);
    if (!id || index.stats().cf[*id] == 0) continue;
    score += term_log_prob(doc, *id, static_cast<double>(index.stats().cf[*id]) / total, lambda);
  }
  return score;
}

double weighted_log_likelihood(const Index& index, const DocumentRecord& doc,
                               std::span<const WeightedTerm> terms, double lambda) {
  return resolved_log_likelihood(doc, resolve(index, terms), lambda);
}

double wvsim_kmeans(std::span<const QueryVector> query, std::span<const CentroidEntry> centroids) {
  if (query.empty() || centroids.empty()) return 0.0;
  double total = 0.0;
  for (const auto& q : query) {
    for (const auto& c : centroids) {
      if (q.vector.size() != c.centroid.size())
        throw ConfigError(fmt::format("query vector dimension {} does not match centroid "
                                      "dimension {}",
                                      q.vector.size(), c.centroid.size()));
      total += dot(q.vector, c.centroid);
    }
  }
  return total / (static_cast<double>(centroids.size()) * static_cast<double>(query.size()));
}

double wvsim_kmeans(const Query& query, const DocCentroids& centroids) {
  return wvsim_kmeans(query.vectors, centroids.entries);
}

double wvsim_one_cluster(const Query& query, const Index& index, std::string_view doc_id) {
  return single_vector_similarity(
      query.vectors, document_mean(index, doc_by_id(index, doc_id), index.term_vectors(), false));
}

double wvsim_no_cluster(const Query& query, const Index& index, std::string_view doc_id,
                        const EmbeddingSpace& space) {
  return single_vector_similarity(query.vectors,
                                  document_mean(index, doc_by_id(index, doc_id), space, true));
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

RankedList rank_weighted(const Index& index, const std::string& query_id,
                         std::span<const WeightedTerm> terms, std::span<const QueryVector> vectors,
                         const ScoringConfig& config) {
  validate(config);
  RankedList list{query_id, {}};
  const auto resolved = resolve(index, terms);

  std::vector<char> seen(index.num_docs(), 0);
  std::vector<DocId> candidates;
  for (const auto& t : resolved) {
    if (!(t.weight > 0.0)) continue;
    for (const auto& p : index.postings(t.id))
      if (!seen[p.doc]) {
        seen[p.doc] = 1;
        candidates.push_back(p.doc);
      }
  }
  if (candidates.empty()) return list;

  struct Candidate {
    DocId doc;
    double lm;
    double final_score = 0.0;
  };
  std::vector<Candidate> pool;
  pool.reserve(candidates.size());
  for (DocId d : candidates)
    pool.push_back({d, resolved_log_likelihood(index.doc(d), resolved, config.lambda)});

  auto by_score_then_id = [&](double Candidate::*field) {
    return [&index, field](const Candidate& a, const Candidate& b) {
      if (a.*field != b.*field) return a.*field > b.*field;
      return index.doc(a.doc).doc_id < index.doc(b.doc).doc_id;
    };
  };
  std::sort(pool.begin(), pool.end(), by_score_then_id(&Candidate::lm));
  if (pool.size() > config.rerank_depth) pool.resize(config.rerank_depth);

  std::vector<double> lm(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) lm[i] = pool[i].lm;
  const auto norm_lm = min_max_normalize(lm);

  const bool mix = config.variant != Variant::lm_only && config.alpha < 1.0;
  if (mix) {
    std::vector<double> wv(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      wv[i] = variant_similarity(index, pool[i].doc, vectors, config.variant);
    const auto norm_wv = min_max_normalize(wv);
    for (std::size_t i = 0; i < pool.size(); ++i)
      pool[i].final_score = config.alpha * norm_lm[i] + (1.0 - config.alpha) * norm_wv[i];
  } else {
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i].final_score = norm_lm[i];
  }

  std::sort(pool.begin(), pool.end(), by_score_then_id(&Candidate::final_score));
  if (pool.size() > config.top_k) pool.resize(config.top_k);
  list.docs.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    list.docs.push_back({index.doc(pool[i].doc).doc_id, pool[i].final_score, i + 1});
  return list;
}

RankedList combine_and_rank(const Index& index, const Query& query, const ScoringConfig& config) {
  const auto weights = normalize_weights(query_mle(query));
  return rank_weighted(index, query.query_id, weights, query.vectors, config);
}

}  // namespace bovir

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bovir/embeddings.hpp"
#include "bovir/index.hpp"

namespace bovir {

enum class Variant { lm_only, one_cluster, no_cluster, kmeans };

std::string_view to_string(Variant v);
/// Accepts "lm_only", "one_cluster", "no_cluster", "kmeans". Throws ArgumentError.
Variant parse_variant(std::string_view name);

struct QueryVector {
  std::string term;
  Vector vector;
};

struct Query {
  std::string query_id;
  std::vector<std::string> terms;    // analyzed, duplicates kept
  std::vector<QueryVector> vectors;  // distinct terms with an embedding, sorted by term
};

/// Attaches vectors for the distinct in-vocabulary query terms.
Query make_query(std::string query_id, std::vector<std::string> terms, const EmbeddingSpace& space);

struct WeightedTerm {
  std::string term;
  double weight;
  bool operator==(const WeightedTerm&) const = default;
};

/// Scales weights to sum to one, dropping non-positive entries. Input order kept.
std::vector<WeightedTerm> normalize_weights(std::vector<WeightedTerm> weights);

/// Raw maximum-likelihood weights count/|q| of the distinct query terms, sorted by term.
std::vector<WeightedTerm> query_mle(const Query& query);

struct ScoringConfig {
  double lambda = 0.4;
  double alpha = 0.4;
  Variant variant = Variant::kmeans;
  std::size_t rerank_depth = 1000;
  std::size_t top_k = 1000;
};

/// Throws ConfigError for out-of-range parameters.
void validate(const ScoringConfig& config);
/// Non-fatal issues, e.g. an alpha that lm_only will ignore.
std::vector<std::string> config_warnings(const ScoringConfig& config);

struct ScoredDoc {
  std::string doc_id;
  double score;
  std::size_t rank;  // 1-based
  bool operator==(const ScoredDoc&) const = default;
};

struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> docs;  // non-increasing score, ties by ascending doc id
  bool operator==(const RankedList&) const = default;
};

/// Sum over query term occurrences of
/// log(lambda * tf/|d| + (1 - lambda) * cf/|C|). Terms unseen in the
/// collection are skipped; an empty document has a zero MLE component.
double lm_log_likelihood(const Index& index, const DocumentRecord& doc, const Query& query,
                         double lambda);

/// Weighted form: sum_w weight(w) * log(...), same skip rules.
double weighted_log_likelihood(const Index& index, const DocumentRecord& doc,
                               std::span<const WeightedTerm> terms, double lambda);

/// Average inner product between the query vectors and the stored
/// per-cluster centroids of a document; 0 when either side is empty.
/// Throws ConfigError on a dimension mismatch.
double wvsim_kmeans(const Query& query, const DocCentroids& centroids);
double wvsim_kmeans(std::span<const QueryVector> query, std::span<const CentroidEntry> centroids);

/// Document collapsed to the mean of its distinct in-vocabulary term vectors.
double wvsim_one_cluster(const Query& query, const Index& index, std::string_view doc_id);

/// Every document token its own cluster: term vectors weighted by tf.
double wvsim_no_cluster(const Query& query, const Index& index, std::string_view doc_id,
                        const EmbeddingSpace& space);

/// LM candidate generation over the union of the query terms' postings,
/// then (variant != lm_only) min-max normalised interpolation
/// alpha * lm + (1 - alpha) * wvsim over the top rerank_depth candidates.
RankedList combine_and_rank(const Index& index, const Query& query, const ScoringConfig& config);

/// Ranking engine shared by first-pass and expanded queries. lm_only
/// behaves as alpha = 1.
RankedList rank_weighted(const Index& index, const std::string& query_id,
                         std::span<const WeightedTerm> terms, std::span<const QueryVector> vectors,
                         const ScoringConfig& config);

/// Min-max scaling to [0, 1]; a constant list maps to all zeros.
std::vector<double> min_max_normalize(std::span<const double> values);

}  // namespace bovir

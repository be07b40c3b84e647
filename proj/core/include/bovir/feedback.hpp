#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "bovir/index.hpp"
#include "bovir/retrieval.hpp"

namespace bovir {

struct FeedbackConfig {
  std::size_t fb_docs = 10;
  std::size_t fb_terms = 20;
  double beta = 0.6;  // weight of the original query
};

/// Throws ArgumentError when a field is out of range.
void validate(const FeedbackConfig& config);

/// Term distribution, highest weight first (ties by term).
using TermDistribution = std::vector<WeightedTerm>;

struct ExpandedQuery {
  std::string query_id;
  std::vector<WeightedTerm> weights;  // sorted by term, positive, sums to 1
};

/// RM1 over the top fb_docs documents of `initial`:
/// P(w|R) proportional to sum_d P(w|d) P(q|d), with P(w|d) the
/// lambda-smoothed document model and P(q|d) the exponentiated query
/// log-likelihood. Restricted to the fb_terms heaviest terms and renormalised.
/// Throws FeedbackError on an empty list or an unknown document.
TermDistribution estimate_relevance_model(const Index& index, const RankedList& initial,
                                          const Query& query, const FeedbackConfig& config,
                                          double lambda);

/// beta * MLE(query) + (1 - beta) * relevance_model, renormalised.
ExpandedQuery rm3_expand(const Query& query, const TermDistribution& relevance_model, double beta);

/// Weighted-term ranking with the same candidate generation and mixing as
/// combine_and_rank. Query vectors are the expansion terms' vectors from the
/// index, each counted once.
RankedList search_expanded(const Index& index, const ExpandedQuery& expanded,
                           const ScoringConfig& config);

/// `query_id<TAB>term<TAB>weight` lines.
void write_expanded_queries(std::ostream& out, const std::vector<ExpandedQuery>& queries);
std::vector<ExpandedQuery> read_expanded_queries(std::istream& in);

}  // namespace bovir

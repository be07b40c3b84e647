#include "bovir/index.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <unordered_set>

#include "bovir/error.hpp"
#include "bovir/parallel.hpp"

namespace bovir {

std::uint32_t DocumentRecord::tf(TermId term) const {
  auto it = std::lower_bound(terms.begin(), terms.end(), term,
                             [](const TermCount& tc, TermId t) { return tc.term < t; });
  return (it != terms.end() && it->term == term) ? it->tf : 0;
}

std::vector<CentroidEntry> compute_doc_centroids(std::span<const std::string> distinct_terms,
                                                 const EmbeddingSpace& space,
                                                 const ClusterModel& model) {
  const std::size_t dim = space.dim();
  std::map<ClusterId, CentroidEntry> groups;
  for (const auto& term : distinct_terms) {
    const auto vec = space.lookup(term);
    if (!vec) continue;
    const auto cluster = model.assign_word(term);
    if (!cluster) continue;
    auto [it, inserted] = groups.try_emplace(*cluster, CentroidEntry{*cluster, Vector(dim, 0.0), 0});
    for (std::size_t d = 0; d < dim; ++d) it->second.centroid[d] += (*vec)[d];
    ++it->second.member_count;
  }
  std::vector<CentroidEntry> entries;
  entries.reserve(groups.size());
  for (auto& [id, entry] : groups) {
    const double count = entry.member_count;
    for (double& v : entry.centroid) v /= count;
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::optional<DocId> Index::find_doc(std::string_view doc_id) const {
  auto it = doc_lookup_.find(std::string(doc_id));
  if (it == doc_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<TermId> Index::find_term(std::string_view term) const {
  auto it = term_lookup_.find(std::string(term));
  if (it == term_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> Index::term_vector_row(TermId id) const {
  const std::int64_t row = term_vector_rows_[id];
  if (row < 0) return std::nullopt;
  return static_cast<std::uint32_t>(row);
}

double Index::mean_centroids_per_doc() const {
  if (centroids_.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& c : centroids_) total += c.size();
  return static_cast<double>(total) / static_cast<double>(centroids_.size());
}

void Index::rebuild_lookups() {
  doc_lookup_.clear();
  doc_lookup_.reserve(docs_.size());
  for (const auto& d : docs_) doc_lookup_.emplace(d.doc_id, d.internal_id);
  term_lookup_.clear();
  term_lookup_.reserve(terms_.size());
  for (std::size_t t = 0; t < terms_.size(); ++t)
    term_lookup_.emplace(terms_[t], static_cast<TermId>(t));
  term_vector_rows_.assign(terms_.size(), -1);
  for (std::size_t t = 0; t < terms_.size(); ++t)
    if (auto row = term_vectors_.id_of(terms_[t])) term_vector_rows_[t] = *row;
}

Index build_index(std::span<const ParsedDoc> corpus, const AnalyzerConfig& config,
                  const EmbeddingSpace& space, const ClusterModel& model, unsigned threads) {
  if (space.dim() != model.dim())
    throw BuildError(fmt::format("embedding dimension {} does not match cluster model dimension {}",
                                 space.dim(), model.dim()));
  {
    std::unordered_set<std::string_view> seen;
    seen.reserve(corpus.size());
    for (const auto& doc : corpus)
      if (!seen.insert(doc.doc_id).second)
        throw BuildError("duplicate doc id '" + doc.doc_id + "'");
  }

  // Per-document term counts, sorted by term string.
  using Counts = std::vector<std::pair<std::string, std::uint32_t>>;
  std::vector<Counts> counts(corpus.size());
  std::vector<std::uint64_t> lengths(corpus.size(), 0);
  parallel_for(corpus.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto terms = analyze(corpus[i].text, config);
      lengths[i] = terms.size();
      std::sort(terms.begin(), terms.end());
      Counts& c = counts[i];
      for (auto& t : terms) {
        if (!c.empty() && c.back().first == t)
          ++c.back().second;
        else
          c.emplace_back(std::move(t), 1);
      }
    }
  });

  Index index;
  index.analyzer_ = config;
  index.analyzer_fingerprint_ = config.fingerprint();
  index.dim_ = space.dim();
  index.num_clusters_ = model.k();
  index.docs_.resize(corpus.size());

  // Term ids are handed out sequentially in (document, term) order.
  std::unordered_map<std::string, TermId> term_ids;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    DocumentRecord& rec = index.docs_[i];
    rec.doc_id = corpus[i].doc_id;
    rec.internal_id = static_cast<DocId>(i);
    rec.length = lengths[i];
    rec.terms.reserve(counts[i].size());
    for (const auto& [term, tf] : counts[i]) {
      auto [it, inserted] = term_ids.try_emplace(term, static_cast<TermId>(index.terms_.size()));
      if (inserted) index.terms_.push_back(term);
      rec.terms.push_back({it->second, tf});
    }
    std::sort(rec.terms.begin(), rec.terms.end(),
              [](const TermCount& a, const TermCount& b) { return a.term < b.term; });
  }

  const std::size_t vocab = index.terms_.size();
  index.stats_.num_docs = corpus.size();
  index.stats_.cf.assign(vocab, 0);
  index.stats_.df.assign(vocab, 0);
  index.postings_.assign(vocab, {});
  for (const auto& rec : index.docs_) {
    index.stats_.total_tokens += rec.length;
    for (const auto& tc : rec.terms) {
      index.stats_.cf[tc.term] += tc.tf;
      ++index.stats_.df[tc.term];
      index.postings_[tc.term].push_back({rec.internal_id, tc.tf});
    }
  }

  index.term_vectors_ = space.subset(index.terms_);

  index.centroids_.resize(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::string> distinct;
    for (std::size_t i = begin; i < end; ++i) {
      distinct.clear();
      for (const auto& entry : counts[i]) distinct.push_back(entry.first);
      index.centroids_[i] = compute_doc_centroids(distinct, space, model);
    }
  });

  index.rebuild_lookups();
  return index;
}

}  // namespace bovir

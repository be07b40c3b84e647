#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bovir/clustering.hpp"
#include "bovir/embeddings.hpp"
#include "bovir/textproc.hpp"

namespace bovir {

using TermId = std::uint32_t;
using DocId = std::uint32_t;

struct TermCount {
  TermId term;
  std::uint32_t tf;
  bool operator==(const TermCount&) const = default;
};

struct DocumentRecord {
  std::string doc_id;
  DocId internal_id = 0;
  std::uint64_t length = 0;      // sum of tf
  std::vector<TermCount> terms;  // sorted by term id, tf >= 1

  /// 0 when the term does not occur.
  std::uint32_t tf(TermId term) const;
  bool operator==(const DocumentRecord&) const = default;
};

struct Posting {
  DocId doc;
  std::uint32_t tf;
  bool operator==(const Posting&) const = default;
};

struct CollectionStats {
  std::uint64_t num_docs = 0;
  std::uint64_t total_tokens = 0;
  std::vector<std::uint64_t> cf;  // by term id
  std::vector<std::uint32_t> df;  // by term id
  bool operator==(const CollectionStats&) const = default;
};

struct CentroidEntry {
  ClusterId cluster_id;
  Vector centroid;
  std::uint32_t member_count;
  bool operator==(const CentroidEntry&) const = default;
};

struct DocCentroids {
  std::string doc_id;
  std::vector<CentroidEntry> entries;  // ascending cluster id
};

/// Per-cluster mean of the vectors of the given distinct terms. Terms
/// without a vector or without a cluster are skipped. Each term counts
/// once, whatever its frequency.
std::vector<CentroidEntry> compute_doc_centroids(std::span<const std::string> distinct_terms,
                                                 const EmbeddingSpace& space,
                                                 const ClusterModel& model);

/// Inverted index plus per-document cluster centroids. Immutable after
/// construction; safe for concurrent readers.
class Index {
 public:
  std::size_t num_docs() const noexcept { return docs_.size(); }
  std::size_t vocab_size() const noexcept { return terms_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_clusters() const noexcept { return num_clusters_; }

  const DocumentRecord& doc(DocId id) const { return docs_[id]; }
  const std::vector<DocumentRecord>& documents() const noexcept { return docs_; }
  std::optional<DocId> find_doc(std::string_view doc_id) const;

  const std::string& term(TermId id) const { return terms_[id]; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  std::optional<TermId> find_term(std::string_view term) const;

  std::span<const Posting> postings(TermId id) const { return postings_[id]; }
  const CollectionStats& stats() const noexcept { return stats_; }

  /// Stored per-cluster centroids of a document (may be empty).
  const std::vector<CentroidEntry>& centroids(DocId id) const { return centroids_[id]; }
  DocCentroids doc_centroids(DocId id) const { return {docs_[id].doc_id, centroids_[id]}; }

  /// Embedding rows for the index terms that have one.
  const EmbeddingSpace& term_vectors() const noexcept { return term_vectors_; }
  /// Row of term_vectors() for a term, absent when the term is OOV.
  std::optional<std::uint32_t> term_vector_row(TermId id) const;

  const AnalyzerConfig& analyzer() const noexcept { return analyzer_; }
  std::uint32_t analyzer_fingerprint() const noexcept { return analyzer_fingerprint_; }

  /// Mean number of stored centroids per document.
  double mean_centroids_per_doc() const;

 private:
  friend Index build_index(std::span<const ParsedDoc>, const AnalyzerConfig&,
                           const EmbeddingSpace&, const ClusterModel&, unsigned);
  friend void persist(const Index&, const std::filesystem::path&);
  friend Index load_index(const std::filesystem::path&);

  void rebuild_lookups();

  std::vector<DocumentRecord> docs_;
  std::vector<std::string> terms_;
  std::vector<std::vector<Posting>> postings_;
  CollectionStats stats_;
  std::vector<std::vector<CentroidEntry>> centroids_;
  EmbeddingSpace term_vectors_;
  std::vector<std::int64_t> term_vector_rows_;  // -1 when OOV
  AnalyzerConfig analyzer_;
  std::uint32_t analyzer_fingerprint_ = 0;
  std::size_t dim_ = 0;
  std::size_t num_clusters_ = 0;
  std::unordered_map<std::string, DocId> doc_lookup_;
  std::unordered_map<std::string, TermId> term_lookup_;
};

/// Analyzes every document and builds postings, statistics and centroids.
/// Throws BuildError on a duplicate doc id or an embedding/model mismatch.
/// Output is identical for any thread count.
Index build_index(std::span<const ParsedDoc> corpus, const AnalyzerConfig& config,
                  const EmbeddingSpace& space, const ClusterModel& model, unsigned threads = 1);

inline constexpr int kIndexFormatVersion = 1;

/// Writes the index as a directory of flat files plus a key=value manifest
/// carrying the format version, counts and per-file CRC32 checksums.
void persist(const Index& index, const std::filesystem::path& directory);

/// Throws LoadError naming the offending file on a missing file, a version
/// mismatch or a checksum failure.
Index load_index(const std::filesystem::path& directory);

}  // namespace bovir

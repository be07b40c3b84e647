#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bovir {

using Vector = std::vector<double>;
using VectorView = std::span<const double>;

/// Word -> p-dimensional vector table. Vectors are stored row-major in one
/// contiguous buffer, in insertion order. Immutable once built.
class EmbeddingSpace {
 public:
  explicit EmbeddingSpace(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  bool normalized() const noexcept { return normalized_; }

  /// Adds or overwrites (last write wins). Returns true if the word was new.
  bool set(std::string_view word, VectorView values);

  /// Absent for unknown words; never a default vector.
  std::optional<VectorView> lookup(std::string_view word) const;
  std::optional<std::uint32_t> id_of(std::string_view word) const;

  const std::string& word(std::size_t id) const { return words_[id]; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  VectorView vector(std::size_t id) const { return {data_.data() + id * dim_, dim_}; }
  /// Row-major n x dim matrix of all vectors.
  std::span<const double> matrix() const noexcept { return data_; }

  /// Copy restricted to the given words (unknown words skipped), keeping
  /// the normalized flag.
  EmbeddingSpace subset(std::span<const std::string> words) const;

  bool operator==(const EmbeddingSpace&) const = default;

 private:
  friend EmbeddingSpace unit_normalize(const EmbeddingSpace& space);
  friend EmbeddingSpace make_embedding_space(std::size_t, bool, std::vector<std::string>,
                                             std::vector<double>);

  std::size_t dim_;
  bool normalized_ = false;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<double> data_;
};

/// Builds a space from already-validated rows (used when loading an index).
/// Throws ArgumentError on duplicate words or a size mismatch.
EmbeddingSpace make_embedding_space(std::size_t dim, bool normalized,
                                    std::vector<std::string> words, std::vector<double> data);

struct LoadedEmbeddings {
  EmbeddingSpace space;
  std::size_t duplicate_words = 0;
};

/// word2vec text format: header "V p", then V lines "word c1 ... cp".
/// Throws FormatError on a malformed header, a wrong component count or a
/// non-finite component. LF and CRLF line endings are accepted.
LoadedEmbeddings load_text_embeddings(std::istream& in);
LoadedEmbeddings load_text_embeddings_file(const std::string& path);

/// Inverse of load_text_embeddings; components printed round-trip exact.
void write_text_embeddings(std::ostream& out, const EmbeddingSpace& space);

/// Divides every vector by its Euclidean norm. Throws ArgumentError on a
/// zero vector (naming the word) or if the space is already normalized.
EmbeddingSpace unit_normalize(const EmbeddingSpace& space);

struct CoverageReport {
  std::size_t index_vocab_size = 0;
  std::size_t covered = 0;
  std::vector<std::string> oov_terms;  // first 100, in sorted order
};

CoverageReport coverage(const EmbeddingSpace& space, const std::set<std::string>& vocab);

double dot(VectorView a, VectorView b);

}  // namespace bovir

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bovir/embeddings.hpp"

namespace bovir {

using ClusterId = std::uint32_t;

struct KMeansConfig {
  std::size_t k = 100;
  std::uint64_t seed = 42;
  std::size_t max_iterations = 50;
  double rel_tol = 1e-4;
  unsigned threads = 1;
};

/// Outcome of Lloyd's algorithm on an n x dim row-major point matrix.
struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;       // k x dim, row-major
  std::vector<ClusterId> assignment;   // one per point
  double sse = 0.0;
  std::size_t iterations_run = 0;
  /// SSE after the initial assignment and after every Lloyd iteration.
  std::vector<double> sse_history;
  std::size_t repaired_clusters = 0;

  VectorView centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }
};

/// k-means++ seeding followed by Lloyd iterations. Stops after
/// max_iterations or when the relative SSE improvement drops below rel_tol.
/// Empty clusters are reseeded with the point farthest from its centroid.
/// Output is bit-identical for any thread count.
KMeansResult kmeans(std::span<const double> points, std::size_t dim, const KMeansConfig& config);
/// Same, for a list of separately stored points; throws ArgumentError on mixed dims.
KMeansResult kmeans(const std::vector<Vector>& points, const KMeansConfig& config);

/// Squared Euclidean distance.
double squared_distance(VectorView a, VectorView b);

/// Global vocabulary clustering: K centroids plus the word -> cluster table.
class ClusterModel {
 public:
  ClusterModel() = default;
  ClusterModel(std::size_t k, std::size_t dim, std::vector<double> centroids,
               std::vector<std::string> words, std::vector<ClusterId> ids);

  std::size_t k() const noexcept { return k_; }
  std::size_t dim() const noexcept { return dim_; }
  VectorView centroid(ClusterId c) const { return {centroids_.data() + c * dim_, dim_}; }
  const std::vector<double>& centroids() const noexcept { return centroids_; }

  /// Table lookup only; absent for words outside the clustered vocabulary.
  std::optional<ClusterId> assign_word(std::string_view word) const;

  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::vector<ClusterId>& ids() const noexcept { return ids_; }

  double sse = 0.0;
  std::size_t iterations_run = 0;

  std::size_t nonempty_clusters() const;

 private:
  std::size_t k_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> centroids_;
  std::vector<std::string> words_;  // persistence order
  std::vector<ClusterId> ids_;
  std::unordered_map<std::string, ClusterId> table_;
};

/// K-means over every vector of the space. Throws ArgumentError when the
/// space is empty or k exceeds its size.
ClusterModel cluster_vocabulary(const EmbeddingSpace& space, const KMeansConfig& config);

/// Text format: "k dim", k centroid lines, then one "word<TAB>id" line per word.
void save_cluster_model(std::ostream& out, const ClusterModel& model);
ClusterModel load_cluster_model(std::istream& in);
void save_cluster_model_file(const std::string& path, const ClusterModel& model);
ClusterModel load_cluster_model_file(const std::string& path);

}  // namespace bovir

#include "bovir/clustering.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "bovir/error.hpp"
#include "bovir/parallel.hpp"

namespace bovir {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Workspace {
  std::span<const double> points;
  std::size_t n;
  std::size_t dim;
  unsigned threads;

  VectorView point(std::size_t i) const { return {points.data() + i * dim, dim}; }
};

// Returns the new SSE. dist2 receives each point's squared distance to its
// assigned centroid.
double assign_points(const Workspace& ws, const std::vector<double>& centroids, std::size_t k,
                     std::vector<ClusterId>& assignment, std::vector<double>& dist2) {
  parallel_for(ws.n, ws.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const VectorView x = ws.point(i);
      double best = std::numeric_limits<double>::infinity();
      ClusterId best_id = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x, {centroids.data() + c * ws.dim, ws.dim});
        if (d < best) {
          best = d;
          best_id = static_cast<ClusterId>(c);
        }
      }
      assignment[i] = best_id;
      dist2[i] = best;
    }
  });
  return fixed_chunk_reduce(ws.n, ws.threads, [&](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += dist2[i];
    return s;
  });
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
std::size_t repair_empty_clusters(const Workspace& ws, std::vector<double>& centroids,
                                  std::size_t k, std::vector<ClusterId>& assignment,
                                  std::vector<double>& dist2) {
  std::vector<std::size_t> counts(k, 0);
  for (ClusterId c : assignment) ++counts[c];
  std::size_t repaired = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = ws.n;
    double far_d = -1.0;
    for (std::size_t i = 0; i < ws.n; ++i) {
      if (counts[assignment[i]] > 1 && dist2[i] > far_d) {
        far_d = dist2[i];
        far = i;
      }
    }
    if (far == ws.n) break;  // cannot happen while k <= n
    --counts[assignment[far]];
    assignment[far] = static_cast<ClusterId>(c);
    counts[c] = 1;
    dist2[far] = 0.0;
    const VectorView x = ws.point(far);
    std::copy(x.begin(), x.end(), centroids.begin() + c * ws.dim);
    ++repaired;
  }
  return repaired;
}

void update_centroids(const Workspace& ws, std::vector<double>& centroids, std::size_t k,
                      const std::vector<ClusterId>& assignment) {
  // Members listed in point order so each cluster sums in a fixed order.
  std::vector<std::vector<std::uint32_t>> members(k);
  for (std::size_t i = 0; i < ws.n; ++i)
    members[assignment[i]].push_back(static_cast<std::uint32_t>(i));
  parallel_for(k, ws.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      if (members[c].empty()) continue;
      double* row = centroids.data() + c * ws.dim;
      std::fill(row, row + ws.dim, 0.0);
      for (std::uint32_t i : members[c]) {
        const VectorView x = ws.point(i);
        for (std::size_t d = 0; d < ws.dim; ++d) row[d] += x[d];
      }
      const double count = static_cast<double>(members[c].size());
      for (std::size_t d = 0; d < ws.dim; ++d) row[d] /= count;
    }
  });
}

std::vector<double> seed_plus_plus(const Workspace& ws, std::size_t k, std::mt19937_64& rng) {
  std::vector<double> centroids(k * ws.dim);
  std::vector<bool> chosen(ws.n, false);
  std::vector<double> min_d2(ws.n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t c, std::size_t i) {
    chosen[i] = true;
    const VectorView x = ws.point(i);
    std::copy(x.begin(), x.end(), centroids.begin() + c * ws.dim);
    parallel_for(ws.n, ws.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t p = b; p < e; ++p) min_d2[p] = std::min(min_d2[p], squared_distance(ws.point(p), x));
    });
  };

  take(0, std::min(ws.n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(ws.n))));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = fixed_chunk_reduce(ws.n, ws.threads, [&](std::size_t b, std::size_t e) {
      double s = 0.0;
      for (std::size_t i = b; i < e; ++i) s += min_d2[i];
      return s;
    });
    const double u = uniform01(rng);
    std::size_t pick = ws.n;
    if (total > 0.0) {
      const double target = u * total;
      double cumulative = 0.0;
      std::size_t last_positive = ws.n;
      for (std::size_t i = 0; i < ws.n; ++i) {
        if (min_d2[i] <= 0.0) continue;
        last_positive = i;
        cumulative += min_d2[i];
        if (cumulative > target) {
          pick = i;
          break;
        }
      }
      if (pick == ws.n) pick = last_positive;
    }
    if (pick == ws.n || chosen[pick]) {
      // Fewer distinct points than k: fall back to the first unused point.
      for (std::size_t i = 0; i < ws.n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    take(c, pick);
  }
  return centroids;
}

}  // namespace

double squared_distance(VectorView a, VectorView b) {
  // Four independent accumulators, combined in a fixed order.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2];
    const double d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

KMeansResult kmeans(std::span<const double> points, std::size_t dim, const KMeansConfig& config) {
  if (dim == 0) throw ArgumentError("kmeans: dimension must be positive");
  if (points.size() % dim != 0)
    throw ArgumentError("kmeans: point buffer is not a multiple of the dimension");
  const std::size_t n = points.size() / dim;
  if (n == 0) throw ArgumentError("kmeans: no points");
  if (config.k == 0) throw ArgumentError("kmeans: k must be at least 1");
  if (config.k > n)
    throw ArgumentError(fmt::format("kmeans: k = {} exceeds the number of points ({})", config.k, n));
  if (config.max_iterations == 0) throw ArgumentError("kmeans: max_iterations must be at least 1");
  if (!(config.rel_tol > 0.0)) throw ArgumentError("kmeans: rel_tol must be positive");

  const Workspace ws{points, n, dim, std::max(1u, config.threads)};
  const std::size_t k = config.k;
  std::mt19937_64 rng(config.seed);

  KMeansResult result;
  result.k = k;
  result.dim = dim;
  result.centroids = seed_plus_plus(ws, k, rng);
  result.assignment.assign(n, 0);
  std::vector<double> dist2(n, 0.0);

  auto assign_and_repair = [&] {
    double sse = assign_points(ws, result.centroids, k, result.assignment, dist2);
    const std::size_t repaired =
        repair_empty_clusters(ws, result.centroids, k, result.assignment, dist2);
    if (repaired > 0) {
      result.repaired_clusters += repaired;
      sse = fixed_chunk_reduce(n, ws.threads, [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += dist2[i];
        return s;
      });
    }
    return std::pair{sse, repaired};
  };

  auto [sse, repaired] = assign_and_repair();
  result.sse_history.push_back(sse);
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    if (sse == 0.0 && repaired == 0) break;
    update_centroids(ws, result.centroids, k, result.assignment);
    const double previous = sse;
    std::tie(sse, repaired) = assign_and_repair();
    result.sse_history.push_back(sse);
    result.iterations_run = it;
    if (repaired == 0 && (previous <= 0.0 || (previous - sse) / previous < config.rel_tol)) break;
  }
  result.sse = sse;
  return result;
}

KMeansResult kmeans(const std::vector<Vector>& points, const KMeansConfig& config) {
  if (points.empty()) throw ArgumentError("kmeans: no points");
  const std::size_t dim = points.front().size();
  std::vector<double> flat;
  flat.reserve(points.size() * dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim)
      throw ArgumentError(fmt::format("kmeans: point {} has dimension {}, expected {}", i,
                                      points[i].size(), dim));
    flat.insert(flat.end(), points[i].begin(), points[i].end());
  }
  return kmeans(flat, dim, config);
}

ClusterModel::ClusterModel(std::size_t k, std::size_t dim, std::vector<double> centroids,
                           std::vector<std::string> words, std::vector<ClusterId> ids)
    : k_(k), dim_(dim), centroids_(std::move(centroids)), words_(std::move(words)), ids_(std::move(ids)) {
  if (centroids_.size() != k_ * dim_)
    throw ArgumentError("cluster model: centroid buffer does not match k x dim");
  if (words_.size() != ids_.size())
    throw ArgumentError("cluster model: word and id lists differ in length");
  table_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (ids_[i] >= k_)
      throw ArgumentError(fmt::format("cluster model: id {} of '{}' is not below k = {}", ids_[i],
                                      words_[i], k_));
    if (!table_.emplace(words_[i], ids_[i]).second)
      throw ArgumentError("cluster model: duplicate word '" + words_[i] + "'");
  }
}

std::optional<ClusterId> ClusterModel::assign_word(std::string_view word) const {
  auto it = table_.find(std::string(word));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::size_t ClusterModel::nonempty_clusters() const {
  std::vector<bool> seen(k_, false);
  for (ClusterId c : ids_) seen[c] = true;
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
}

ClusterModel cluster_vocabulary(const EmbeddingSpace& space, const KMeansConfig& config) {
  if (space.empty()) throw ArgumentError("cluster_vocabulary: embedding space is empty");
  KMeansResult r = kmeans(space.matrix(), space.dim(), config);
  ClusterModel model(r.k, r.dim, std::move(r.centroids), space.words(), std::move(r.assignment));
  model.sse = r.sse;
  model.iterations_run = r.iterations_run;
  return model;
}

void save_cluster_model(std::ostream& out, const ClusterModel& model) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "{} {}\n", model.k(), model.dim());
  for (std::size_t c = 0; c < model.k(); ++c) {
    const VectorView row = model.centroid(static_cast<ClusterId>(c));
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d > 0) buf.push_back(' ');
      fmt::format_to(std::back_inserter(buf), "{}", row[d]);
    }
    buf.push_back('\n');
  }
  for (std::size_t i = 0; i < model.words().size(); ++i)
    fmt::format_to(std::back_inserter(buf), "{}\t{}\n", model.words()[i], model.ids()[i]);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

namespace {

template <typename T>
T parse_field(std::string_view field, std::size_t line_no) {
  T value{};
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw FormatError(fmt::format("cluster model: line {}: bad number '{}'", line_no, field));
  return value;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t s = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > s) out.push_back(line.substr(s, i - s));
  }
  return out;
}

}  // namespace

ClusterModel load_cluster_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next()) throw FormatError("cluster model: missing header");
  const auto header = split_spaces(line);
  if (header.size() != 2) throw FormatError("cluster model: header must be 'k dim'");
  const auto k = parse_field<std::size_t>(header[0], line_no);
  const auto dim = parse_field<std::size_t>(header[1], line_no);
  if (k == 0 || dim == 0) throw FormatError("cluster model: k and dim must be positive");

  std::vector<double> centroids;
  centroids.reserve(k * dim);
  for (std::size_t c = 0; c < k; ++c) {
    if (!next()) throw FormatError(fmt::format("cluster model: expected {} centroid lines", k));
    const auto fields = split_spaces(line);
    if (fields.size() != dim)
      throw FormatError(fmt::format("cluster model: line {} has {} components, expected {}",
                                    line_no, fields.size(), dim));
    for (auto f : fields) centroids.push_back(parse_field<double>(f, line_no));
  }
  std::vector<std::string> words;
  std::vector<ClusterId> ids;
  while (next()) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw FormatError(fmt::format("cluster model: line {} is not 'word<TAB>id'", line_no));
    words.push_back(line.substr(0, tab));
    ids.push_back(parse_field<ClusterId>(std::string_view(line).substr(tab + 1), line_no));
  }
  try {
    return ClusterModel(k, dim, std::move(centroids), std::move(words), std::move(ids));
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
}

void save_cluster_model_file(const std::string& path, const ClusterModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write cluster model to " + path);
  save_cluster_model(out, model);
  if (!out) throw Error("failed writing cluster model to " + path);
}

ClusterModel load_cluster_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open cluster model " + path);
  return load_cluster_model(in);
}

}  // namespace bovir

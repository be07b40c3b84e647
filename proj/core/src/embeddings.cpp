#include "bovir/embeddings.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>

#include "bovir/error.hpp"

namespace bovir {

namespace {

constexpr std::size_t kOovSample = 100;

bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_blank(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_blank(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

bool EmbeddingSpace::set(std::string_view word, VectorView values) {
  if (values.size() != dim_)
    throw ArgumentError(fmt::format("vector for '{}' has {} components, expected {}", word,
                                    values.size(), dim_));
  std::string key(word);
  if (auto it = ids_.find(key); it != ids_.end()) {
    std::copy(values.begin(), values.end(), data_.begin() + it->second * dim_);
    return false;
  }
  const auto id = static_cast<std::uint32_t>(words_.size());
  ids_.emplace(key, id);
  words_.push_back(std::move(key));
  data_.insert(data_.end(), values.begin(), values.end());
  return true;
}

std::optional<VectorView> EmbeddingSpace::lookup(std::string_view word) const {
  auto id = id_of(word);
  if (!id) return std::nullopt;
  return vector(*id);
}

std::optional<std::uint32_t> EmbeddingSpace::id_of(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

EmbeddingSpace EmbeddingSpace::subset(std::span<const std::string> words) const {
  EmbeddingSpace out(dim_);
  for (const auto& w : words)
    if (auto id = id_of(w)) out.set(w, vector(*id));
  out.normalized_ = normalized_;
  return out;
}

EmbeddingSpace make_embedding_space(std::size_t dim, bool normalized,
                                    std::vector<std::string> words, std::vector<double> data) {
  if (data.size() != words.size() * dim)
    throw ArgumentError("embedding rows do not match the word list");
  EmbeddingSpace space(dim);
  space.ids_.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i)
    if (!space.ids_.emplace(words[i], static_cast<std::uint32_t>(i)).second)
      throw ArgumentError("duplicate embedding word '" + words[i] + "'");
  space.words_ = std::move(words);
  space.data_ = std::move(data);
  space.normalized_ = normalized;
  return space;
}

LoadedEmbeddings load_text_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embeddings: missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  std::size_t vocab = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_number(header[0], vocab) || !parse_number(header[1], dim) ||
      dim == 0)
    throw FormatError("embeddings: header must be 'V p' with V >= 0 and p >= 1, got '" + line +
                      "'");

  LoadedEmbeddings result{EmbeddingSpace(dim), 0};
  Vector values(dim);
  std::size_t line_no = 1;
  std::size_t read = 0;
  while (read < vocab && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_fields(line);
    if (fields.empty()) throw FormatError(fmt::format("embeddings: line {} is empty", line_no));
    if (fields.size() - 1 != dim)
      throw FormatError(fmt::format("embeddings: line {} has {} components, expected {}", line_no,
                                    fields.size() - 1, dim));
    for (std::size_t c = 0; c < dim; ++c) {
      if (!parse_number(fields[c + 1], values[c]))
        throw FormatError(fmt::format("embeddings: line {} component {} is not a number: '{}'",
                                      line_no, c + 1, fields[c + 1]));
      if (!std::isfinite(values[c]))
        throw FormatError(
            fmt::format("embeddings: line {} component {} is not finite", line_no, c + 1));
    }
    if (!result.space.set(fields[0], values)) ++result.duplicate_words;
    ++read;
  }
  if (read < vocab)
    throw FormatError(
        fmt::format("embeddings: header declares {} words but only {} were found", vocab, read));
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!split_fields(line).empty())
      throw FormatError(fmt::format("embeddings: unexpected data on line {} beyond the {} "
                                    "declared words",
                                    line_no, vocab));
  }
  return result;
}

LoadedEmbeddings load_text_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("embeddings: cannot open " + path);
  return load_text_embeddings(in);
}

void write_text_embeddings(std::ostream& out, const EmbeddingSpace& space) {
  out << space.size() << ' ' << space.dim() << '\n';
  fmt::memory_buffer buf;
  for (std::size_t i = 0; i < space.size(); ++i) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{}", space.word(i));
    for (double v : space.vector(i)) fmt::format_to(std::back_inserter(buf), " {}", v);
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

EmbeddingSpace unit_normalize(const EmbeddingSpace& space) {
  if (space.normalized()) throw ArgumentError("embedding space is already normalized");
  EmbeddingSpace result = space;
  const std::size_t dim = space.dim();
  for (std::size_t i = 0; i < result.size(); ++i) {
    double* row = result.data_.data() + i * dim;
    double norm_sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) norm_sq += row[c] * row[c];
    if (norm_sq == 0.0)
      throw ArgumentError("cannot normalize zero vector of word '" + space.word(i) + "'");
    const double norm = std::sqrt(norm_sq);
    for (std::size_t c = 0; c < dim; ++c) row[c] /= norm;
  }
  result.normalized_ = true;
  return result;
}

CoverageReport coverage(const EmbeddingSpace& space, const std::set<std::string>& vocab) {
  CoverageReport report;
  report.index_vocab_size = vocab.size();
  for (const auto& term : vocab) {
    if (space.lookup(term)) {
      ++report.covered;
    } else if (report.oov_terms.size() < kOovSample) {
      report.oov_terms.push_back(term);
    }
  }
  return report;
}

double dot(VectorView a, VectorView b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace bovir

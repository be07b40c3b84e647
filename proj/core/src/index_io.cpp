// On-disk index layout. Every binary file is a flat little-endian record
// stream; the manifest lists each file's CRC32 so corruption is caught at
// load time.

#include <fmt/format.h>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "bovir/error.hpp"
#include "bovir/index.hpp"

static_assert(std::endian::native == std::endian::little, "index files assume little-endian");

namespace bovir {

namespace {

namespace fs = std::filesystem;

constexpr const char* kManifest = "manifest";
constexpr const char* kTermsFile = "terms";
constexpr const char* kDocsFile = "docs";
constexpr const char* kPostingsFile = "postings";
constexpr const char* kStatsFile = "stats";
constexpr const char* kCentroidsFile = "centroids";
constexpr const char* kTermVectorsFile = "termvecs";
constexpr const char* kStopwordsFile = "stopwords";

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.append(p, sizeof(T));
  }
  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void put_doubles(std::span<const double> values) {
    buf_.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string file) : data_(std::move(data)), file_(std::move(file)) {}

  template <typename T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_doubles(double* out, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(out, data_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }
  void expect_end() const {
    if (pos_ != data_.size()) throw LoadError(file_ + ": trailing bytes after the last record");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw LoadError(file_ + ": truncated");
  }

  std::string data_;
  std::string file_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("missing index file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> parse_manifest(const std::string& text, const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw LoadError(path.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const fs::path& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw LoadError(path.string() + ": missing key '" + key + "'");
  return it->second;
}

std::uint64_t to_u64(const std::string& value, const std::string& key, const fs::path& path) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used, 0);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw LoadError(path.string() + ": bad value for '" + key + "'");
  }
}

}  // namespace

void persist(const Index& index, const std::filesystem::path& directory) {
  fs::create_directories(directory);

  std::map<std::string, std::string> files;

  {
    std::string text;
    for (const auto& t : index.terms_) {
      text += t;
      text += '\n';
    }
    files[kTermsFile] = std::move(text);
  }
  {
    std::string text;
    for (const auto& w : index.analyzer_.stopwords) {
      text += w;
      text += '\n';
    }
    files[kStopwordsFile] = std::move(text);
  }
  {
    Writer w;
    for (const auto& d : index.docs_) {
      w.put_string(d.doc_id);
      w.put<std::uint64_t>(d.length);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(d.terms.size()));
      for (const auto& tc : d.terms) {
        w.put<std::uint32_t>(tc.term);
        w.put<std::uint32_t>(tc.tf);
      }
    }
    files[kDocsFile] = w.bytes();
  }
  {
    Writer w;
    for (const auto& list : index.postings_) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
      for (const auto& p : list) {
        w.put<std::uint32_t>(p.doc);
        w.put<std::uint32_t>(p.tf);
      }
    }
    files[kPostingsFile] = w.bytes();
  }
  {
    Writer w;
    w.put<std::uint64_t>(index.stats_.num_docs);
    w.put<std::uint64_t>(index.stats_.total_tokens);
    for (std::size_t t = 0; t < index.terms_.size(); ++t) {
      w.put<std::uint64_t>(index.stats_.cf[t]);
      w.put<std::uint32_t>(index.stats_.df[t]);
    }
    files[kStatsFile] = w.bytes();
  }
  {
    Writer w;
    for (const auto& entries : index.centroids_) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
      for (const auto& e : entries) {
        w.put<std::uint32_t>(e.cluster_id);
        w.put<std::uint32_t>(e.member_count);
        w.put_doubles(e.centroid);
      }
    }
    files[kCentroidsFile] = w.bytes();
  }
  {
    Writer w;
    const auto& tv = index.term_vectors_;
    w.put<std::uint64_t>(tv.size());
    for (std::size_t i = 0; i < tv.size(); ++i) {
      w.put_string(tv.word(i));
      w.put_doubles(tv.vector(i));
    }
    files[kTermVectorsFile] = w.bytes();
  }

  std::string manifest;
  auto line = [&](std::string_view key, const auto& value) {
    manifest += fmt::format("{}={}\n", key, value);
  };
  line("format_version", kIndexFormatVersion);
  line("num_docs", index.docs_.size());
  line("num_terms", index.terms_.size());
  line("total_tokens", index.stats_.total_tokens);
  line("dim", index.dim_);
  line("K", index.num_clusters_);
  line("normalized", index.term_vectors_.normalized() ? 1 : 0);
  line("analyzer_fingerprint", fmt::format("{:#010x}", index.analyzer_fingerprint_));
  line("stemming", index.analyzer_.stemming ? 1 : 0);
  line("lowercase", index.analyzer_.lowercase ? 1 : 0);
  line("mean_centroids_per_doc", fmt::format("{:.4f}", index.mean_centroids_per_doc()));
  for (const auto& [name, bytes] : files) {
    write_file(directory / name, bytes);
    line("checksum." + name, fmt::format("{:#010x}", crc_of(bytes)));
  }
  write_file(directory / kManifest, manifest);
}

Index load_index(const std::filesystem::path& directory) {
  const fs::path manifest_path = directory / kManifest;
  const auto kv = parse_manifest(read_file(manifest_path), manifest_path);
  const auto version = to_u64(require(kv, "format_version", manifest_path), "format_version",
                              manifest_path);
  if (version != kIndexFormatVersion)
    throw LoadError(fmt::format("{}: format version {} is not supported (expected {})",
                                manifest_path.string(), version, kIndexFormatVersion));

  auto checked_bytes = [&](const char* name) {
    const fs::path path = directory / name;
    std::string bytes = read_file(path);
    const auto expected =
        to_u64(require(kv, std::string("checksum.") + name, manifest_path), name, manifest_path);
    if (crc_of(bytes) != expected) throw LoadError("checksum mismatch in " + path.string());
    return bytes;
  };
  auto load_checked = [&](const char* name) {
    return Reader(checked_bytes(name), (directory / name).string());
  };
  auto path_of = [&](const char* name) { return (directory / name).string(); };

  Index index;
  const auto num_docs = to_u64(require(kv, "num_docs", manifest_path), "num_docs", manifest_path);
  const auto num_terms = to_u64(require(kv, "num_terms", manifest_path), "num_terms", manifest_path);
  index.dim_ = to_u64(require(kv, "dim", manifest_path), "dim", manifest_path);
  index.num_clusters_ = to_u64(require(kv, "K", manifest_path), "K", manifest_path);
  const bool normalized = to_u64(require(kv, "normalized", manifest_path), "normalized", manifest_path) != 0;
  index.analyzer_.stemming = to_u64(require(kv, "stemming", manifest_path), "stemming", manifest_path) != 0;
  index.analyzer_.lowercase = to_u64(require(kv, "lowercase", manifest_path), "lowercase", manifest_path) != 0;
  index.analyzer_fingerprint_ = static_cast<std::uint32_t>(
      to_u64(require(kv, "analyzer_fingerprint", manifest_path), "analyzer_fingerprint", manifest_path));

  {
    std::istringstream in(checked_bytes(kStopwordsFile));
    index.analyzer_.stopwords = parse_stopwords(in);
  }
  if (index.analyzer_.fingerprint() != index.analyzer_fingerprint_)
    throw LoadError(path_of(kStopwordsFile) + ": analyzer does not match the manifest fingerprint");

  {
    std::istringstream in(checked_bytes(kTermsFile));
    std::string term;
    while (std::getline(in, term)) index.terms_.push_back(term);
    if (index.terms_.size() != num_terms)
      throw LoadError(path_of(kTermsFile) + ": term count does not match the manifest");
  }
  {
    Reader r = load_checked(kDocsFile);
    index.docs_.resize(num_docs);
    for (std::size_t i = 0; i < num_docs; ++i) {
      DocumentRecord& d = index.docs_[i];
      d.doc_id = r.get_string();
      d.internal_id = static_cast<DocId>(i);
      d.length = r.get<std::uint64_t>();
      const auto n = r.get<std::uint32_t>();
      d.terms.resize(n);
      for (auto& tc : d.terms) {
        tc.term = r.get<std::uint32_t>();
        tc.tf = r.get<std::uint32_t>();
        if (tc.term >= num_terms) throw LoadError(path_of(kDocsFile) + ": term id out of range");
      }
    }
    r.expect_end();
  }
  {
    Reader r = load_checked(kPostingsFile);
    index.postings_.resize(num_terms);
    for (auto& list : index.postings_) {
      list.resize(r.get<std::uint32_t>());
      for (auto& p : list) {
        p.doc = r.get<std::uint32_t>();
        p.tf = r.get<std::uint32_t>();
        if (p.doc >= num_docs) throw LoadError(path_of(kPostingsFile) + ": doc id out of range");
      }
    }
    r.expect_end();
  }
  {
    Reader r = load_checked(kStatsFile);
    index.stats_.num_docs = r.get<std::uint64_t>();
    index.stats_.total_tokens = r.get<std::uint64_t>();
    index.stats_.cf.resize(num_terms);
    index.stats_.df.resize(num_terms);
    for (std::size_t t = 0; t < num_terms; ++t) {
      index.stats_.cf[t] = r.get<std::uint64_t>();
      index.stats_.df[t] = r.get<std::uint32_t>();
    }
    r.expect_end();
    if (index.stats_.num_docs != num_docs)
      throw LoadError(path_of(kStatsFile) + ": document count does not match the manifest");
  }
  {
    Reader r = load_checked(kCentroidsFile);
    index.centroids_.resize(num_docs);
    for (auto& entries : index.centroids_) {
      entries.resize(r.get<std::uint32_t>());
      for (auto& e : entries) {
        e.cluster_id = r.get<std::uint32_t>();
        e.member_count = r.get<std::uint32_t>();
        e.centroid.resize(index.dim_);
        r.get_doubles(e.centroid.data(), index.dim_);
      }
    }
    r.expect_end();
  }
  {
    Reader r = load_checked(kTermVectorsFile);
    const auto n = r.get<std::uint64_t>();
    std::vector<std::string> words;
    std::vector<double> data(n * index.dim_);
    words.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      words.push_back(r.get_string());
      r.get_doubles(data.data() + i * index.dim_, index.dim_);
    }
    r.expect_end();
    try {
      index.term_vectors_ = make_embedding_space(index.dim_, normalized, std::move(words), std::move(data));
    } catch (const ArgumentError& e) {
      throw LoadError(path_of(kTermVectorsFile) + ": " + e.what());
    }
  }

  index.rebuild_lookups();
  return index;
}

}  // namespace bovir

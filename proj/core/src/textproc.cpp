#include "bovir/textproc.hpp"

#include <zlib.h>

#include <iterator>
#include <sstream>

#include "bovir/error.hpp"

namespace bovir {

namespace {

bool is_alnum_ascii(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char to_lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::uint32_t AnalyzerConfig::fingerprint() const {
  std::string canonical = "analyzer-v1;stem=";
  canonical += stemming ? '1' : '0';
  canonical += ";lower=";
  canonical += lowercase ? '1' : '0';
  canonical += ";stop=";
  for (const auto& w : stopwords) {  // std::set iterates sorted
    canonical += w;
    canonical += '\n';
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(canonical.data()),
              static_cast<uInt>(canonical.size()));
  return static_cast<std::uint32_t>(crc);
}

AnalyzerConfig AnalyzerConfig::standard() {
  AnalyzerConfig config;
  config.stopwords = smart_stopwords();
  return config;
}

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_alnum_ascii(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && is_alnum_ascii(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) {
      std::string token(text.substr(start, i - start));
      if (lowercase)
        for (char& c : token) c = to_lower_ascii(c);
      tokens.push_back(std::move(token));
    }
  }
  return tokens;
}

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
  std::vector<std::string> terms;
  for (auto& token : tokenize(text, config.lowercase)) {
    if (config.stopwords.contains(token)) continue;
    if (config.stemming) {
      std::string stemmed = porter_stem(token);
      if (!stemmed.empty()) terms.push_back(std::move(stemmed));
    } else {
      terms.push_back(std::move(token));
    }
  }
  return terms;
}

std::vector<ParsedDoc> parse_trec_corpus(std::string_view data) {
  constexpr std::string_view kDocOpen = "<DOC>";
  constexpr std::string_view kDocClose = "</DOC>";
  constexpr std::string_view kNoOpen = "<DOCNO>";
  constexpr std::string_view kNoClose = "</DOCNO>";
  constexpr std::string_view kTextOpen = "<TEXT>";
  constexpr std::string_view kTextClose = "</TEXT>";

  std::vector<ParsedDoc> docs;
  std::size_t pos = 0;
  while ((pos = data.find(kDocOpen, pos)) != std::string_view::npos) {
    const std::size_t body_begin = pos + kDocOpen.size();
    const std::size_t close = data.find(kDocClose, body_begin);
    if (close == std::string_view::npos) throw ParseError("unclosed <DOC> block", pos);
    const std::string_view body = data.substr(body_begin, close - body_begin);

    const std::size_t no_open = body.find(kNoOpen);
    const std::size_t no_close =
        no_open == std::string_view::npos ? no_open : body.find(kNoClose, no_open);
    if (no_open == std::string_view::npos || no_close == std::string_view::npos)
      throw ParseError("<DOC> block missing <DOCNO>", pos);
    const std::string_view doc_id =
        trim(body.substr(no_open + kNoOpen.size(), no_close - no_open - kNoOpen.size()));
    if (doc_id.empty()) throw ParseError("<DOC> block has an empty <DOCNO>", pos);

    ParsedDoc doc{std::string(doc_id), {}};
    std::size_t t = 0;
    bool first = true;
    while ((t = body.find(kTextOpen, t)) != std::string_view::npos) {
      const std::size_t text_begin = t + kTextOpen.size();
      const std::size_t text_end = body.find(kTextClose, text_begin);
      if (text_end == std::string_view::npos)
        throw ParseError("unclosed <TEXT> section", body_begin + t);
      if (!first) doc.text += ' ';
      doc.text.append(body.substr(text_begin, text_end - text_begin));
      first = false;
      t = text_end + kTextClose.size();
    }
    docs.push_back(std::move(doc));
    pos = close + kDocClose.size();
  }
  return docs;
}

std::vector<ParsedDoc> parse_trec_corpus(std::istream& in) {
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_trec_corpus(std::string_view(data));
}

std::vector<ParsedDoc> parse_tsv_corpus(std::istream& in) {
  std::vector<ParsedDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("corpus line " + std::to_string(line_no) + " has no TAB separator");
    const std::string_view id = trim(std::string_view(line).substr(0, tab));
    if (id.empty())
      throw FormatError("corpus line " + std::to_string(line_no) + " has an empty doc id");
    docs.push_back({std::string(id), line.substr(tab + 1)});
  }
  return docs;
}

std::set<std::string> parse_stopwords(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    std::string word(w);
    for (char& c : word) c = to_lower_ascii(c);
    words.insert(std::move(word));
  }
  return words;
}

const std::set<std::string>& smart_stopwords() {
  static const std::set<std::string> words = [] {
    std::istringstream in{std::string(smart_stopword_text())};
    return parse_stopwords(in);
  }();
  return words;
}

}  // namespace bovir

#pragma once

#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bovir {

/// Preprocessing applied identically to documents and queries.
struct AnalyzerConfig {
  std::set<std::string> stopwords;  // lowercase entries
  bool stemming = true;
  bool lowercase = true;

  /// CRC32 over the stemming/lowercase flags and the sorted stopword list.
  /// Stored in the index so queries can be checked against it.
  std::uint32_t fingerprint() const;

  /// SMART stopwords, Porter stemming, lowercasing.
  static AnalyzerConfig standard();
};

struct ParsedDoc {
  std::string doc_id;
  std::string text;
};

/// Splits on every non-alphanumeric byte and lowercases. Numeric runs are kept.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

/// Porter (1980) stemmer, following the author's reference C implementation.
/// Expects a lowercase token.
std::string porter_stem(std::string_view token);

/// tokenize -> drop stopwords -> stem. Order and duplicates are preserved.
std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config);

/// Reads `<DOC>` blocks. Text is the space-joined content of all `<TEXT>`
/// sections; other tags are ignored. Throws ParseError.
std::vector<ParsedDoc> parse_trec_corpus(std::istream& in);
std::vector<ParsedDoc> parse_trec_corpus(std::string_view data);

/// One `doc_id<TAB>text` record per line. Blank lines are skipped.
std::vector<ParsedDoc> parse_tsv_corpus(std::istream& in);

/// One word per line; blank lines and lines starting with '#' are ignored.
std::set<std::string> parse_stopwords(std::istream& in);

/// The bundled SMART stopword file contents.
std::string_view smart_stopword_text();
const std::set<std::string>& smart_stopwords();

}  // namespace bovir

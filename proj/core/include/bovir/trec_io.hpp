#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "bovir/retrieval.hpp"

namespace bovir {

/// Rankings keyed by query id.
using RunSet = std::map<std::string, RankedList>;

/// Relevance grades keyed by query id, then doc id.
struct Qrels {
  std::map<std::string, std::map<std::string, int>> judgments;

  int grade(const std::string& query_id, const std::string& doc_id) const;
  /// Number of documents with grade >= 1 for the query.
  std::size_t num_relevant(const std::string& query_id) const;
};

struct Topic {
  std::string query_id;
  std::string text;
};

/// `query_id Q0 doc_id rank score run_tag`, score with six decimals.
void write_run(std::ostream& out, const std::vector<RankedList>& lists, std::string_view run_tag);
/// Lists come back ordered by the rank column.
RunSet read_run(std::istream& in);
RunSet read_run_file(const std::string& path);

/// `query_id 0 doc_id grade`. Throws FormatError on duplicates or negative grades.
Qrels read_qrels(std::istream& in);
Qrels read_qrels_file(const std::string& path);

/// `query_id<TAB>title` per line.
std::vector<Topic> read_topics_tsv(std::istream& in);
/// TREC `<top>` blocks; the `<num>` and `<title>` fields are used.
std::vector<Topic> read_topics_trec(std::string_view data);
/// Picks the TREC reader when the file contains `<top>`, TSV otherwise.
std::vector<Topic> read_topics_file(const std::string& path);

}  // namespace bovir

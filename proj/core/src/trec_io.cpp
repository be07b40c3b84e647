#include "bovir/trec_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bovir/error.hpp"

namespace bovir {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && ws(line[i])) ++i;
    const std::size_t s = i;
    while (i < line.size() && !ws(line[i])) ++i;
    if (i > s) out.push_back(line.substr(s, i - s));
  }
  return out;
}

template <typename T>
T number(std::string_view field, std::string_view what, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw FormatError(fmt::format("{} line {}: bad number '{}'", what, line_no, field));
  return value;
}

std::string trim_copy(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string slurp(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {} file {}", what, path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
  auto q = judgments.find(query_id);
  if (q == judgments.end()) return 0;
  auto d = q->second.find(doc_id);
  return d == q->second.end() ? 0 : d->second;
}

std::size_t Qrels::num_relevant(const std::string& query_id) const {
  auto q = judgments.find(query_id);
  if (q == judgments.end()) return 0;
  return static_cast<std::size_t>(
      std::count_if(q->second.begin(), q->second.end(), [](const auto& kv) { return kv.second >= 1; }));
}

void write_run(std::ostream& out, const std::vector<RankedList>& lists, std::string_view run_tag) {
  fmt::memory_buffer buf;
  for (const auto& list : lists) {
    for (const auto& d : list.docs)
      fmt::format_to(std::back_inserter(buf), "{} Q0 {} {} {:.6f} {}\n", list.query_id, d.doc_id,
                     d.rank, d.score, run_tag);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

RunSet read_run(std::istream& in) {
  RunSet runs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 6) throw FormatError(fmt::format("run line {}: expected 6 fields", line_no));
    const std::string qid(f[0]);
    auto& list = runs[qid];
    list.query_id = qid;
    list.docs.push_back({std::string(f[2]), number<double>(f[4], "run", line_no),
                         number<std::size_t>(f[3], "run", line_no)});
  }
  for (auto& [qid, list] : runs)
    std::stable_sort(list.docs.begin(), list.docs.end(),
                     [](const ScoredDoc& a, const ScoredDoc& b) { return a.rank < b.rank; });
  return runs;
}

RunSet read_run_file(const std::string& path) {
  std::istringstream in(slurp(path, "run"));
  return read_run(in);
}

Qrels read_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw FormatError(fmt::format("qrels line {}: expected 4 fields", line_no));
    const int grade = number<int>(f[3], "qrels", line_no);
    if (grade < 0) throw FormatError(fmt::format("qrels line {}: negative grade", line_no));
    auto [it, inserted] = qrels.judgments[std::string(f[0])].emplace(std::string(f[2]), grade);
    if (!inserted)
      throw FormatError(fmt::format("qrels line {}: duplicate judgment for ({}, {})", line_no,
                                    f[0], f[2]));
  }
  return qrels;
}

Qrels read_qrels_file(const std::string& path) {
  std::istringstream in(slurp(path, "qrels"));
  return read_qrels(in);
}

std::vector<Topic> read_topics_tsv(std::istream& in) {
  std::vector<Topic> topics;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_copy(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(fmt::format("topics line {}: expected 'query_id<TAB>title'", line_no));
    topics.push_back({trim_copy(std::string_view(line).substr(0, tab)), line.substr(tab + 1)});
  }
  return topics;
}

std::vector<Topic> read_topics_trec(std::string_view data) {
  std::vector<Topic> topics;
  std::size_t pos = 0;
  // Field text runs until the next tag.
  const auto field = [](std::string_view block, std::string_view tag) -> std::string {
    const auto at = block.find(tag);
    if (at == std::string_view::npos) return {};
    const auto begin = at + tag.size();
    const auto end = block.find('<', begin);
    return trim_copy(block.substr(begin, end == std::string_view::npos ? end : end - begin));
  };
  while ((pos = data.find("<top>", pos)) != std::string_view::npos) {
    const auto end = data.find("</top>", pos);
    if (end == std::string_view::npos) throw FormatError("topics: unclosed <top> block");
    const std::string_view block = data.substr(pos, end - pos);
    std::string num = field(block, "<num>");
    if (num.rfind("Number:", 0) == 0) num = trim_copy(std::string_view(num).substr(7));
    if (num.empty()) throw FormatError("topics: <top> block without <num>");
    std::string title = field(block, "<title>");
    if (title.rfind("Topic:", 0) == 0) title = trim_copy(std::string_view(title).substr(6));
    topics.push_back({std::move(num), std::move(title)});
    pos = end + 6;
  }
  return topics;
}

std::vector<Topic> read_topics_file(const std::string& path) {
  const std::string data = slurp(path, "topics");
  if (data.find("<top>") != std::string::npos) return read_topics_trec(data);
  std::istringstream in(data);
  return read_topics_tsv(in);
}

}  // namespace bovir

#include "alignsql/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "alignsql/rng.hpp"
#include "alignsql/text.hpp"

namespace alignsql {
namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",  "the",  "of",    "in",   "on",   "at",  "to",   "for",  "by",    "with",
      "and",  "or",  "is",   "was",   "are",  "were", "be",  "been", "what", "which", "who",
      "whom", "how", "many", "much",  "did",  "does", "do",  "from", "that", "this",  "as",
      "it",   "its", "than", "there", "their", "has", "have", "had", "?",    ".",     ","};
  return words;
}

nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, p.string() + ": " + e.what());
  }
}

std::vector<std::string> string_list(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, what + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw Error(ErrorCode::SchemaError, what + " must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::vector<int> index_list(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, what + " must be an array of indices");
  std::vector<int> out;
  for (const auto& s : j) {
    if (!s.is_number_integer()) throw Error(ErrorCode::SchemaError, what + " must hold integers");
    out.push_back(s.get<int>());
  }
  return out;
}

std::vector<double> uniform_over(std::size_t size, const std::set<std::size_t>& support) {
  std::vector<double> row(size, 0.0);
  const double w = 1.0 / static_cast<double>(support.size());
  for (std::size_t i : support) row[i] = w;
  return row;
}

AlignedExample example_from_json(const nlohmann::json& j, const std::map<std::string, Table>& tables) {
  if (!j.is_object() || !j.contains("id"))
    throw Error(ErrorCode::SchemaError, "example without 'id'");
  AlignedExample ex;
  ex.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  const std::string where = "example " + ex.id;
  for (const char* key : {"table_id", "question", "sql"})
    if (!j.contains(key)) throw Error(ErrorCode::SchemaError, where + ": missing '" + key + "'");
  ex.table_id = j.at("table_id").get<std::string>();
  auto tit = tables.find(ex.table_id);
  if (tit == tables.end())
    throw Error(ErrorCode::DanglingTableRef, where + ": unknown table '" + ex.table_id + "'");
  const Table& table = tit->second;

  ex.question = string_list(j.at("question"), where + ": question");
  if (ex.question.empty()) throw Error(ErrorCode::SchemaError, where + ": empty question");
  if (j.contains("pos")) ex.pos = string_list(j.at("pos"), where + ": pos");
  if (j.contains("ner")) ex.ner = string_list(j.at("ner"), where + ": ner");
  if ((!ex.pos.empty() && ex.pos.size() != ex.question.size()) ||
      (!ex.ner.empty() && ex.ner.size() != ex.question.size()))
    throw Error(ErrorCode::SchemaError, where + ": tag count differs from question length");

  std::vector<sql::SqlToken> tokens;
  try {
    tokens = j.at("sql").is_string() ? sql::tokenize_sql(j.at("sql").get<std::string>())
                                     : sql::tokens_from_json(j.at("sql"));
    ex.gold_query = sql::parse(tokens);
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.what());
  }
  ex.gold_tokens = sql::serialize(ex.gold_query);
  if (ex.gold_tokens.size() != tokens.size() ||
      !std::equal(tokens.begin(), tokens.end(), ex.gold_tokens.begin(),
                  [](const auto& a, const auto& b) { return a.same_surface(b); }))
    throw Error(ErrorCode::SchemaError, where + ": query tokens are not in canonical form");
  for (std::size_t i = 0; i < tokens.size(); ++i) ex.gold_tokens[i].source_span = tokens[i].source_span;
  for (const auto& c : sql::referenced_columns(ex.gold_query))
    if (!table.column_index(c))
      throw Error(ErrorCode::UnboundColumn, where + ": column " + c + " not in table " + ex.table_id);

  if (j.contains("alignments")) {
    const int n = static_cast<int>(ex.question.size());
    const int s = static_cast<int>(ex.gold_tokens.size());
    for (const auto& lj : j.at("alignments")) {
      if (!lj.is_object() || !lj.contains("question") || !lj.contains("sql"))
        throw Error(ErrorCode::SchemaError, where + ": link needs 'question' and 'sql'");
      AlignmentLink link{index_list(lj.at("question"), where + ": link"),
                         index_list(lj.at("sql"), where + ": link")};
      if (link.question.empty() || link.sql.empty())
        throw Error(ErrorCode::SchemaError, where + ": link with an empty side");
      for (int q : link.question)
        if (q < 0 || q >= n)
          throw Error(ErrorCode::IndexOutOfRange,
                      where + ": question index " + std::to_string(q) + " out of range");
      for (int q : link.sql)
        if (q < 0 || q >= s)
          throw Error(ErrorCode::IndexOutOfRange,
                      where + ": sql index " + std::to_string(q) + " out of range");
      ex.alignments.push_back(std::move(link));
    }
  }

  try {
    ex.answer = execute(ex.gold_query, table);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, where + ": gold query does not execute: " + e.what());
  }
  return ex;
}

}  // namespace

Corpus corpus_from_json(const nlohmann::json& tables, const nlohmann::json& examples) {
  Corpus c;
  const nlohmann::json& tj = tables.contains("tables") ? tables.at("tables") : tables;
  if (!tj.is_object()) throw Error(ErrorCode::SchemaError, "tables must be an object keyed by id");
  for (const auto& [id, raw_j] : tj.items()) {
    try {
      RawTable raw = raw_table_from_json(raw_j);
      c.tables.emplace(id, build_database(raw));
      c.raw_tables.emplace(id, std::move(raw));
    } catch (const Error& e) {
      throw Error(e.code(), "table " + id + ": " + e.what());
    }
  }
  const nlohmann::json& ej = examples.is_object() ? examples.at("examples") : examples;
  if (!ej.is_array()) throw Error(ErrorCode::SchemaError, "examples must be an array");
  std::set<std::string> ids;
  for (const auto& e : ej) {
    AlignedExample ex = example_from_json(e, c.tables);
    if (!ids.insert(ex.id).second) throw Error(ErrorCode::SchemaError, "duplicate example id " + ex.id);
    c.examples.push_back(std::move(ex));
  }
  return c;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  return corpus_from_json(read_json_file(dir / "tables.json"), read_json_file(dir / "examples.json"));
}

nlohmann::json tables_to_json(const Corpus& c) {
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [id, raw] : c.raw_tables) t[id] = {{"headers", raw.headers}, {"rows", raw.rows}};
  return {{"tables", t}};
}

nlohmann::json example_to_json(const AlignedExample& ex) {
  nlohmann::json j{{"id", ex.id},
                   {"table_id", ex.table_id},
                   {"question", ex.question},
                   {"sql", sql::tokens_to_json(ex.gold_tokens)}};
  if (!ex.pos.empty()) j["pos"] = ex.pos;
  if (!ex.ner.empty()) j["ner"] = ex.ner;
  auto links = nlohmann::json::array();
  for (const auto& l : ex.alignments) links.push_back({{"question", l.question}, {"sql", l.sql}});
  j["alignments"] = links;
  j["answer"] = answer_to_json(ex.answer);
  return j;
}

nlohmann::json examples_to_json(const Corpus& c) {
  auto arr = nlohmann::json::array();
  for (const auto& ex : c.examples) arr.push_back(example_to_json(ex));
  return {{"version", 1}, {"examples", arr}};
}

void save_corpus(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "tables.json") << tables_to_json(c).dump(1) << '\n';
  std::ofstream(dir / "examples.json") << examples_to_json(c).dump(1) << '\n';
}

std::vector<ColumnLink> column_links(const AlignedExample& ex, const Table& t) {
  std::vector<ColumnLink> out;
  for (const auto& link : ex.alignments) {
    ColumnLink cl;
    for (int k : link.sql) {
      const auto& tok = ex.gold_tokens[static_cast<std::size_t>(k)];
      if (tok.kind != sql::TokenKind::Col) continue;
      auto c = t.column_index(tok.text);
      if (c && std::find(cl.columns.begin(), cl.columns.end(), *c) == cl.columns.end())
        cl.columns.push_back(*c);
    }
    if (cl.columns.empty()) continue;
    cl.question = link.question;
    out.push_back(std::move(cl));
  }
  return out;
}

void fill_encoder_targets(AlignmentTargets& targets, std::size_t n, std::size_t m,
                          const std::vector<ColumnLink>& links) {
  std::vector<std::set<std::size_t>> q_to_c(n), c_to_q(m);
  for (const auto& l : links) {
    for (int q : l.question) {
      for (std::size_t c : l.columns) {
        q_to_c[static_cast<std::size_t>(q)].insert(c);
        c_to_q[c].insert(static_cast<std::size_t>(q));
      }
    }
  }
  targets.q2c.assign(n, std::nullopt);
  targets.c2q.assign(m, std::nullopt);
  for (std::size_t i = 0; i < n; ++i)
    if (!q_to_c[i].empty()) targets.q2c[i] = uniform_over(m, q_to_c[i]);
  for (std::size_t j = 0; j < m; ++j)
    if (!c_to_q[j].empty()) targets.c2q[j] = uniform_over(n, c_to_q[j]);
}

AlignmentTargets build_alignment_targets(const AlignedExample& ex, const Table& t) {
  const std::size_t n = ex.question.size();
  AlignmentTargets targets;
  fill_encoder_targets(targets, n, t.columns.size(), column_links(ex, t));
  std::vector<std::set<std::size_t>> d_to_q(ex.gold_tokens.size());
  for (const auto& link : ex.alignments)
    for (int k : link.sql)
      for (int q : link.question) d_to_q[static_cast<std::size_t>(k)].insert(static_cast<std::size_t>(q));
  targets.d2q.assign(ex.gold_tokens.size() + 1, std::nullopt);
  for (std::size_t k = 0; k < d_to_q.size(); ++k)
    if (!d_to_q[k].empty()) targets.d2q[k] = uniform_over(n, d_to_q[k]);
  return targets;
}

nlohmann::json FilterReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& r : rejected)
    arr.push_back({{"example_id", r.example_id},
                   {"token_index", r.token_index},
                   {"literal", r.literal},
                   {"best_score", r.best_score}});
  return {{"kept", kept}, {"rejected", arr}};
}

double literal_span_score(std::span<const std::string> span_tokens, std::string_view literal) {
  std::string joined = text::join(span_tokens, " ");
  auto a = text::parse_plain_number(joined);
  auto b = text::parse_plain_number(literal);
  if (a && b) return *a == *b ? 1.0 : 0.0;
  return text::fuzzy_ratio(joined, literal);
}

FilterReport derive_literal_spans(std::vector<AlignedExample>& examples) {
  FilterReport report;
  std::vector<AlignedExample> kept;
  for (auto& ex : examples) {
    const auto mask = sql::literal_mask(ex.gold_tokens);
    const int n = static_cast<int>(ex.question.size());
    std::optional<LiteralRejection> failure;
    std::vector<std::optional<sql::Span>> spans(ex.gold_tokens.size());
    for (std::size_t k = 0; k < ex.gold_tokens.size() && !failure; ++k) {
      if (!mask[k]) continue;
      int lo = 0, hi = n - 1;
      bool linked = false;
      for (const auto& link : ex.alignments) {
        if (std::find(link.sql.begin(), link.sql.end(), static_cast<int>(k)) == link.sql.end()) continue;
        auto [mn, mx] = std::minmax_element(link.question.begin(), link.question.end());
        if (!linked) {
          lo = *mn;
          hi = *mx;
        } else {
          lo = std::min(lo, *mn);
          hi = std::max(hi, *mx);
        }
        linked = true;
      }
      double best = -1.0;
      sql::Span best_span{};
      for (int b = lo; b <= hi; ++b) {
        for (int e = b; e <= hi; ++e) {
          if (!linked && e - b >= 8) break;
          std::span<const std::string> toks(ex.question.data() + b, static_cast<std::size_t>(e - b + 1));
          double s = literal_span_score(toks, ex.gold_tokens[k].text);
          int len = e - b, best_len = best_span.end - best_span.begin;
          if (s > best || (s == best && len > best_len)) {
            best = s;
            best_span = {b, e};
          }
        }
      }
      if (best >= kFuzzyThreshold) {
        spans[k] = best_span;
      } else {
        failure = LiteralRejection{ex.id, static_cast<int>(k), ex.gold_tokens[k].text, std::max(best, 0.0)};
      }
    }
    if (failure) {
      report.rejected.push_back(*failure);
      continue;
    }
    for (std::size_t k = 0; k < spans.size(); ++k)
      if (mask[k]) ex.gold_tokens[k].source_span = spans[k];
    kept.push_back(std::move(ex));
  }
  report.kept = kept.size();
  examples = std::move(kept);
  return report;
}

std::vector<std::string> header_tokens(const Column& c) {
  auto toks = text::word_tokens(c.header);
  if (toks.empty()) toks.push_back(c.name);
  return toks;
}

ExactMatchFeatures exact_match_features(std::span<const std::string> question, const Table& t) {
  std::set<std::string> header_words, cell_words;
  for (const auto& c : t.columns) {
    if (c.name == "id") continue;
    for (auto& w : text::word_tokens(c.header)) header_words.insert(std::move(w));
  }
  for (const auto& row : t.rows)
    for (std::size_t c = 1; c < row.size(); ++c)
      if (!row[c].null)
        for (auto& w : text::word_tokens(row[c].raw)) cell_words.insert(std::move(w));

  ExactMatchFeatures f;
  std::vector<std::string> flat;
  for (const auto& tok : question) {
    auto words = text::word_tokens(tok);
    bool h = false, c = false;
    for (const auto& w : words) {
      h = h || header_words.count(w);
      c = c || cell_words.count(w);
    }
    f.in_header.push_back(h);
    f.in_cell.push_back(c);
    flat.insert(flat.end(), words.begin(), words.end());
  }
  for (const auto& col : t.columns) {
    auto words = text::word_tokens(col.header);
    bool found = false;
    if (!words.empty() && col.name != "id" && words.size() <= flat.size()) {
      for (std::size_t s = 0; s + words.size() <= flat.size() && !found; ++s)
        found = std::equal(words.begin(), words.end(), flat.begin() + static_cast<std::ptrdiff_t>(s));
    }
    f.name_in_question.push_back(found);
  }
  return f;
}

std::vector<ColumnLink> heuristic_alignments(std::span<const std::string> question, const Table& t) {
  std::vector<ColumnLink> out;
  const int n = static_cast<int>(question.size());
  std::vector<std::string> folded;
  for (const auto& q : question) folded.push_back(text::fold(q));
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (t.columns[c].name == "id") continue;
    auto words = text::word_tokens(t.columns[c].header);
    if (words.empty()) continue;
    std::vector<std::string> header_spans;
    for (std::size_t b = 0; b < words.size(); ++b)
      for (std::size_t e = b; e < words.size(); ++e)
        header_spans.push_back(text::join(std::span(words).subspan(b, e - b + 1), " "));

    double best = -1.0;
    int best_b = 0, best_e = -1;
    for (int b = 0; b < n; ++b) {
      for (int e = b; e < n && e - b < 5; ++e) {
        bool content = false;
        for (int i = b; i <= e; ++i) content = content || !stopwords().count(folded[static_cast<std::size_t>(i)]);
        if (!content) continue;
        std::string gram = text::join(std::span(folded).subspan(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b + 1)), " ");
        double s = 0.0;
        for (const auto& h : header_spans) s = std::max(s, text::fuzzy_ratio(gram, h));
        if (s > best || (s == best && e - b > best_e - best_b)) {
          best = s;
          best_b = b;
          best_e = e;
        }
      }
    }
    if (best >= kFuzzyThreshold) {
      ColumnLink link;
      for (int i = best_b; i <= best_e; ++i) link.question.push_back(i);
      link.columns.push_back(c);
      out.push_back(std::move(link));
    }
  }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
  return perm;
}

std::vector<std::vector<std::string>> make_splits(std::vector<std::string> table_ids, std::size_t k,
                                                  std::uint64_t seed) {
  std::sort(table_ids.begin(), table_ids.end());
  table_ids.erase(std::unique(table_ids.begin(), table_ids.end()), table_ids.end());
  if (k == 0 || k > table_ids.size())
    throw Error(ErrorCode::TooFewTables, std::to_string(table_ids.size()) + " tables cannot form " +
                                             std::to_string(k) + " splits");
  auto perm = seeded_permutation(table_ids.size(), seed);
  std::vector<std::vector<std::string>> folds(k);
  const std::size_t base = table_ids.size() / k, extra = table_ids.size() % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) folds[f].push_back(table_ids[perm[pos++]]);
  }
  return folds;
}

Vocab::Vocab() : itos_{"<pad>", "<unk>", "<stop>"} {
  for (std::size_t i = 0; i < itos_.size(); ++i) stoi_[itos_[i]] = static_cast<int>(i);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& sequences, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : sequences)
    for (const auto& tok : seq) ++counts[tok];
  std::vector<std::pair<std::string, std::size_t>> items;
  Vocab v;
  for (auto& [tok, n] : counts)
    if (n >= min_count && !v.stoi_.count(tok)) items.emplace_back(tok, n);
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [tok, n] : items) {
    v.stoi_[tok] = static_cast<int>(v.itos_.size());
    v.itos_.push_back(tok);
  }
  return v;
}

int Vocab::index(const std::string& token) const {
  auto it = stoi_.find(token);
  return it == stoi_.end() ? kUnk : it->second;
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  Vocab v;
  v.itos_ = j.get<std::vector<std::string>>();
  v.stoi_.clear();
  for (std::size_t i = 0; i < v.itos_.size(); ++i) v.stoi_[v.itos_[i]] = static_cast<int>(i);
  return v;
}

}  // namespace alignsql

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "alignsql/executor.hpp"
#include "alignsql/sqlir.hpp"
#include "alignsql/tables.hpp"
#include "json.hpp"

namespace alignsql {

/// One many-to-many link between question tokens and SQL tokens. Either side
/// may be non-contiguous. Indices are 0-based.
struct AlignmentLink {
  std::vector<int> question;
  std::vector<int> sql;
  bool operator==(const AlignmentLink&) const = default;
};

struct AlignedExample {
  std::string id;
  std::string table_id;
  std::vector<std::string> question;
  /// Optional precomputed tags; empty when the corpus carries none.
  std::vector<std::string> pos;
  std::vector<std::string> ner;
  /// Canonical serialization of `gold_query`; literals carry source spans
  /// once derive_literal_spans has run.
  std::vector<sql::SqlToken> gold_tokens;
  sql::Query gold_query;
  std::vector<AlignmentLink> alignments;
  /// Execution of the gold query over the example's table.
  Answer answer;
};

struct Corpus {
  std::map<std::string, RawTable> raw_tables;
  std::map<std::string, Table> tables;
  std::vector<AlignedExample> examples;

  const Table& table_of(const AlignedExample& ex) const { return tables.at(ex.table_id); }
};

/// Reads `tables.json` and `examples.json` from a directory.
Corpus load_corpus(const std::filesystem::path& dir);
/// Same validation from already-parsed documents.
Corpus corpus_from_json(const nlohmann::json& tables, const nlohmann::json& examples);
nlohmann::json tables_to_json(const Corpus& c);
nlohmann::json examples_to_json(const Corpus& c);
nlohmann::json example_to_json(const AlignedExample& ex);
void save_corpus(const Corpus& c, const std::filesystem::path& dir);

/// A row of attention supervision; nullopt where no target exists.
using TargetRows = std::vector<std::optional<std::vector<double>>>;

struct AlignmentTargets {
  TargetRows q2c;  ///< n question tokens, each over m columns
  TargetRows c2q;  ///< m columns, each over n question tokens
  TargetRows d2q;  ///< one row per gold token plus the stop step, over n tokens
};

/// Question-token set linked to a column set.
struct ColumnLink {
  std::vector<int> question;
  std::vector<std::size_t> columns;
};

/// Column links implied by alignment links whose SQL side holds COL tokens.
std::vector<ColumnLink> column_links(const AlignedExample& ex, const Table& t);

/// Uniform distributions over linked sets; a question token or column
/// appearing in several links gets the union.
AlignmentTargets build_alignment_targets(const AlignedExample& ex, const Table& t);
void fill_encoder_targets(AlignmentTargets& targets, std::size_t n, std::size_t m,
                          const std::vector<ColumnLink>& links);

struct LiteralRejection {
  std::string example_id;
  int token_index = 0;
  std::string literal;
  double best_score = 0.0;
};

struct FilterReport {
  std::size_t kept = 0;
  std::vector<LiteralRejection> rejected;
  nlohmann::json to_json() const;
};

inline constexpr double kFuzzyThreshold = 0.85;

/// Attaches a question span to every literal SQL token and drops examples
/// where some literal cannot be reconstructed by fuzzy match. Candidate
/// spans lie inside the literal's alignment link when it has one, else
/// anywhere in the question.
FilterReport derive_literal_spans(std::vector<AlignedExample>& examples);

/// Score of a question span against a literal: 1 for equal numbers (commas
/// ignored), else fuzzy_ratio.
double literal_span_score(std::span<const std::string> span_tokens, std::string_view literal);

struct ExactMatchFeatures {
  std::vector<bool> in_header;          ///< per question token
  std::vector<bool> in_cell;            ///< per question token
  std::vector<bool> name_in_question;   ///< per table column
};

ExactMatchFeatures exact_match_features(std::span<const std::string> question, const Table& t);

/// Best question n-gram (n <= 5) per column by fuzzy match against the
/// header; one link per column scoring at least the threshold.
std::vector<ColumnLink> heuristic_alignments(std::span<const std::string> question, const Table& t);

/// Partition of table ids into k folds of near-equal size.
std::vector<std::vector<std::string>> make_splits(std::vector<std::string> table_ids, std::size_t k,
                                                  std::uint64_t seed);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kStop = 2;

  Vocab();
  /// Tokens seen fewer than `min_count` times map to UNK. Order: frequency
  /// descending, then lexicographic.
  static Vocab build(const std::vector<std::vector<std::string>>& sequences, std::size_t min_count);

  int index(const std::string& token) const;
  const std::string& token(int i) const { return itos_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return itos_.size(); }

  nlohmann::json to_json() const { return itos_; }
  static Vocab from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> itos_;
  std::unordered_map<std::string, int> stoi_;
};

/// Word tokens of a header, used both for features and vocabularies.
std::vector<std::string> header_tokens(const Column& c);

/// Deterministic permutation used for shuffles and subsampling.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace alignsql

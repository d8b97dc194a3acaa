#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "alignsql/error.hpp"
#include "json.hpp"

// Tokenizer, parser, canonical serializer and template extractor for the
// SQL subset the corpus uses.
namespace alignsql::sql {

enum class TokenKind { Key, Col, Str, Num };

std::string_view token_kind_name(TokenKind k);
std::optional<TokenKind> token_kind_from_name(std::string_view name);

/// Inclusive range of question-token indices a copied literal came from.
struct Span {
  int begin = 0;
  int end = 0;
  bool operator==(const Span&) const = default;
};

struct SqlToken {
  TokenKind kind = TokenKind::Key;
  std::string text;
  std::optional<Span> source_span;

  bool operator==(const SqlToken&) const = default;
  /// Kind and text only; spans are annotation.
  bool same_surface(const SqlToken& o) const { return kind == o.kind && text == o.text; }
};

/// Keywords the grammar accepts. Versioned together with the decoder's KEY
/// vocabulary, which appends the small integer constants used by LIMIT and
/// subquery arithmetic.
inline constexpr int kKeywordVocabularyVersion = 1;
std::span<const std::string_view> sql_keywords();
/// SQL words the tokenizer recognises but the grammar rejects.
std::span<const std::string_view> unsupported_keywords();
/// KEY-typed output vocabulary of the decoder (without the stop symbol).
std::span<const std::string_view> keyword_vocabulary();

class SqlError : public Error {
 public:
  SqlError(ErrorCode code, std::size_t position, const std::string& message)
      : Error(code, message + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Copyable owning pointer with value equality, for the recursive AST.
template <class T>
class Box {
 public:
  Box() : ptr_(std::make_unique<T>()) {}
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT: implicit by design of AST builders
  Box(const Box& o) : ptr_(std::make_unique<T>(*o.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& o) {
    if (this != &o) ptr_ = std::make_unique<T>(*o.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

struct Select;
struct Expr;

struct ColumnRef {
  std::string name;
  bool operator==(const ColumnRef&) const = default;
};

enum class LiteralKind { Str, Num };

struct Literal {
  LiteralKind kind = LiteralKind::Str;
  std::string text;
  bool operator==(const Literal&) const = default;
};

enum class AggFn { Count, Max, Min, Sum, Avg };
std::string_view agg_name(AggFn f);

struct Aggregate {
  AggFn fn = AggFn::Count;
  bool distinct = false;
  /// nullopt means `*` (COUNT only).
  std::optional<ColumnRef> column;
  bool operator==(const Aggregate&) const = default;
};

struct Arithmetic {
  char op = '+';  // '+' or '-'
  Box<Expr> lhs;
  Box<Expr> rhs;
  bool operator==(const Arithmetic&) const;
};

struct Subquery {
  Box<Select> query;
  bool operator==(const Subquery&) const;
};

struct Expr {
  std::variant<ColumnRef, Literal, Aggregate, Arithmetic, Subquery> node;
  bool operator==(const Expr&) const = default;
};

enum class CompOp { Eq, Ne, Lt, Le, Gt, Ge };
std::string_view comp_symbol(CompOp op);

struct Comparison {
  Expr lhs;
  CompOp op = CompOp::Eq;
  Expr rhs;
  bool operator==(const Comparison&) const = default;
};

struct InList {
  Expr lhs;
  std::vector<Literal> values;
  bool operator==(const InList&) const = default;
};

using Predicate = std::variant<Comparison, InList>;

/// Default keeps the annotator's choice of omitting ASC.
enum class SortDir { Default, Asc, Desc };

struct OrderTerm {
  Expr expr;
  SortDir dir = SortDir::Default;
  bool operator==(const OrderTerm&) const = default;
};

/// SELECT [DISTINCT] projections FROM w [WHERE conj] [GROUP BY cols]
/// [ORDER BY terms] [LIMIT n]. The WHERE clause is a conjunction.
struct Select {
  bool distinct = false;
  std::vector<Expr> projections;
  std::vector<Predicate> where;
  std::vector<ColumnRef> group_by;
  std::vector<OrderTerm> order_by;
  std::optional<std::int64_t> limit;
  bool operator==(const Select&) const = default;
};

using Query = Select;

inline bool Arithmetic::operator==(const Arithmetic& o) const {
  return op == o.op && lhs == o.lhs && rhs == o.rhs;
}
inline bool Subquery::operator==(const Subquery& o) const { return query == o.query; }

// Convenience constructors used by tests, the generator and the decoder.
Expr col(std::string name);
Expr str_lit(std::string text);
Expr num_lit(std::string text);
Expr agg(AggFn fn, std::optional<std::string> column, bool distinct = false);
Expr arith(char op, Expr lhs, Expr rhs);
Expr subquery(Select q);

std::vector<SqlToken> tokenize_sql(std::string_view text);
Query parse(std::span<const SqlToken> tokens);
Query parse_sql(std::string_view text);
std::vector<SqlToken> serialize(const Query& q);

/// Whitespace-joined text; STR tokens are single-quoted with '' escaping.
std::string render(std::span<const SqlToken> tokens);

/// True for tokens that are literal values copied from the question: every
/// STR, and every NUM except LIMIT counts and arithmetic offsets.
std::vector<bool> literal_mask(std::span<const SqlToken> tokens);

/// Every column name referenced anywhere in the query, in token order.
std::vector<std::string> referenced_columns(const Query& q);

nlohmann::json tokens_to_json(std::span<const SqlToken> tokens);
std::vector<SqlToken> tokens_from_json(const nlohmann::json& j);

/// Query with columns and literal values anonymized.
struct Template {
  std::vector<std::string> tokens;

  std::string str() const;
  /// Reporting view: non-equality comparison operators collapse to COMP.
  std::string reporting() const;
  bool operator==(const Template&) const = default;
};

Template extract_template(const Query& q);
Template template_of_tokens(std::span<const SqlToken> tokens);

/// Matches a template against a reporting pattern such as
/// "SELECT col FROM w ORDER BY col [DESC] LIMIT 1", where `[X]` marks an
/// optional token and `COMP` stands for any of < > <= >= !=.
bool template_matches(const Template& t, std::string_view pattern);

/// The ten most frequent corpus templates, as reporting patterns.
std::span<const std::string_view> top_templates();

}  // namespace alignsql::sql

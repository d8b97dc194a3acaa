#include "alignsql/sqlir.hpp"

#include "alignsql/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace alignsql::sql {
namespace {

constexpr std::array<std::string_view, 31> kSqlKeywords = {
    "SELECT", "FROM", "w",   "WHERE", "AND", "GROUP", "BY", "ORDER", "ASC", "DESC", "LIMIT",
    "DISTINCT", "COUNT", "MAX", "MIN", "SUM", "AVG", "IN", "(",    ")",   ",",    "*",
    "=",      "!=",    "<",   "<=",  ">",   ">=",  "+",  "-",     "ABS"};

// ABS is lexed but never produced by the grammar; it lives in the unsupported set.
constexpr std::array<std::string_view, 19> kUnsupported = {
    "OR",   "NOT",    "JOIN",  "ON",   "AS",    "HAVING", "LIKE",  "UNION", "BETWEEN", "CASE",
    "WHEN", "THEN",   "ELSE",  "END",  "EXISTS", "NULL",  "IS",    "ABS",   "OFFSET"};

constexpr std::array<std::string_view, 41> kKeywordVocabulary = {
    "SELECT", "FROM", "w",  "WHERE", "AND", "GROUP", "BY", "ORDER", "ASC", "DESC", "LIMIT",
    "DISTINCT", "COUNT", "MAX", "MIN", "SUM", "AVG", "IN", "(",     ")",   ",",    "*",
    "=",      "!=",    "<",  "<=",  ">",   ">=",  "+",  "-",     "0",   "1",    "2",
    "3",      "4",     "5",  "6",   "7",   "8",   "9",  "10"};

bool is_supported_keyword(std::string_view w) {
  return std::find(kSqlKeywords.begin(), kSqlKeywords.end() - 1, w) != kSqlKeywords.end() - 1;
}

bool is_unsupported_keyword(std::string_view w) {
  return std::find(kUnsupported.begin(), kUnsupported.end(), w) != kUnsupported.end();
}

bool is_column_name(std::string_view w) {
  if (w == "id") return true;
  if (w.size() < 2 || w[0] != 'c' || !std::isdigit(static_cast<unsigned char>(w[1]))) return false;
  std::size_t i = 1;
  while (i < w.size() && std::isdigit(static_cast<unsigned char>(w[i]))) ++i;
  if (i == w.size()) return true;
  if (w[i] != '_' || i + 1 == w.size()) return false;
  for (++i; i < w.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(w[i]);
    if (!(std::islower(c) || std::isdigit(c) || c == '_')) return false;
  }
  return true;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

SqlToken key(std::string text) { return SqlToken{TokenKind::Key, std::move(text), std::nullopt}; }

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::span<const SqlToken> tokens) : toks_(tokens) {}

  Query parse_all() {
    Query q = select();
    if (pos_ != toks_.size()) fail_here("unexpected trailing token");
    return q;
  }

 private:
  std::span<const SqlToken> toks_;
  std::size_t pos_ = 0;

  const SqlToken* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }
  bool peek_key(std::string_view text, std::size_t ahead = 0) const {
    const SqlToken* t = peek(ahead);
    return t && t->kind == TokenKind::Key && t->text == text;
  }
  bool accept(std::string_view text) {
    if (!peek_key(text)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail_here(const std::string& what) const {
    const SqlToken* t = peek();
    if (t && t->kind == TokenKind::Key && is_unsupported_keyword(t->text))
      throw SqlError(ErrorCode::UnsupportedConstruct, pos_, "unsupported keyword " + t->text);
    std::string found = t ? "'" + t->text + "'" : "end of input";
    throw SqlError(ErrorCode::SyntaxError, pos_, what + ", found " + found);
  }

  void expect(std::string_view text) {
    if (!accept(text)) fail_here("expected '" + std::string(text) + "'");
  }

  Select select() {
    Select q;
    expect("SELECT");
    q.distinct = accept("DISTINCT");
    if (peek_key("*"))
      throw SqlError(ErrorCode::UnsupportedConstruct, pos_, "bare * projection");
    q.projections.push_back(expr());
    while (accept(",")) q.projections.push_back(expr());
    expect("FROM");
    expect("w");
    if (accept("WHERE")) {
      q.where.push_back(predicate());
      while (accept("AND")) q.where.push_back(predicate());
    }
    if (accept("GROUP")) {
      expect("BY");
      q.group_by.push_back(column());
      while (accept(",")) q.group_by.push_back(column());
    }
    if (accept("ORDER")) {
      expect("BY");
      q.order_by.push_back(order_term());
      while (accept(",")) q.order_by.push_back(order_term());
    }
    if (accept("LIMIT")) {
      const SqlToken* t = peek();
      if (!t || t->kind != TokenKind::Num || t->text.find('.') != std::string::npos)
        fail_here("expected integer after LIMIT");
      q.limit = std::stoll(t->text);
      ++pos_;
    }
    return q;
  }

  ColumnRef column() {
    const SqlToken* t = peek();
    if (!t || t->kind != TokenKind::Col) fail_here("expected column");
    ++pos_;
    return ColumnRef{t->text};
  }

  OrderTerm order_term() {
    OrderTerm term{expr(), SortDir::Default};
    if (accept("ASC")) term.dir = SortDir::Asc;
    else if (accept("DESC")) term.dir = SortDir::Desc;
    return term;
  }

  Predicate predicate() {
    Expr lhs = expr();
    if (accept("IN")) {
      InList in{std::move(lhs), {}};
      expect("(");
      in.values.push_back(literal());
      while (accept(",")) in.values.push_back(literal());
      expect(")");
      return in;
    }
    static const std::array<std::pair<std::string_view, CompOp>, 6> ops = {{
        {"=", CompOp::Eq}, {"!=", CompOp::Ne}, {"<", CompOp::Lt},
        {"<=", CompOp::Le}, {">", CompOp::Gt}, {">=", CompOp::Ge}}};
    for (const auto& [sym, op] : ops) {
      if (accept(sym)) return Comparison{std::move(lhs), op, expr()};
    }
    fail_here("expected comparison operator");
  }

  Literal literal() {
    const SqlToken* t = peek();
    if (!t || (t->kind != TokenKind::Str && t->kind != TokenKind::Num)) fail_here("expected literal");
    ++pos_;
    return Literal{t->kind == TokenKind::Str ? LiteralKind::Str : LiteralKind::Num, t->text};
  }

  Expr expr() {
    Expr lhs = term();
    while (peek_key("+") || peek_key("-")) {
      char op = peek()->text[0];
      ++pos_;
      lhs = arith(op, std::move(lhs), term());
    }
    return lhs;
  }

  Expr term() {
    const SqlToken* t = peek();
    if (!t) fail_here("expected expression");
    switch (t->kind) {
      case TokenKind::Col:
        ++pos_;
        return col(t->text);
      case TokenKind::Str:
        ++pos_;
        return str_lit(t->text);
      case TokenKind::Num:
        ++pos_;
        return num_lit(t->text);
      case TokenKind::Key:
        break;
    }
    static const std::array<std::pair<std::string_view, AggFn>, 5> aggs = {{
        {"COUNT", AggFn::Count}, {"MAX", AggFn::Max}, {"MIN", AggFn::Min},
        {"SUM", AggFn::Sum}, {"AVG", AggFn::Avg}}};
    for (const auto& [name, fn] : aggs) {
      if (t->text != name) continue;
      ++pos_;
      expect("(");
      Aggregate a{fn, accept("DISTINCT"), std::nullopt};
      if (accept("*")) {
        if (fn != AggFn::Count || a.distinct)
          throw SqlError(ErrorCode::UnsupportedConstruct, pos_ - 1, "* outside COUNT(*)");
      } else {
        const SqlToken* arg = peek();
        if (!arg || arg->kind != TokenKind::Col) {
          if (arg && arg->kind == TokenKind::Key && arg->text != ")")
            throw SqlError(ErrorCode::UnsupportedConstruct, pos_, "aggregate over an expression");
          fail_here("expected aggregate argument");
        }
        a.column = ColumnRef{arg->text};
        ++pos_;
      }
      if (peek_key("+") || peek_key("-"))
        throw SqlError(ErrorCode::UnsupportedConstruct, pos_, "aggregate over an expression");
      expect(")");
      return Expr{a};
    }
    if (accept("(")) {
      if (peek_key("SELECT")) {
        Select inner = select();
        expect(")");
        return subquery(std::move(inner));
      }
      Expr inner = expr();
      expect(")");
      return inner;
    }
    fail_here("expected expression");
  }
};

// ---------------------------------------------------------------------------
// Serializer

class Writer {
 public:
  std::vector<SqlToken> out;

  void select(const Select& q) {
    out.push_back(key("SELECT"));
    if (q.distinct) out.push_back(key("DISTINCT"));
    for (std::size_t i = 0; i < q.projections.size(); ++i) {
      if (i) out.push_back(key(","));
      expr(q.projections[i], false);
    }
    out.push_back(key("FROM"));
    out.push_back(key("w"));
    if (!q.where.empty()) {
      out.push_back(key("WHERE"));
      for (std::size_t i = 0; i < q.where.size(); ++i) {
        if (i) out.push_back(key("AND"));
        predicate(q.where[i]);
      }
    }
    if (!q.group_by.empty()) {
      out.push_back(key("GROUP"));
      out.push_back(key("BY"));
      for (std::size_t i = 0; i < q.group_by.size(); ++i) {
        if (i) out.push_back(key(","));
        out.push_back(SqlToken{TokenKind::Col, q.group_by[i].name, std::nullopt});
      }
    }
    if (!q.order_by.empty()) {
      out.push_back(key("ORDER"));
      out.push_back(key("BY"));
      for (std::size_t i = 0; i < q.order_by.size(); ++i) {
        if (i) out.push_back(key(","));
        expr(q.order_by[i].expr, false);
        if (q.order_by[i].dir == SortDir::Asc) out.push_back(key("ASC"));
        if (q.order_by[i].dir == SortDir::Desc) out.push_back(key("DESC"));
      }
    }
    if (q.limit) {
      out.push_back(key("LIMIT"));
      out.push_back(SqlToken{TokenKind::Num, std::to_string(*q.limit), std::nullopt});
    }
  }

  void predicate(const Predicate& p) {
    if (const auto* c = std::get_if<Comparison>(&p)) {
      expr(c->lhs, false);
      out.push_back(key(std::string(comp_symbol(c->op))));
      expr(c->rhs, false);
    } else {
      const auto& in = std::get<InList>(p);
      expr(in.lhs, false);
      out.push_back(key("IN"));
      out.push_back(key("("));
      for (std::size_t i = 0; i < in.values.size(); ++i) {
        if (i) out.push_back(key(","));
        literal(in.values[i]);
      }
      out.push_back(key(")"));
    }
  }

  void literal(const Literal& l) {
    out.push_back(SqlToken{l.kind == LiteralKind::Str ? TokenKind::Str : TokenKind::Num, l.text,
                           std::nullopt});
  }

  // `nested_rhs` marks the right operand of an arithmetic node, which needs
  // parentheses when it is itself arithmetic (the grammar is left-associative).
  void expr(const Expr& e, bool nested_rhs) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ColumnRef>) {
            out.push_back(SqlToken{TokenKind::Col, n.name, std::nullopt});
          } else if constexpr (std::is_same_v<T, Literal>) {
            literal(n);
          } else if constexpr (std::is_same_v<T, Aggregate>) {
            out.push_back(key(std::string(agg_name(n.fn))));
            out.push_back(key("("));
            if (n.distinct) out.push_back(key("DISTINCT"));
            if (n.column) out.push_back(SqlToken{TokenKind::Col, n.column->name, std::nullopt});
            else out.push_back(key("*"));
            out.push_back(key(")"));
          } else if constexpr (std::is_same_v<T, Arithmetic>) {
            if (nested_rhs) out.push_back(key("("));
            expr(*n.lhs, false);
            out.push_back(key(std::string(1, n.op)));
            expr(*n.rhs, true);
            if (nested_rhs) out.push_back(key(")"));
          } else {
            out.push_back(key("("));
            select(*n.query);
            out.push_back(key(")"));
          }
        },
        e.node);
  }
};

void collect_columns(const Select& q, std::vector<std::string>& out);

void collect_columns(const Expr& e, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ColumnRef>) out.push_back(n.name);
        else if constexpr (std::is_same_v<T, Aggregate>) {
          if (n.column) out.push_back(n.column->name);
        } else if constexpr (std::is_same_v<T, Arithmetic>) {
          collect_columns(*n.lhs, out);
          collect_columns(*n.rhs, out);
        } else if constexpr (std::is_same_v<T, Subquery>) {
          collect_columns(*n.query, out);
        }
      },
      e.node);
}

void collect_columns(const Select& q, std::vector<std::string>& out) {
  for (const auto& p : q.projections) collect_columns(p, out);
  for (const auto& pred : q.where) {
    if (const auto* c = std::get_if<Comparison>(&pred)) {
      collect_columns(c->lhs, out);
      collect_columns(c->rhs, out);
    } else {
      collect_columns(std::get<InList>(pred).lhs, out);
    }
  }
  for (const auto& g : q.group_by) out.push_back(g.name);
  for (const auto& o : q.order_by) collect_columns(o.expr, out);
}

std::vector<std::string> pattern_tokens(std::string_view pattern) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c == ' ') {
      flush();
    } else if (c == '[') {
      flush();
      std::size_t close = pattern.find(']', i);
      out.push_back("[" + std::string(pattern.substr(i + 1, close - i - 1)) + "]");
      i = close;
    } else if (c == '(' || c == ')' || c == ',') {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

bool is_comp(std::string_view t) { return t == "<" || t == ">" || t == "<=" || t == ">=" || t == "!="; }

bool match_from(const std::vector<std::string>& t, std::size_t ti, const std::vector<std::string>& p,
                std::size_t pi) {
  if (pi == p.size()) return ti == t.size();
  const std::string& pat = p[pi];
  if (pat.size() > 2 && pat.front() == '[' && pat.back() == ']') {
    std::string inner = pat.substr(1, pat.size() - 2);
    if (ti < t.size() && t[ti] == inner && match_from(t, ti + 1, p, pi + 1)) return true;
    return match_from(t, ti, p, pi + 1);
  }
  if (ti == t.size()) return false;
  bool ok = pat == "COMP" ? is_comp(t[ti]) : t[ti] == pat;
  return ok && match_from(t, ti + 1, p, pi + 1);
}

constexpr std::array<std::string_view, 10> kTopTemplates = {
    "SELECT col FROM w ORDER BY col [DESC] LIMIT 1",
    "SELECT col FROM w WHERE col = STR",
    "SELECT COUNT(col) FROM w WHERE col = STR",
    "SELECT COUNT(col) FROM w WHERE col COMP NUM",
    "SELECT col FROM w WHERE col = NUM",
    "SELECT COUNT(col) FROM w",
    "SELECT col FROM w GROUP BY col ORDER BY COUNT(col) [DESC] LIMIT 1",
    "SELECT COUNT(col) FROM w WHERE col = NUM",
    "SELECT col FROM w WHERE col = (SELECT col FROM w WHERE col = STR) + 1",
    "SELECT col FROM w WHERE col IN (STR, STR) ORDER BY col [DESC] LIMIT 1",
};

}  // namespace

std::string_view token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::Key: return "KEY";
    case TokenKind::Col: return "COL";
    case TokenKind::Str: return "STR";
    case TokenKind::Num: return "NUM";
  }
  return "KEY";
}

std::optional<TokenKind> token_kind_from_name(std::string_view name) {
  if (name == "KEY") return TokenKind::Key;
  if (name == "COL") return TokenKind::Col;
  if (name == "STR") return TokenKind::Str;
  if (name == "NUM") return TokenKind::Num;
  return std::nullopt;
}

std::span<const std::string_view> sql_keywords() {
  return std::span(kSqlKeywords.data(), kSqlKeywords.size() - 1);
}
std::span<const std::string_view> unsupported_keywords() { return kUnsupported; }
std::span<const std::string_view> keyword_vocabulary() { return kKeywordVocabulary; }

std::string_view agg_name(AggFn f) {
  switch (f) {
    case AggFn::Count: return "COUNT";
    case AggFn::Max: return "MAX";
    case AggFn::Min: return "MIN";
    case AggFn::Sum: return "SUM";
    case AggFn::Avg: return "AVG";
  }
  return "COUNT";
}

std::string_view comp_symbol(CompOp op) {
  switch (op) {
    case CompOp::Eq: return "=";
    case CompOp::Ne: return "!=";
    case CompOp::Lt: return "<";
    case CompOp::Le: return "<=";
    case CompOp::Gt: return ">";
    case CompOp::Ge: return ">=";
  }
  return "=";
}

Expr col(std::string name) { return Expr{ColumnRef{std::move(name)}}; }
Expr str_lit(std::string text) { return Expr{Literal{LiteralKind::Str, std::move(text)}}; }
Expr num_lit(std::string text) { return Expr{Literal{LiteralKind::Num, std::move(text)}}; }
Expr agg(AggFn fn, std::optional<std::string> column, bool distinct) {
  Aggregate a{fn, distinct, std::nullopt};
  if (column) a.column = ColumnRef{std::move(*column)};
  return Expr{a};
}
Expr arith(char op, Expr lhs, Expr rhs) {
  return Expr{Arithmetic{op, Box<Expr>(std::move(lhs)), Box<Expr>(std::move(rhs))}};
}
Expr subquery(Select q) { return Expr{Subquery{Box<Select>(std::move(q))}}; }

std::vector<SqlToken> tokenize_sql(std::string_view s) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '\'' || c == '"') {
      const char quote = static_cast<char>(c);
      std::string value;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < s.size()) {
        if (s[j] == quote) {
          if (j + 1 < s.size() && s[j + 1] == quote) {
            value.push_back(quote);
            j += 2;
            continue;
          }
          closed = true;
          break;
        }
        value.push_back(s[j++]);
      }
      if (!closed) throw SqlError(ErrorCode::UnterminatedString, i, "unterminated string literal");
      out.push_back(SqlToken{TokenKind::Str, std::move(value), std::nullopt});
      i = j + 1;
      continue;
    }
    if (std::isdigit(c)) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      out.push_back(SqlToken{TokenKind::Num, std::string(s.substr(i, j - i)), std::nullopt});
      i = j;
      continue;
    }
    if (std::isalpha(c) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      std::string word(s.substr(i, j - i));
      std::string up = upper(word);
      if (word == "w" || word == "W") {
        out.push_back(key("w"));
      } else if (is_column_name(word)) {
        out.push_back(SqlToken{TokenKind::Col, word, std::nullopt});
      } else if (is_supported_keyword(up) || is_unsupported_keyword(up)) {
        out.push_back(key(up));
      } else {
        throw SqlError(ErrorCode::UnknownSymbol, i, "unknown word '" + word + "'");
      }
      i = j;
      continue;
    }
    auto two = s.substr(i, 2);
    if (two == "!=" || two == "<>" || two == "<=" || two == ">=") {
      out.push_back(key(two == "<>" ? "!=" : std::string(two)));
      i += 2;
      continue;
    }
    if (c == '(' || c == ')' || c == ',' || c == '*' || c == '=' || c == '<' || c == '>' ||
        c == '+' || c == '-') {
      out.push_back(key(std::string(1, static_cast<char>(c))));
      ++i;
      continue;
    }
    throw SqlError(ErrorCode::UnknownSymbol, i, std::string("unknown symbol '") + s[i] + "'");
  }
  return out;
}

Query parse(std::span<const SqlToken> tokens) { return Parser(tokens).parse_all(); }

Query parse_sql(std::string_view text) {
  auto tokens = tokenize_sql(text);
  return parse(tokens);
}

std::vector<SqlToken> serialize(const Query& q) {
  Writer w;
  w.select(q);
  return std::move(w.out);
}

std::string render(std::span<const SqlToken> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    if (tokens[i].kind == TokenKind::Str) {
      out.push_back('\'');
      for (char c : tokens[i].text) {
        if (c == '\'') out.push_back('\'');
        out.push_back(c);
      }
      out.push_back('\'');
    } else {
      out += tokens[i].text;
    }
  }
  return out;
}

std::vector<bool> literal_mask(std::span<const SqlToken> tokens) {
  std::vector<bool> mask(tokens.size(), false);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind == TokenKind::Str) {
      mask[i] = true;
    } else if (tokens[i].kind == TokenKind::Num) {
      bool structural = i > 0 && tokens[i - 1].kind == TokenKind::Key &&
                        (tokens[i - 1].text == "LIMIT" || tokens[i - 1].text == "+" ||
                         tokens[i - 1].text == "-");
      mask[i] = !structural;
    }
  }
  return mask;
}

std::vector<std::string> referenced_columns(const Query& q) {
  std::vector<std::string> out;
  collect_columns(q, out);
  return out;
}

nlohmann::json tokens_to_json(std::span<const SqlToken> tokens) {
  auto arr = nlohmann::json::array();
  for (const auto& t : tokens) {
    nlohmann::json j{{"kind", std::string(token_kind_name(t.kind))}, {"text", t.text}};
    if (t.source_span) j["span"] = {t.source_span->begin, t.source_span->end};
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<SqlToken> tokens_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "SQL token list must be an array");
  std::vector<SqlToken> out;
  for (const auto& tj : j) {
    if (!tj.is_object() || !tj.contains("kind") || !tj.contains("text"))
      throw Error(ErrorCode::SchemaError, "SQL token needs 'kind' and 'text'");
    auto kind = token_kind_from_name(tj.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::SchemaError, "unknown token kind " + tj.at("kind").dump());
    SqlToken t{*kind, tj.at("text").get<std::string>(), std::nullopt};
    if (tj.contains("span")) t.source_span = Span{tj.at("span")[0].get<int>(), tj.at("span")[1].get<int>()};
    out.push_back(std::move(t));
  }
  return out;
}

Template template_of_tokens(std::span<const SqlToken> tokens) {
  auto mask = literal_mask(tokens);
  Template t;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    switch (tokens[i].kind) {
      case TokenKind::Col: t.tokens.emplace_back("col"); break;
      case TokenKind::Str: t.tokens.emplace_back("STR"); break;
      case TokenKind::Num: t.tokens.push_back(mask[i] ? "NUM" : tokens[i].text); break;
      case TokenKind::Key: t.tokens.push_back(tokens[i].text); break;
    }
  }
  return t;
}

Template extract_template(const Query& q) {
  auto tokens = serialize(q);
  return template_of_tokens(tokens);
}

std::string Template::str() const { return text::join(tokens, " "); }

std::string Template::reporting() const {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(is_comp(t) ? "COMP" : t);
  return text::join(out, " ");
}

bool template_matches(const Template& t, std::string_view pattern) {
  return match_from(t.tokens, 0, pattern_tokens(pattern), 0);
}

std::span<const std::string_view> top_templates() { return kTopTemplates; }

}  // namespace alignsql::sql

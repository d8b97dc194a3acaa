#include <gtest/gtest.h>

#include <map>
#include <string>
#include <vector>

#include "alignsql/rng.hpp"
#include "alignsql/sqlir.hpp"
#include "support/reference.hpp"

using namespace alignsql;
using namespace alignsql::sql;

namespace {

SqlToken key(std::string t) { return {TokenKind::Key, std::move(t), std::nullopt}; }
SqlToken colt(std::string t) { return {TokenKind::Col, std::move(t), std::nullopt}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::BadConfig;
}

// Renames every column through `cols` and rewrites literal text, keeping kinds.
std::vector<SqlToken> substitute(std::vector<SqlToken> tokens, Rng& rng) {
  std::map<std::string, std::string> cols;
  for (auto& t : tokens) {
    if (t.kind == TokenKind::Col && t.text != "id") {
      auto [it, fresh] = cols.try_emplace(t.text, "c" + std::to_string(20 + cols.size()));
      t.text = it->second;
    } else if (t.kind == TokenKind::Str) {
      t.text = "lit" + std::to_string(uniform_index(rng, 1000));
    }
  }
  return tokens;
}

}  // namespace

TEST(SqlTokenize, Examples) {
  EXPECT_EQ(tokenize_sql("SELECT COUNT(c1) FROM w"),
            (std::vector<SqlToken>{key("SELECT"), key("COUNT"), key("("), colt("c1"), key(")"), key("FROM"), key("w")}));
  auto t = tokenize_sql("WHERE c2 = 'star one'");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[3], (SqlToken{TokenKind::Str, "star one", std::nullopt}));
  EXPECT_EQ(tokenize_sql("LIMIT 1"), (std::vector<SqlToken>{key("LIMIT"), {TokenKind::Num, "1", std::nullopt}}));
  EXPECT_EQ(tokenize_sql("select max(c1) from w")[1], key("MAX"));
  EXPECT_EQ(tokenize_sql("WHERE c1 = 'it''s'")[3].text, "it's");
}

TEST(SqlTokenize, Errors) {
  EXPECT_EQ(code_of([] { tokenize_sql("WHERE c1 = 'open"); }), ErrorCode::UnterminatedString);
  EXPECT_EQ(code_of([] { tokenize_sql("SELECT c1 FROM w WHERE c1 = #"); }), ErrorCode::UnknownSymbol);
}

TEST(SqlParse, OrderByLimit) {
  Query q = parse_sql("SELECT c2 FROM w ORDER BY c1 DESC LIMIT 1");
  ASSERT_EQ(q.order_by.size(), 1u);
  EXPECT_EQ(q.order_by[0].expr, col("c1"));
  EXPECT_EQ(q.order_by[0].dir, SortDir::Desc);
  EXPECT_EQ(q.limit, 1);
}

TEST(SqlParse, SubqueryArithmetic) {
  Query q = parse_sql("SELECT c2 FROM w WHERE c1 = ( SELECT c1 FROM w WHERE c2 = 'a' ) + 1");
  ASSERT_EQ(q.where.size(), 1u);
  const auto& cmp = std::get<Comparison>(q.where[0]);
  const auto& ar = std::get<Arithmetic>(cmp.rhs.node);
  EXPECT_EQ(ar.op, '+');
  EXPECT_TRUE(std::holds_alternative<Subquery>(ar.lhs->node));
  EXPECT_EQ(*ar.rhs, num_lit("1"));
}

TEST(SqlParse, Aggregate) {
  Query q = parse_sql("SELECT MAX(c1) FROM w");
  ASSERT_EQ(q.projections.size(), 1u);
  EXPECT_EQ(q.projections[0], agg(AggFn::Max, "c1"));
  EXPECT_EQ(parse_sql("SELECT COUNT ( * ) FROM w").projections[0], agg(AggFn::Count, std::nullopt));
}

TEST(SqlParse, Errors) {
  EXPECT_EQ(code_of([] { parse_sql("SELECT c1 FROM"); }), ErrorCode::SyntaxError);
  EXPECT_EQ(code_of([] { parse_sql("SELECT c1 w"); }), ErrorCode::SyntaxError);
  EXPECT_EQ(code_of([] { parse_sql("SELECT c1 FROM w WHERE c1 LIKE 'a'"); }), ErrorCode::UnsupportedConstruct);
  EXPECT_EQ(code_of([] { parse_sql("SELECT c1 FROM w JOIN w"); }), ErrorCode::UnsupportedConstruct);
  try {
    parse_sql("SELECT c1 FROM w WHERE");
    FAIL();
  } catch (const SqlError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
}

TEST(SqlSerialize, Canonical) {
  Select s;
  s.projections.push_back(agg(AggFn::Count, "c1"));
  EXPECT_EQ(render(serialize(s)), "SELECT COUNT ( c1 ) FROM w");
  Query d = parse_sql("SELECT DISTINCT c1 FROM w");
  auto tokens = serialize(d);
  EXPECT_EQ(tokens[1], key("DISTINCT"));
}

TEST(SqlSerialize, NestedRoundTrip) {
  const char* text = "SELECT c2 FROM w WHERE c1 > ( SELECT c1 FROM w WHERE c2 = 'A' ) ORDER BY c1 LIMIT 1";
  Query q = parse_sql(text);
  EXPECT_EQ(parse(serialize(q)), q);
  EXPECT_EQ(render(serialize(q)), text);
}

TEST(SqlSerialize, RandomRoundTrip) {
  Rng rng(2024);
  for (int trial = 0; trial < 600; ++trial) {
    Query q = testsupport::random_ast(rng);
    auto tokens = serialize(q);
    Query back = parse(tokens);
    ASSERT_EQ(back, q) << render(tokens);
    EXPECT_EQ(tokenize_sql(render(tokens)), tokens) << render(tokens);
    EXPECT_EQ(parse_sql(render(tokens)), q);
    EXPECT_EQ(tokens_from_json(tokens_to_json(tokens)), tokens);
  }
}

TEST(SqlTemplate, Examples) {
  EXPECT_EQ(extract_template(parse_sql("SELECT c2 FROM w WHERE c1 = 'spain'")).str(),
            "SELECT col FROM w WHERE col = STR");
  Template t = extract_template(parse_sql("SELECT COUNT(c3) FROM w WHERE c1 > 4"));
  EXPECT_EQ(t.str(), "SELECT COUNT ( col ) FROM w WHERE col > NUM");
  EXPECT_EQ(t.reporting(), "SELECT COUNT ( col ) FROM w WHERE col COMP NUM");
  EXPECT_TRUE(template_matches(extract_template(parse_sql("SELECT c2 FROM w ORDER BY c1 DESC LIMIT 1")),
                               "SELECT col FROM w ORDER BY col [DESC] LIMIT 1"));
  EXPECT_TRUE(template_matches(extract_template(parse_sql("SELECT c2 FROM w ORDER BY c1 LIMIT 1")),
                               "SELECT col FROM w ORDER BY col [DESC] LIMIT 1"));
  EXPECT_FALSE(template_matches(extract_template(parse_sql("SELECT c2 FROM w ORDER BY c1 LIMIT 2")),
                                "SELECT col FROM w ORDER BY col [DESC] LIMIT 1"));
  EXPECT_EQ(top_templates().size(), 10u);
}

TEST(SqlTemplate, IdempotentAndInvariant) {
  Rng rng(99);
  for (int trial = 0; trial < 600; ++trial) {
    Query q = testsupport::random_ast(rng);
    auto tokens = serialize(q);
    Template t = extract_template(q);
    EXPECT_EQ(template_of_tokens(tokens), t);
    // A template read back as SQL (col/STR/NUM as placeholders) is its own template.
    std::vector<SqlToken> inst = tokens;
    for (auto& tok : inst) {
      if (tok.kind == TokenKind::Col && tok.text != "id") tok.text = "c1";
      if (tok.kind == TokenKind::Str) tok.text = "x";
    }
    EXPECT_EQ(template_of_tokens(inst), t);
    EXPECT_EQ(template_of_tokens(substitute(tokens, rng)), t);
  }
}

TEST(SqlIr, LiteralMaskAndColumns) {
  auto tokens = serialize(parse_sql("SELECT c2 FROM w WHERE c1 = ( SELECT c1 FROM w WHERE c3 = 'a' ) + 1 LIMIT 2"));
  auto mask = literal_mask(tokens);
  int literals = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (mask[i]) {
      ++literals;
      EXPECT_EQ(tokens[i].text, "a");
    }
  EXPECT_EQ(literals, 1);
  EXPECT_EQ(referenced_columns(parse_sql("SELECT c2 FROM w WHERE c1 = 3")), (std::vector<std::string>{"c2", "c1"}));
}

TEST(SqlIr, KeywordVocabularyClosed) {
  for (auto k : sql_keywords()) {
    bool found = false;
    for (auto v : keyword_vocabulary()) found = found || v == k;
    EXPECT_TRUE(found) << k;
  }
}

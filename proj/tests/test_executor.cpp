#include <gtest/gtest.h>

#include <chrono>
#include <string>
#include <vector>

#include "alignsql/executor.hpp"
#include "alignsql/rng.hpp"
#include "support/reference.hpp"

using namespace alignsql;
using namespace alignsql::sql;

namespace {

Table schedule() {
  return build_database(RawTable{{"Date", "Opponent", "Venue"},
                                 {{"May 29, 1968", "Blue Harbor", "Home"},
                                  {"June 5, 1968", "Star One", "Away"},
                                  {"June 12, 1968", "Red Valley", "Home"},
                                  {"June 19, 1968", "Iron Bay", "Away"}}});
}

Answer run(const std::string& sql, const Table& t) { return execute(parse_sql(sql), t); }

ErrorCode code_of(const std::string& sql, const Table& t) {
  try {
    run(sql, t);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for " << sql;
  return ErrorCode::BadConfig;
}

}  // namespace

TEST(Executor, CountAndMax) {
  Table t = build_database(RawTable{{"A"}, {{"1"}, {"5"}, {"3"}}});
  Answer a = run("SELECT COUNT(c1_number) FROM w", t);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].number, 3.0);
  EXPECT_EQ(run("SELECT MAX(c1_number) FROM w", t)[0].number, 5.0);
}

TEST(Executor, CountSkipsNulls) {
  Table t = build_database(RawTable{{"A", "B"}, {{"1", "x"}, {"", "y"}, {"3", ""}}});
  EXPECT_EQ(run("SELECT COUNT(c1_number) FROM w", t)[0].number, 2.0);
  EXPECT_EQ(run("SELECT COUNT(*) FROM w", t)[0].number, 3.0);
  EXPECT_EQ(run("SELECT c2 FROM w WHERE c1_number > 0", t).size(), 2u);
}

TEST(Executor, NextGameMatchesRowScan) {
  Table t = schedule();
  // Row scan: the row whose id follows the row naming the opponent.
  std::string expected;
  for (std::size_t r = 0; r + 1 < t.row_count(); ++r)
    if (t.cell(r, 2).raw == "Star One") expected = t.cell(r + 1, 2).raw;
  Answer a = run("SELECT c2 FROM w WHERE id = ( SELECT id FROM w WHERE c2 = 'star one' ) + 1", t);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].raw, expected);
  Answer by_date = run(
      "SELECT c2 FROM w WHERE c1_datetime > ( SELECT c1_datetime FROM w WHERE c2 = 'Star One' ) "
      "ORDER BY c1_datetime LIMIT 1",
      t);
  ASSERT_EQ(by_date.size(), 1u);
  EXPECT_EQ(by_date[0].raw, expected);
}

TEST(Executor, Errors) {
  Table t = schedule();
  EXPECT_EQ(code_of("SELECT c9 FROM w", t), ErrorCode::UnboundColumn);
  EXPECT_EQ(code_of("SELECT c2 FROM w WHERE id = ( SELECT id FROM w WHERE c3 = 'Home' )", t),
            ErrorCode::NonScalarSubquery);
  EXPECT_EQ(code_of("SELECT c2 FROM w WHERE c2 > 3", t), ErrorCode::TypeMismatch);
}

TEST(Executor, StableTiesAndLimit) {
  Table t = build_database(RawTable{{"Name", "Pts"}, {{"a", "2"}, {"b", "3"}, {"c", "3"}, {"d", "1"}}});
  Answer a = run("SELECT c1 FROM w ORDER BY c2_number DESC LIMIT 2", t);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].raw, "b");
  EXPECT_EQ(a[1].raw, "c");
  EXPECT_EQ(run("SELECT c1 FROM w ORDER BY c2_number DESC LIMIT 2", t), a);
}

TEST(Executor, GroupBy) {
  Table t = build_database(RawTable{{"Venue"}, {{"Home"}, {"Away"}, {"Home"}}});
  Answer a = run("SELECT c1 FROM w GROUP BY c1 ORDER BY COUNT ( * ) DESC LIMIT 1", t);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].raw, "Home");
}

TEST(Executor, AnswersMatch) {
  EXPECT_TRUE(answers_match({Value::of_number(5)}, {Value::of_text("5")}));
  EXPECT_TRUE(answers_match({Value::of_text("a"), Value::of_text("b")}, {Value::of_text("b"), Value::of_text("a")}));
  EXPECT_FALSE(answers_match({Value::of_number(5)}, {Value::of_number(6)}));
  EXPECT_TRUE(answers_match({Value::of_text(" Star  One")}, {Value::of_text("star one")}));
  EXPECT_TRUE(answers_match({Value::of_number(1.0)}, {Value::of_number(1.0 + 1e-12)}));
  EXPECT_FALSE(answers_match({Value::of_text("a"), Value::of_text("a")}, {Value::of_text("a")}));
  EXPECT_EQ(answer_from_json(answer_to_json({Value::of_number(2), Value::of_text("x")})).size(), 2u);
}

TEST(Executor, MaxEqualsOrderByDescLimitOne) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    testsupport::RandomTable rt = testsupport::random_table(rng, 8, 5);
    const Table& t = rt.table;
    for (std::size_t c = 1; c < t.columns.size(); ++c) {
      bool has_null = false;
      for (std::size_t r = 0; r < t.row_count(); ++r) has_null = has_null || t.cell(r, c).null;
      if (has_null || t.row_count() == 0) continue;
      const std::string& name = t.columns[c].name;
      Answer a = run("SELECT MAX(" + name + ") FROM w", t);
      Answer b = run("SELECT " + name + " FROM w ORDER BY " + name + " DESC LIMIT 1", t);
      EXPECT_TRUE(answers_match(a, b)) << name;
    }
  }
}

TEST(Executor, MatchesReferenceInterpreter) {
  Rng rng(31337);
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    testsupport::RandomTable rt = testsupport::random_table(rng, 8, 5);
    Query q = testsupport::random_exec_query(rng, rt);
    auto expected = testsupport::reference_execute(q, rt);
    auto got = testsupport::to_ref(execute(q, rt.table));
    ASSERT_EQ(got, expected) << render(serialize(q));
    EXPECT_EQ(execute(q, rt.table), execute(q, rt.table));
    ++compared;
  }
  EXPECT_EQ(compared, 1000);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "alignsql/error.hpp"
#include "alignsql/rng.hpp"
#include "alignsql/tables.hpp"
#include "support/reference.hpp"

using namespace alignsql;

namespace {

DataType infer(std::vector<std::string> cells) { return infer_column_type(cells); }

std::int64_t gcd(std::int64_t a, std::int64_t b) { return b == 0 ? a : gcd(b, a % b); }

}  // namespace

TEST(Tables, InferBasicTypes) {
  EXPECT_EQ(infer({"5", "12", "89"}), DataType::Number);
  EXPECT_EQ(infer({"May 29, 1968"}), DataType::Datetime);
  EXPECT_EQ(infer({"5", "John Shermer"}), DataType::Text);
  EXPECT_EQ(infer({"12\xE2\x80\x93" "89"}), DataType::NumberSpan);
  EXPECT_EQ(infer({"3/5", "1/2"}), DataType::Fraction);
  EXPECT_EQ(infer({"W 3\xE2\x80\x93" "1", "L 0\xE2\x80\x93" "2"}), DataType::Score);
  EXPECT_EQ(infer({"12 km", "7.5 km"}), DataType::NumberWithUnit);
  EXPECT_EQ(infer({"12 Main Street"}), DataType::Address);
  EXPECT_EQ(infer({"KO (head kick)", "TKO (punches)"}), DataType::BinaryTuple);
  EXPECT_EQ(infer({"Wojtek Fibak, Joakim Nystr\xC3\xB6m"}), DataType::List);
  EXPECT_EQ(infer({"", "-", ""}), DataType::Text);
}

TEST(Tables, PriorityIsPinned) {
  auto p = type_priority();
  auto at = [&](DataType t) { return std::find(p.begin(), p.end(), t) - p.begin(); };
  EXPECT_LT(at(DataType::Datetime), at(DataType::Number));
  EXPECT_LT(at(DataType::Number), at(DataType::NumberSpan));
  EXPECT_EQ(p.back(), DataType::Text);
  EXPECT_EQ(p.size(), kDataTypeCount);
}

TEST(Tables, InferIsOrderInsensitive) {
  Rng rng(5);
  const std::vector<std::string> pool{"5", "12", "May 1968", "1/2", "KO (punch)", "", "abc", "3 km", "1\xE2\x80\x93" "2"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> cells;
    std::size_t n = 1 + uniform_index(rng, 5);
    for (std::size_t i = 0; i < n; ++i) cells.push_back(pool[uniform_index(rng, pool.size())]);
    DataType t = infer_column_type(cells);
    std::vector<std::string> shuffled = cells;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[uniform_index(rng, i)]);
    EXPECT_EQ(infer_column_type(shuffled), t);
  }
}

TEST(Tables, NormalizeCell) {
  EXPECT_EQ(normalize_cell("25,000", DataType::Number).number, 25000.0);
  EXPECT_EQ(normalize_cell("5", DataType::Number).number, 5.0);
  Value f = normalize_cell("3/5", DataType::Fraction);
  ASSERT_TRUE(f.fraction);
  EXPECT_EQ(*f.fraction, (Rational{3, 5}));
  EXPECT_DOUBLE_EQ(*f.number, 0.6);
  Value u = normalize_cell("12.5 km", DataType::NumberWithUnit);
  EXPECT_EQ(u.number, 12.5);
  EXPECT_EQ(u.unit, "km");
  Value t = normalize_cell("  Star   One ", DataType::Text);
  EXPECT_EQ(t.folded, "star one");
  EXPECT_EQ(t.raw, "Star   One");
  EXPECT_THROW(normalize_cell("abc", DataType::Number), Error);
  Value d1 = normalize_cell("May 29, 1968", DataType::Datetime);
  Value d2 = normalize_cell("June 5, 1968", DataType::Datetime);
  EXPECT_LT(*d1.number, *d2.number);
}

TEST(Tables, FractionsAgreeWithRationalOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::int64_t a = 1 + static_cast<std::int64_t>(uniform_index(rng, 30));
    std::int64_t b = 1 + static_cast<std::int64_t>(uniform_index(rng, 30));
    std::int64_t c = 1 + static_cast<std::int64_t>(uniform_index(rng, 30));
    std::int64_t d = 1 + static_cast<std::int64_t>(uniform_index(rng, 30));
    Value x = normalize_cell(std::to_string(a) + "/" + std::to_string(b), DataType::Fraction);
    Value y = normalize_cell(std::to_string(c) + "/" + std::to_string(d), DataType::Fraction);
    // a/b vs c/d by cross multiplication
    std::int64_t lhs = a * d, rhs = c * b;
    auto expected = lhs <=> rhs;
    EXPECT_EQ(*x.fraction <=> *y.fraction, expected) << a << "/" << b << " vs " << c << "/" << d;
    std::int64_t g = gcd(a, b);
    EXPECT_DOUBLE_EQ(x.fraction->value(), static_cast<double>(a / g) / static_cast<double>(b / g));
  }
}

TEST(Tables, BuildRenamesAndNumbersRows) {
  RawTable raw{{"Year", "Score"}, {{"1990", "3"}, {"1991", "5"}, {"1992", "4"}}};
  Table t = build_database(raw);
  EXPECT_EQ(t.name, "w");
  std::vector<std::string> names;
  for (const auto& c : t.columns) names.push_back(c.name);
  EXPECT_EQ(names, (std::vector<std::string>{"id", "c1_number", "c2_number"}));
  ASSERT_EQ(t.row_count(), 3u);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(t.cell(r, 0).number, static_cast<double>(r + 1));
  EXPECT_EQ(t.original_headers, raw.headers);
}

TEST(Tables, BinaryTupleSplits) {
  RawTable raw{{"Method"}, {{"KO (head kick)"}, {"TKO (punches)"}}};
  Table t = build_database(raw);
  ASSERT_EQ(t.columns.size(), 3u);
  EXPECT_EQ(t.columns[1].name, "c1_first");
  EXPECT_EQ(t.columns[2].name, "c1_second");
  EXPECT_EQ(t.columns[1].dtype, DataType::Text);
  EXPECT_EQ(t.columns[1].parent, "c1");
  EXPECT_EQ(t.columns[2].parent, "c1");
  EXPECT_EQ(t.cell(0, 1).raw, "KO");
  EXPECT_EQ(t.cell(0, 2).raw, "head kick");
  EXPECT_EQ(join_binary_tuple(t.cell(0, 1).raw, t.cell(0, 2).raw), "KO (head kick)");
}

TEST(Tables, ListBecomesChildTable) {
  RawTable raw{{"Players"}, {{"Wojtek Fibak, Joakim Nystr\xC3\xB6m"}, {"Ann Lee, Bo Chen"}}};
  Table t = build_database(raw);
  ASSERT_EQ(t.children.size(), 1u);
  const ChildTable& ch = t.children[0];
  ASSERT_EQ(ch.rows.size(), 4u);
  EXPECT_EQ(ch.rows[0].first, 1);
  EXPECT_EQ(ch.rows[1].second.raw, "Joakim Nystr\xC3\xB6m");
  EXPECT_EQ(ch.rows[3].first, 2);
}

TEST(Tables, AggregationRowDropped) {
  RawTable raw{{"Nation", "Gold"}, {{"Spain", "3"}, {"Norway", "5"}, {"Total", "8"}}};
  Table t = build_database(raw);
  EXPECT_EQ(t.row_count(), 2u);
  RawTable keep{{"Nation", "Gold"}, {{"Total", "8"}, {"Spain", "3"}}};
  EXPECT_EQ(build_database(keep).row_count(), 2u);
}

TEST(Tables, RaggedGridRejected) {
  RawTable raw{{"A", "B"}, {{"1", "2"}, {"3"}}};
  try {
    build_database(raw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RaggedGrid);
  }
}

TEST(Tables, CanonicalFormIsFixedPoint) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    testsupport::RandomTable rt = testsupport::random_table(rng, 8, 5);
    const Table& t = rt.table;
    for (std::size_t r = 0; r < t.row_count(); ++r) EXPECT_EQ(t.cell(r, 0).number, static_cast<double>(r + 1));
    EXPECT_EQ(build_database(t.to_raw()), t);
  }
  RawTable mixed{{"Method", "Players", "When"},
                 {{"KO (head kick)", "A B, C D", "May 1968"}, {"TKO (punches)", "E F", "June 1968"}}};
  Table t = build_database(mixed);
  EXPECT_EQ(build_database(t.to_raw()), t);
  EXPECT_EQ(t.to_raw(), mixed);
}

TEST(Tables, JsonRoundTrip) {
  RawTable raw{{"Date", "Opponent", "Attendance"}, {{"May 29, 1968", "Star One", "25,000"}}};
  Table t = build_database(raw);
  EXPECT_EQ(table_from_json(table_to_json(t)), t);
  EXPECT_EQ(raw_table_from_tsv("Date\tOpponent\tAttendance\nMay 29, 1968\tStar One\t25,000\n"), raw);
}

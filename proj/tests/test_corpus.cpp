#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "alignsql/corpus.hpp"
#include "alignsql/synth.hpp"
#include "alignsql/text.hpp"

using namespace alignsql;
using nlohmann::json;

namespace {

json fixture_tables() {
  return {{"tables",
           {{"t", {{"headers", {"Nation", "Gold", "Serial Name", "Total"}},
                   {"rows", {{"Spain", "3", "A-1", "6"}, {"Norway", "5", "B-2", "7"}}}}}}}};
}

json one_example(json overrides) {
  json ex{{"id", "e1"},
          {"table_id", "t"},
          {"question", {"how", "many", "total", "medals"}},
          {"sql", "SELECT c4_number FROM w WHERE c1 = 'Spain'"},
          {"alignments", json::array()}};
  for (auto& [k, v] : overrides.items()) ex[k] = v;
  return {{"examples", {ex}}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::BadConfig;
}

void expect_distribution_rows(const TargetRows& rows) {
  for (const auto& r : rows) {
    if (!r) continue;
    double sum = 0.0, hi = 0.0, lo = 1.0;
    for (double v : *r) {
      EXPECT_GE(v, 0.0);
      sum += v;
      if (v > 0) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
      }
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(hi, lo);
  }
}

}  // namespace

TEST(Corpus, LoadsFixtures) {
  Corpus c = load_corpus(FIXTURES_DIR);
  EXPECT_EQ(c.examples.size(), 5u);
  EXPECT_EQ(c.tables.size(), 2u);
  EXPECT_EQ(c.table_of(c.examples[0]).row_count(), 3u);  // trailing Total row dropped
  for (const auto& ex : c.examples) EXPECT_FALSE(ex.answer.empty()) << ex.id;
  Corpus again = corpus_from_json(tables_to_json(c), examples_to_json(c));
  ASSERT_EQ(again.examples.size(), c.examples.size());
  for (std::size_t i = 0; i < c.examples.size(); ++i) {
    EXPECT_EQ(again.examples[i].gold_tokens, c.examples[i].gold_tokens);
    EXPECT_EQ(again.examples[i].alignments, c.examples[i].alignments);
  }
}

TEST(Corpus, TwoExamplesOneTable) {
  json ex = one_example({});
  json second = ex["examples"][0];
  second["id"] = "e2";
  ex["examples"].push_back(second);
  Corpus c = corpus_from_json(fixture_tables(), ex);
  EXPECT_EQ(c.examples.size(), 2u);
  EXPECT_EQ(c.tables.size(), 1u);
}

TEST(Corpus, ValidationErrors) {
  EXPECT_EQ(code_of([] {
              corpus_from_json(fixture_tables(), one_example({{"alignments", {{{"question", {9}}, {"sql", {1}}}}}}));
            }),
            ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { corpus_from_json(fixture_tables(), one_example({{"table_id", "nope"}})); }),
            ErrorCode::DanglingTableRef);
  EXPECT_EQ(code_of([] { corpus_from_json(fixture_tables(), one_example({{"question", 3}})); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] {
              corpus_from_json(fixture_tables(), one_example({{"alignments", {{{"question", json::array()}, {"sql", {1}}}}}}));
            }),
            ErrorCode::SchemaError);
  try {
    corpus_from_json(fixture_tables(), one_example({{"table_id", "nope"}}));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("e1"), std::string::npos);
  }
}

TEST(Corpus, TargetsFromLinks) {
  // 4 question tokens; tokens 1 and 2 linked to c4.
  Corpus c = corpus_from_json(fixture_tables(), one_example({{"alignments", {{{"question", {1, 2}}, {"sql", {1}}}}}}));
  const AlignedExample& ex = c.examples[0];
  const Table& t = c.table_of(ex);
  AlignmentTargets a = build_alignment_targets(ex, t);
  const std::size_t c4 = *t.column_index("c4_number");
  ASSERT_EQ(a.q2c.size(), 4u);
  EXPECT_FALSE(a.q2c[0]);
  for (int i : {1, 2}) {
    ASSERT_TRUE(a.q2c[static_cast<std::size_t>(i)]);
    std::vector<double> onehot(t.columns.size(), 0.0);
    onehot[c4] = 1.0;
    EXPECT_EQ(*a.q2c[static_cast<std::size_t>(i)], onehot);
  }
  ASSERT_TRUE(a.c2q[c4]);
  EXPECT_EQ(*a.c2q[c4], (std::vector<double>{0, 0.5, 0.5, 0}));
  EXPECT_EQ(a.d2q.size(), ex.gold_tokens.size() + 1);
  EXPECT_TRUE(a.d2q[1]);
  EXPECT_FALSE(a.d2q[0]);
}

TEST(Corpus, DecoderTargetsForMultiTokenLink) {
  Corpus c = load_corpus(FIXTURES_DIR);
  const AlignedExample& ex = c.examples[1];  // "which nation won the most gold"
  AlignmentTargets a = build_alignment_targets(ex, c.table_of(ex));
  for (int k : {4, 5, 7, 8, 9}) {
    ASSERT_TRUE(a.d2q[static_cast<std::size_t>(k)]);
    std::vector<double> onehot(ex.question.size(), 0.0);
    onehot[4] = 1.0;
    EXPECT_EQ(*a.d2q[static_cast<std::size_t>(k)], onehot);
  }
  EXPECT_FALSE(a.d2q.back());
}

TEST(Corpus, NoLinksNoTargets) {
  Corpus c = load_corpus(FIXTURES_DIR);
  const AlignedExample& ex = c.examples[2];
  AlignmentTargets a = build_alignment_targets(ex, c.table_of(ex));
  for (const auto* rows : {&a.q2c, &a.c2q, &a.d2q})
    for (const auto& r : *rows) EXPECT_FALSE(r);
}

TEST(Corpus, UnionOverSharedToken) {
  Corpus c = load_corpus(FIXTURES_DIR);
  const AlignedExample& ex = c.examples[3];  // token 3 appears in two links to c2
  AlignmentTargets a = build_alignment_targets(ex, c.table_of(ex));
  const std::size_t c2 = *c.table_of(ex).column_index("c2");
  ASSERT_TRUE(a.c2q[c2]);
  EXPECT_EQ(*a.c2q[c2], (std::vector<double>{0.5, 0, 0, 0.5, 0, 0, 0, 0}));
  expect_distribution_rows(a.q2c);
  expect_distribution_rows(a.c2q);
  expect_distribution_rows(a.d2q);
}

TEST(Corpus, TargetsNormalizedOnSyntheticCorpus) {
  Corpus c = synthesize(SynthOptions{7, 200, 5, 0.3});
  EXPECT_EQ(c.examples.size(), 200u);
  for (const auto& ex : c.examples) {
    AlignmentTargets a = build_alignment_targets(ex, c.table_of(ex));
    expect_distribution_rows(a.q2c);
    expect_distribution_rows(a.c2q);
    expect_distribution_rows(a.d2q);
  }
}

TEST(Corpus, LiteralSpans) {
  Corpus c = load_corpus(FIXTURES_DIR);
  auto before = c.examples;
  FilterReport r = derive_literal_spans(c.examples);
  EXPECT_EQ(r.kept, 5u);
  EXPECT_TRUE(r.rejected.empty());
  for (std::size_t i = 0; i < c.examples.size(); ++i) {
    EXPECT_EQ(c.examples[i].gold_query, before[i].gold_query);
    auto mask = sql::literal_mask(c.examples[i].gold_tokens);
    for (std::size_t k = 0; k < mask.size(); ++k)
      if (mask[k]) EXPECT_TRUE(c.examples[i].gold_tokens[k].source_span) << c.examples[i].id;
  }
  // 'Star One' from "star one"; 20000 from "20,000"
  EXPECT_EQ(c.examples[3].gold_tokens[15].source_span, (sql::Span{5, 6}));
  EXPECT_EQ(c.examples[4].gold_tokens[10].source_span, (sql::Span{6, 6}));
  // medals-3 has no links; the span is found anywhere in the question.
  EXPECT_EQ(c.examples[2].gold_tokens[7].source_span, (sql::Span{5, 5}));
}

TEST(Corpus, LiteralWithoutSpanIsDropped) {
  Corpus c = corpus_from_json(fixture_tables(), one_example({{"question", {"how", "many", "for", "norway"}}}));
  FilterReport r = derive_literal_spans(c.examples);
  EXPECT_EQ(r.kept, 0u);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].example_id, "e1");
  EXPECT_EQ(r.rejected[0].literal, "Spain");
  EXPECT_LT(r.rejected[0].best_score, kFuzzyThreshold);
  EXPECT_TRUE(c.examples.empty());
}

TEST(Corpus, ExactMatchFeatures) {
  Table t = build_database(RawTable{{"Nation", "Total", "Athlete"}, {{"Spain", "6", "Ann Lee"}}});
  std::vector<std::string> q{"how", "many", "total", "medals", "has", "spain", "won", "?"};
  ExactMatchFeatures f = exact_match_features(q, t);
  EXPECT_TRUE(f.in_header[2]);
  EXPECT_FALSE(f.in_header[3]);
  EXPECT_TRUE(f.in_cell[5]);
  EXPECT_FALSE(f.in_cell[2]);
  EXPECT_TRUE(f.name_in_question[*t.column_index("c2_number")]);
  EXPECT_FALSE(f.name_in_question[*t.column_index("c3")]);
  std::vector<std::string> upper{"HOW", "Many", "TOTAL", "Medals", "has", "SPAIN", "won", "?"};
  ExactMatchFeatures g = exact_match_features(upper, t);
  EXPECT_EQ(g.in_header, f.in_header);
  EXPECT_EQ(g.in_cell, f.in_cell);
  EXPECT_EQ(g.name_in_question, f.name_in_question);
  std::vector<std::string> who{"who", "won", "?"};
  EXPECT_FALSE(exact_match_features(who, t).name_in_question[*t.column_index("c3")]);
}

TEST(Corpus, HeuristicAlignments) {
  Table t = build_database(RawTable{{"Serial Name", "Year"}, {{"Alpha", "1990"}}});
  std::vector<std::string> q{"which", "serial", "aired", "first", "?"};
  auto links = heuristic_alignments(q, t);
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].question, (std::vector<int>{1}));
  EXPECT_EQ(links[0].columns, (std::vector<std::size_t>{1}));
  // Fuzzy oracle: every other n-gram scores below "serial" against the header words.
  for (std::size_t b = 0; b < q.size(); ++b)
    for (std::size_t e = b; e < q.size() && e - b < 5; ++e) {
      std::string gram = text::join(std::span(q).subspan(b, e - b + 1), " ");
      if (gram == "serial") continue;
      EXPECT_LT(std::max({text::fuzzy_ratio(gram, "serial"), text::fuzzy_ratio(gram, "name"),
                          text::fuzzy_ratio(gram, "serial name")}),
                1.0);
    }
  std::vector<std::string> none{"what", "happened", "?"};
  EXPECT_TRUE(heuristic_alignments(none, t).empty());
  std::vector<std::string> exact{"the", "serial", "name", "in", "1990"};
  auto l2 = heuristic_alignments(exact, t);
  ASSERT_FALSE(l2.empty());
  EXPECT_EQ(l2[0].question, (std::vector<int>{1, 2}));
}

TEST(Corpus, Splits) {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("t" + std::to_string(i));
  auto folds = make_splits(ids, 5, 42);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::string> seen;
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 2u);
    for (const auto& id : f) EXPECT_TRUE(seen.insert(id).second);
  }
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(make_splits(ids, 5, 42), folds);
  auto uneven = make_splits(std::vector<std::string>(ids.begin(), ids.begin() + 7), 3, 1);
  std::size_t lo = 99, hi = 0;
  for (const auto& f : uneven) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
  }
  EXPECT_LE(hi - lo, 1u);
  EXPECT_EQ(code_of([&] { make_splits({"a", "b"}, 3, 1); }), ErrorCode::TooFewTables);
}

TEST(Corpus, Vocab) {
  std::vector<std::vector<std::string>> seqs;
  for (int i = 0; i < 5; ++i) seqs.push_back({"five"});
  for (int i = 0; i < 4; ++i) seqs.push_back({"four"});
  Vocab v = Vocab::build(seqs, 5);
  EXPECT_EQ(v.index("four"), Vocab::kUnk);
  EXPECT_GT(v.index("five"), Vocab::kStop);
  Vocab empty = Vocab::build({}, 5);
  EXPECT_EQ(empty.size(), 3u);
  EXPECT_EQ(empty.index("x"), Vocab::kUnk);
  Vocab back = Vocab::from_json(v.to_json());
  EXPECT_EQ(back.index("five"), v.index("five"));
}

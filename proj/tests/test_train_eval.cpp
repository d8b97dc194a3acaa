#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "alignsql/synth.hpp"
#include "alignsql/train_eval.hpp"
#include "support/tiny.hpp"

using namespace alignsql;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::BadConfig;
}

Config small_config() {
  Config c;
  c.word_dim = c.decoder_embedding = 12;
  c.char_dim = c.char_hidden = 4;
  c.hidden = c.decoder_hidden = c.mlp_hidden = 12;
  c.encoder_layers = c.decoder_layers = 1;
  c.min_word_count = 1;
  c.max_epochs = 3;
  c.learning_rate = 0.005;
  return c;
}

Corpus small_synth() { return synthesize(SynthOptions{3, 40, 5, 0.3}); }

Table schedule() {
  return build_database(RawTable{{"Date", "Opponent"},
                                 {{"May 29, 1968", "Blue Harbor"}, {"June 5, 1968", "Star One"}, {"June 12, 1968", "Star Two"}}});
}

AlignedExample example_on(const std::string& sql, const Table& t) {
  AlignedExample ex;
  ex.id = "x";
  ex.question = {"q"};
  ex.gold_query = sql::parse_sql(sql);
  ex.gold_tokens = sql::serialize(ex.gold_query);
  ex.answer = execute(ex.gold_query, t);
  return ex;
}

Decoded decoded(const std::string& sql) {
  Decoded d;
  d.query = sql::parse_sql(sql);
  d.tokens = sql::serialize(*d.query);
  return d;
}

}  // namespace

TEST(TrainEval, RepairsLiteralToClosestCell) {
  Table t = schedule();
  sql::Query q = sql::parse_sql("SELECT c1_datetime FROM w WHERE c2 = 'star one'");
  repair_literals(q, t);
  EXPECT_EQ(sql::render(sql::serialize(q)), "SELECT c1_datetime FROM w WHERE c2 = 'Star One'");
  sql::Query in = sql::parse_sql("SELECT c1_datetime FROM w WHERE c2 IN ( 'star twoo' , 'blue harbour' )");
  repair_literals(in, t);
  EXPECT_EQ(sql::render(sql::serialize(in)), "SELECT c1_datetime FROM w WHERE c2 IN ( 'Star Two' , 'Blue Harbor' )");
  sql::Query nested = sql::parse_sql("SELECT c2 FROM w WHERE id = ( SELECT id FROM w WHERE c2 = 'star one' ) + 1");
  repair_literals(nested, t);
  EXPECT_NE(sql::render(sql::serialize(nested)).find("'Star One'"), std::string::npos);
}

TEST(TrainEval, ScoringExamples) {
  Table t = build_database(RawTable{{"Name", "Pts"}, {{"a", "2"}, {"b", "5"}, {"c", "3"}}});
  AlignedExample gold = example_on("SELECT c1 FROM w ORDER BY c2_number DESC LIMIT 1", t);
  Prediction same = score_prediction(gold, t, decoded("SELECT c1 FROM w ORDER BY c2_number DESC LIMIT 1"));
  EXPECT_TRUE(same.lf && same.exe && same.temp && same.col);

  AlignedExample gmax = example_on("SELECT c2_number FROM w ORDER BY c2_number DESC LIMIT 1", t);
  Prediction eq = score_prediction(gmax, t, decoded("SELECT MAX ( c2_number ) FROM w"));
  EXPECT_FALSE(eq.lf);
  EXPECT_FALSE(eq.temp);
  EXPECT_TRUE(eq.exe);

  Prediction wrong_col = score_prediction(gold, t, decoded("SELECT c2_number FROM w ORDER BY c2_number DESC LIMIT 1"));
  EXPECT_TRUE(wrong_col.temp);
  EXPECT_FALSE(wrong_col.col);
  EXPECT_FALSE(wrong_col.lf);

  Decoded failed;
  failed.error = "DecodeUnparseable: x";
  Prediction f = score_prediction(gold, t, failed);
  EXPECT_FALSE(f.lf || f.exe || f.temp || f.col);

  Prediction unbound = score_prediction(gold, t, decoded("SELECT c9 FROM w"));
  EXPECT_FALSE(unbound.exe);
}

TEST(TrainEval, AggregateMetrics) {
  std::vector<Prediction> preds(4);
  preds[0].lf = preds[0].exe = preds[0].temp = preds[0].col = true;
  preds[1].exe = preds[1].temp = true;
  preds[2].exe = true;
  preds[3].error = "DecodeUnparseable: y";
  Metrics m = aggregate(preds);
  EXPECT_EQ(m.count, 4u);
  EXPECT_DOUBLE_EQ(m.acc_lf, 0.25);
  EXPECT_DOUBLE_EQ(m.acc_exe, 0.75);
  EXPECT_DOUBLE_EQ(m.acc_temp, 0.5);
  ASSERT_TRUE(m.acc_col);
  EXPECT_DOUBLE_EQ(*m.acc_col, 0.5);
  EXPECT_EQ(m.template_correct, 2u);
  EXPECT_EQ(m.decode_failures, 1u);
  Metrics none = aggregate({preds[2]});
  EXPECT_FALSE(none.acc_col);
  EXPECT_FALSE(none.to_json()["acc_col_defined"].get<bool>());
  EXPECT_TRUE(none.to_json()["acc_col"].is_null());
}

TEST(TrainEval, Entropy) {
  for (int k : {1, 2, 5, 9}) {
    Eigen::RowVectorXd u = Eigen::RowVectorXd::Constant(k, 1.0 / k);
    EXPECT_NEAR(entropy(u), std::log(static_cast<double>(k)), 1e-12);
  }
  Eigen::RowVectorXd onehot = Eigen::RowVectorXd::Zero(4);
  onehot(2) = 1.0;
  EXPECT_EQ(entropy(onehot), 0.0);
}

TEST(TrainEval, OracleDiagnostics) {
  Corpus corpus = testsupport::tiny_corpus();
  Config c = testsupport::tiny_config();
  c.oracle_mode = "both";
  Model m = testsupport::make_model(c, corpus);
  Diagnostics d = attention_diagnostics(m, corpus, {0});
  EXPECT_EQ(d.q2c.recall, 1.0);
  EXPECT_EQ(d.d2q.recall, 1.0);
  // The c1 row is uniform over two tokens; argmax can hit one of them.
  EXPECT_EQ(d.c2q.links, 2u);
  EXPECT_EQ(d.c2q.recall, 0.5);
  EXPECT_GT(d.q2c.links, 0u);
  EXPECT_TRUE(d.to_json().contains("recall_definition"));
}

TEST(TrainEval, MemorizesOneExample) {
  Corpus corpus = testsupport::tiny_corpus();
  Config c = small_config();
  c.word_dim = c.decoder_embedding = 16;
  c.hidden = c.decoder_hidden = c.mlp_hidden = 16;
  c.max_epochs = 50;
  c.dropout = 0.0;
  c.learning_rate = 0.01;
  TrainResult r = train(c, corpus, {0}, {});
  ASSERT_EQ(r.epochs.size(), 50u);
  const double initial = r.epochs.front().train_seq2seq;
  nn::Graph g(false);
  const AlignedExample& ex = corpus.examples[0];
  const double final_nll = r.model.loss(g, r.model.prepare(ex, corpus.table_of(ex))).seq2seq;
  EXPECT_LT(final_nll, 0.1 * initial) << initial << " -> " << final_nll;
  Decoded d = greedy_decode(r.model, ex, corpus.table_of(ex), 60);
  ASSERT_FALSE(d.error) << *d.error;
  ASSERT_EQ(d.tokens.size(), ex.gold_tokens.size());
  for (std::size_t i = 0; i < d.tokens.size(); ++i) EXPECT_TRUE(d.tokens[i].same_surface(ex.gold_tokens[i])) << i;
}

TEST(TrainEval, ShortDecodeNeverHangs) {
  Corpus corpus = testsupport::tiny_corpus();
  Model m = testsupport::make_model(testsupport::tiny_config(), corpus);
  const AlignedExample& ex = corpus.examples[0];
  for (int len : {0, 1, 2}) {
    Decoded d = greedy_decode(m, ex, corpus.table_of(ex), len);
    EXPECT_TRUE(d.error || d.tokens.size() <= static_cast<std::size_t>(len));
  }
}

TEST(TrainEval, DeterministicTraining) {
  Corpus corpus = small_synth();
  Config c = small_config();
  Split s = split_by_tables(corpus, c);
  TrainResult a = train(c, corpus, s.train, s.dev);
  TrainResult b = train(c, corpus, s.train, s.dev);
  EXPECT_EQ(a.log_json().dump(), b.log_json().dump());
  EXPECT_EQ(a.model.checkpoint().dump(), b.model.checkpoint().dump());
  // Evaluation leaves the model untouched.
  std::string before = a.model.checkpoint().dump();
  Metrics m1 = evaluate(a.model, corpus, s.dev);
  Metrics m2 = evaluate(a.model, corpus, s.dev);
  EXPECT_EQ(a.model.checkpoint().dump(), before);
  EXPECT_EQ(m1.to_json().dump(), m2.to_json().dump());
  EXPECT_LE(m1.acc_lf, m1.acc_exe);
}

TEST(TrainEval, PatienceZeroStopsAfterFirstMiss) {
  Corpus corpus = small_synth();
  Config c = small_config();
  c.max_epochs = 30;
  c.patience = 0;
  Split s = split_by_tables(corpus, c);
  TrainResult r = train(c, corpus, s.train, s.dev);
  ASSERT_LT(r.epochs.size(), 30u);
  for (std::size_t i = 0; i + 1 < r.epochs.size(); ++i) EXPECT_TRUE(r.epochs[i].improved);
  EXPECT_FALSE(r.epochs.back().improved);
}

TEST(TrainEval, SplitsAreTableDisjoint) {
  Corpus corpus = small_synth();
  Split s = split_by_tables(corpus, small_config());
  std::set<std::string> train_tables, dev_tables;
  for (auto i : s.train) train_tables.insert(corpus.examples[i].table_id);
  for (auto i : s.dev) dev_tables.insert(corpus.examples[i].table_id);
  for (const auto& t : dev_tables) EXPECT_FALSE(train_tables.count(t));
  EXPECT_EQ(s.train.size() + s.dev.size(), corpus.examples.size());
}

TEST(TrainEval, Subsample) {
  std::vector<std::size_t> items(37);
  std::iota(items.begin(), items.end(), 100);
  std::set<std::size_t> all(items.begin(), items.end());
  for (double f : kDataFractions) {
    auto s = subsample(items, f, 4);
    EXPECT_EQ(s.size(), static_cast<std::size_t>(std::ceil(f * 37 - 1e-9)));
    for (auto x : s) EXPECT_TRUE(all.count(x));
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), s.size());
  }
  EXPECT_TRUE(subsample(items, 0.0, 4).empty());
  EXPECT_EQ(subsample(items, 0.01, 4).size(), 1u);
  // Smaller fractions are prefixes of larger ones.
  auto small = subsample(items, 0.2, 4), big = subsample(items, 0.4, 4);
  EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
  EXPECT_EQ(code_of([&] { subsample(items, 1.5, 4); }), ErrorCode::FractionOutOfRange);
  EXPECT_EQ(code_of([&] { subsample(items, -0.1, 4); }), ErrorCode::FractionOutOfRange);
}

TEST(TrainEval, LearningCurveEndpoints) {
  Corpus corpus = small_synth();
  Config c = small_config();
  c.max_epochs = 2;
  CurveReport r = learning_curves(c, corpus, {1.0}, {0.0, 1.0});
  Split s = split_by_tables(corpus, c);
  TrainResult full = train(c, corpus, s.train, s.dev);
  EXPECT_EQ(r.data[0].metrics.to_json().dump(), evaluate(full.model, corpus, s.dev).to_json().dump());
  EXPECT_EQ(r.alignment[1].metrics.to_json().dump(), r.data[0].metrics.to_json().dump());

  Config plus = Config::preset("seq2seq+");
  for (const char* k : {"word_dim", "decoder_embedding", "char_dim", "char_hidden", "hidden", "decoder_hidden",
                        "mlp_hidden", "encoder_layers", "decoder_layers", "min_word_count", "max_epochs",
                        "learning_rate"})
    plus.set(k, c.to_json()[k].dump());
  TrainResult base = train(plus, corpus, s.train, s.dev);
  EXPECT_EQ(r.alignment[0].metrics.to_json().dump(), evaluate(base.model, corpus, s.dev).to_json().dump());

  EXPECT_EQ(code_of([&] { learning_curves(c, corpus, {1.5}, {}); }), ErrorCode::FractionOutOfRange);
  EXPECT_EQ(code_of([&] { learning_curves(c, corpus, {0.0}, {}); }), ErrorCode::FractionOutOfRange);
}

TEST(TrainEval, TemplateGeneralization) {
  Corpus corpus = small_synth();
  Config c = small_config();
  c.max_epochs = 1;
  const std::string pattern = "SELECT col FROM w ORDER BY col [DESC] LIMIT 1";
  auto held = template_instances(corpus, pattern);
  ASSERT_FALSE(held.empty());
  TemplateReport r = template_generalization(c, corpus, pattern);
  EXPECT_EQ(r.eval_count, held.size());
  EXPECT_EQ(r.train_count + r.eval_count, corpus.examples.size());
  EXPECT_EQ(r.metrics.count, held.size());
  EXPECT_EQ(code_of([&] { template_generalization(c, corpus, "SELECT col FROM w WHERE col = STR AND col = STR"); }),
            ErrorCode::UnknownTemplate);
}

TEST(TrainEval, EmptyTrainSet) {
  Corpus corpus = small_synth();
  EXPECT_EQ(code_of([&] { train(small_config(), corpus, {}, {}); }), ErrorCode::EmptyTrainSet);
}

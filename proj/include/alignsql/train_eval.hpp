#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alignsql/config.hpp"
#include "alignsql/corpus.hpp"
#include "alignsql/model.hpp"

namespace alignsql {

struct Metrics {
  std::size_t count = 0;
  double acc_lf = 0.0;
  double acc_exe = 0.0;
  double acc_temp = 0.0;
  /// Over the template-correct subset only; undefined when that subset is empty.
  std::optional<double> acc_col;
  std::size_t template_correct = 0;
  std::size_t decode_failures = 0;

  nlohmann::json to_json() const;
};

struct Prediction {
  std::string example_id;
  std::vector<sql::SqlToken> tokens;  ///< empty on failure
  std::optional<std::string> error;
  bool lf = false;
  bool exe = false;
  bool temp = false;
  bool col = false;

  nlohmann::json to_json() const;
};

struct Decoded {
  std::vector<sql::SqlToken> tokens;
  std::optional<sql::Query> query;
  std::optional<std::string> error;
};

/// Greedy decode, numeric literals rendered as NUM, string literals in
/// equality and IN predicates repaired to the closest cell of their column.
/// The result is the canonical serialization of the parsed query.
Decoded greedy_decode(Model& model, const AlignedExample& ex, const Table& t, int max_len);
Decoded greedy_decode(Model& model, const ModelInput& in, const Table& t, int max_len);

/// Replaces each string literal compared with a column by the most similar
/// distinct cell value of that column (first cell wins ties).
void repair_literals(sql::Query& q, const Table& t);

Prediction score_prediction(const AlignedExample& ex, const Table& t, const Decoded& d);
Metrics aggregate(const std::vector<Prediction>& predictions);

Metrics evaluate(Model& model, const Corpus& corpus, const std::vector<std::size_t>& set,
                 std::vector<Prediction>* predictions = nullptr);

struct ModuleDiagnostics {
  double recall = 0.0;
  double entropy = 0.0;
  std::size_t links = 0;
  std::size_t rows = 0;
  nlohmann::json to_json() const;
};

struct Diagnostics {
  ModuleDiagnostics q2c;
  ModuleDiagnostics c2q;
  ModuleDiagnostics d2q;
  nlohmann::json to_json() const;
};

/// Shannon entropy in nats; zero-probability entries contribute nothing.
double entropy(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Recall: fraction of gold links (i -> j) where j is the argmax of attention
/// row i (lowest index on ties). Entropy: mean over every attention row.
/// Gold links always come from the manual alignments.
Diagnostics attention_diagnostics(Model& model, const Corpus& corpus, const std::vector<std::size_t>& set);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
};

/// Table-disjoint split: the `dev_fold` fold of `folds` is dev, the rest train.
Split split_by_tables(const Corpus& corpus, const Config& config);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_seq2seq = 0.0;
  double train_att = 0.0;
  double train_cp = 0.0;
  double grad_norm = 0.0;
  int clamped = 0;
  Metrics dev;
  bool improved = false;
  nlohmann::json to_json() const;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  std::size_t train_examples = 0;
  std::size_t aligned_examples = 0;
  std::size_t skipped = 0;
  nlohmann::json log_json() const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Deterministic prefix of a seeded permutation: ceil(fraction * n) items,
/// at least one when n > 0.
std::vector<std::size_t> subsample(const std::vector<std::size_t>& items, double fraction, std::uint64_t seed);

/// Minibatch Adam with gradient clipping and early stopping on dev ACC_EXE
/// (ACC_LF breaks ties). `train_fraction` and `alignment_fraction` from the
/// config select nested subsets of `train`. The returned model holds the
/// best epoch's parameters; with an empty dev set the last epoch is kept.
TrainResult train(const Config& config, const Corpus& corpus, const std::vector<std::size_t>& train,
                  const std::vector<std::size_t>& dev, const EpochCallback& on_epoch = {});

struct CurvePoint {
  double fraction = 0.0;
  Metrics metrics;
};

struct CurveReport {
  std::vector<CurvePoint> data;
  std::vector<CurvePoint> alignment;
  nlohmann::json to_json() const;
};

inline const std::vector<double> kDataFractions = {0.05, 0.10, 0.20, 0.40, 0.80, 1.00};
inline const std::vector<double> kAlignmentFractions = {0.00, 0.05, 0.10, 0.20, 0.40, 1.00};

CurveReport learning_curves(const Config& config, const Corpus& corpus,
                            const std::vector<double>& data_fractions = kDataFractions,
                            const std::vector<double>& alignment_fractions = kAlignmentFractions);

struct TemplateReport {
  std::string pattern;
  std::size_t train_count = 0;
  std::size_t eval_count = 0;
  Metrics metrics;
  nlohmann::json to_json() const;
};

/// Indices of the examples whose gold template matches `pattern`.
std::vector<std::size_t> template_instances(const Corpus& corpus, std::string_view pattern);

/// Trains on every example outside the template (no dev set, so all
/// epochs run) and evaluates on exactly its instances.
TemplateReport template_generalization(const Config& config, const Corpus& corpus, std::string_view pattern);

struct TemplateSweep {
  std::vector<TemplateReport> templates;
  double macro_acc_lf = 0.0;
  double macro_acc_exe = 0.0;
  nlohmann::json to_json() const;
};

/// Templates absent from the corpus are skipped; the macro-average covers
/// the rest.
TemplateSweep template_generalization_sweep(const Config& config, const Corpus& corpus);

}  // namespace alignsql

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alignsql/config.hpp"
#include "alignsql/corpus.hpp"
#include "alignsql/tensor.hpp"

namespace alignsql {

struct Forward;

struct Vocabularies {
  Vocab words;
  Vocab chars;
  Vocab pos;
  Vocab ner;

  /// Words (question tokens and header words) use `min_word_count`; the
  /// other vocabularies keep everything seen.
  static Vocabularies build(const Corpus& corpus, const std::vector<std::size_t>& train,
                            std::size_t min_word_count);
  nlohmann::json to_json() const;
  static Vocabularies from_json(const nlohmann::json& j);
};

/// Output type of one decoder step.
enum class OutType { Key = 0, Col = 1, Str = 2 };

/// Gold decision at one step: a KEY index, a column index, or a question
/// span [index, end] for a copied literal.
struct GoldStep {
  OutType type = OutType::Key;
  int index = 0;
  int end = 0;
};

/// Everything the network reads for one (question, table) pair, already
/// mapped to vocabulary indices, plus the supervision for training.
struct ModelInput {
  std::string example_id;
  std::vector<std::string> question;
  std::vector<std::string> folded;
  std::vector<int> words;
  std::vector<int> pos;
  std::vector<int> ner;
  std::vector<int> in_header;
  std::vector<int> in_cell;

  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> header_words;
  std::vector<std::vector<int>> header_word_ids;
  std::vector<int> dtypes;
  std::vector<int> name_in_question;

  AlignmentTargets targets;
  TargetRows cp_targets;
  std::vector<GoldStep> gold;  ///< includes the final stop step
  std::optional<std::string> gold_error;
};

struct LossBreakdown {
  double seq2seq = 0.0;
  double att = 0.0;
  double att_q2c = 0.0;
  double att_c2q = 0.0;
  double att_d2q = 0.0;
  double cp = 0.0;
  double total = 0.0;
  /// Attention-loss terms whose log argument hit the 1e-12 floor.
  int clamped = 0;
  nn::Var total_var;

  nlohmann::json to_json() const;
};

/// Attention matrices actually used by the network (after any oracle
/// substitution) under teacher forcing on the gold sequence.
struct AttentionMaps {
  nn::Mat q2c;  ///< n x m
  nn::Mat c2q;  ///< m x n
  nn::Mat d2q;  ///< steps x n
};

/// One greedy step's choice.
struct DecodedStep {
  OutType type = OutType::Key;
  int index = 0;
  int end = 0;
};

class Model {
 public:
  Model(Config config, Vocabularies vocabs);

  const Config& config() const { return config_; }
  const Vocabularies& vocabs() const { return vocabs_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  /// KEY output vocabulary: the keyword vocabulary followed by the stop symbol.
  const std::vector<std::string>& key_vocab() const { return key_vocab_; }
  int stop_index() const { return static_cast<int>(key_vocab_.size()) - 1; }

  ModelInput prepare(const AlignedExample& ex, const Table& t) const;

  /// Teacher-forced loss on `g`. Throws GoldTokenOutOfVocab when the input
  /// has no usable gold sequence.
  LossBreakdown loss(nn::Graph& g, const ModelInput& in);

  /// Greedy argmax decoding (lowest index wins ties), up to `max_len` steps
  /// or the stop symbol. The stop step is not included.
  std::vector<DecodedStep> greedy_steps(const ModelInput& in, int max_len);

  AttentionMaps attention(const ModelInput& in);

  /// Step choices rendered as SQL tokens: keywords, column names, copied
  /// question spans (as STR with source span) and numerals as NUM.
  std::vector<sql::SqlToken> render_steps(const ModelInput& in, const std::vector<DecodedStep>& steps) const;

  nlohmann::json checkpoint() const;
  static Model from_checkpoint(const nlohmann::json& j);

 private:
  friend struct Forward;

  Config config_;
  Vocabularies vocabs_;
  nn::ParameterStore params_;
  std::vector<std::string> key_vocab_;
  int go_index_ = 0;
  int col_placeholder_ = 0;
  int str_placeholder_ = 0;

  void create_parameters();
};

/// Attention-loss variants over rows with targets (mask 1) of `a`.
/// Returns the summed loss and the number of clamped log arguments.
std::pair<nn::Var, int> attention_loss(nn::Var a, const nn::Mat& target, const nn::Mat& mask,
                                       std::string_view variant);

/// Closed-form single-row variants, for tests and documentation.
double attention_loss_value(const std::vector<double>& a, const std::vector<double>& target,
                            std::string_view variant);

}  // namespace alignsql

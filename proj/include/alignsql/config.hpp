#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace alignsql {

/// Flat run configuration shared by the model, the trainer and the CLI.
/// Every ablation is a one-key diff. Defaults are the full supervised model.
struct Config {
  int version = 1;

  // Model sizes.
  int word_dim = 100;
  int char_dim = 16;
  int char_hidden = 16;
  int pos_dim = 8;
  int ner_dim = 8;
  int exact_match_dim = 8;
  int dtype_dim = 8;
  int hidden = 128;
  int encoder_layers = 2;
  int decoder_embedding = 256;
  int decoder_hidden = 128;
  int decoder_layers = 2;
  int mlp_hidden = 128;
  double dropout = 0.3;

  // Training strategies.
  bool supervised_encoder_attention = true;
  bool supervised_decoder_attention = true;
  bool column_prediction = true;
  bool exact_match_features = true;
  std::string attention_loss_variant = "mse";  // mse | mul | xent
  std::string oracle_mode = "none";            // none | encoder | decoder | both
  std::string alignment_source = "manual";     // manual | heuristic
  double lambda_att = 0.2;
  double lambda_cp = 0.2;

  // Optimisation.
  int batch_size = 8;
  int max_epochs = 50;
  int patience = 5;
  double learning_rate = 0.001;
  double clip_norm = 5.0;
  int min_word_count = 5;
  int max_decode_length = 60;
  std::uint64_t seed = 1;

  // Data selection.
  int folds = 5;
  int dev_fold = 0;
  double train_fraction = 1.0;
  double alignment_fraction = 1.0;

  /// Keys in declaration order; `set` accepts exactly these.
  static const std::vector<std::string>& keys();

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& j);
  static Config load(const std::filesystem::path& path);

  /// Parses `value` according to the key's type. Throws BadConfig naming the key.
  void set(std::string_view key, std::string_view value);

  /// Named starting points: "align", "seq2seq+" (exact-match features only)
  /// and "seq2seq" (no strategies at all).
  static Config preset(std::string_view name);

  /// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
  std::string hash() const;

  void validate() const;
};

}  // namespace alignsql

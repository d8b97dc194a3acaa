#include "alignsql/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <variant>

#include "alignsql/error.hpp"

namespace alignsql {
namespace {

using Field = std::variant<int Config::*, double Config::*, bool Config::*, std::string Config::*,
                           std::uint64_t Config::*>;

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"version", &Config::version},
      {"word_dim", &Config::word_dim},
      {"char_dim", &Config::char_dim},
      {"char_hidden", &Config::char_hidden},
      {"pos_dim", &Config::pos_dim},
      {"ner_dim", &Config::ner_dim},
      {"exact_match_dim", &Config::exact_match_dim},
      {"dtype_dim", &Config::dtype_dim},
      {"hidden", &Config::hidden},
      {"encoder_layers", &Config::encoder_layers},
      {"decoder_embedding", &Config::decoder_embedding},
      {"decoder_hidden", &Config::decoder_hidden},
      {"decoder_layers", &Config::decoder_layers},
      {"mlp_hidden", &Config::mlp_hidden},
      {"dropout", &Config::dropout},
      {"supervised_encoder_attention", &Config::supervised_encoder_attention},
      {"supervised_decoder_attention", &Config::supervised_decoder_attention},
      {"column_prediction", &Config::column_prediction},
      {"exact_match_features", &Config::exact_match_features},
      {"attention_loss_variant", &Config::attention_loss_variant},
      {"oracle_mode", &Config::oracle_mode},
      {"alignment_source", &Config::alignment_source},
      {"lambda_att", &Config::lambda_att},
      {"lambda_cp", &Config::lambda_cp},
      {"batch_size", &Config::batch_size},
      {"max_epochs", &Config::max_epochs},
      {"patience", &Config::patience},
      {"learning_rate", &Config::learning_rate},
      {"clip_norm", &Config::clip_norm},
      {"min_word_count", &Config::min_word_count},
      {"max_decode_length", &Config::max_decode_length},
      {"seed", &Config::seed},
      {"folds", &Config::folds},
      {"dev_fold", &Config::dev_fold},
      {"train_fraction", &Config::train_fraction},
      {"alignment_fraction", &Config::alignment_fraction},
  };
  return f;
}

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw Error(ErrorCode::BadConfig, "unknown config key '" + std::string(key) + "'");
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::BadConfig,
              "config key '" + std::string(key) + "' cannot take value '" + std::string(value) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, f] : fields())
    std::visit([&](auto member) { j[name] = this->*member; }, f);
  return j;
}

Config Config::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "config must be a JSON object");
  Config c;
  for (const auto& [key, value] : j.items()) {
    const Field& f = field(key);
    std::visit(
        [&](auto member) {
          using T = std::decay_t<decltype(c.*member)>;
          try {
            if constexpr (std::is_same_v<T, bool>) {
              if (!value.is_boolean()) bad_value(key, value.dump());
            } else if constexpr (std::is_same_v<T, std::string>) {
              if (!value.is_string()) bad_value(key, value.dump());
            } else if constexpr (std::is_integral_v<T>) {
              if (!value.is_number_integer()) bad_value(key, value.dump());
            } else {
              if (!value.is_number()) bad_value(key, value.dump());
            }
            c.*member = value.get<T>();
          } catch (const nlohmann::json::exception&) {
            bad_value(key, value.dump());
          }
        },
        f);
  }
  c.validate();
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
}

void Config::set(std::string_view key, std::string_view value) {
  const Field& f = field(key);
  std::visit(
      [&](auto member) {
        using T = std::decay_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") this->*member = true;
          else if (value == "false" || value == "0") this->*member = false;
          else bad_value(key, value);
        } else if constexpr (std::is_same_v<T, std::string>) {
          this->*member = std::string(value);
        } else {
          this->*member = parse_number<T>(key, value);
        }
      },
      f);
  validate();
}

Config Config::preset(std::string_view name) {
  Config c;
  if (name == "align") return c;
  c.supervised_encoder_attention = false;
  c.supervised_decoder_attention = false;
  c.column_prediction = false;
  if (name == "seq2seq+") return c;
  c.exact_match_features = false;
  if (name == "seq2seq") return c;
  throw Error(ErrorCode::BadConfig, "unknown preset '" + std::string(name) + "'");
}

std::string Config::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Config::validate() const {
  auto check = [](bool ok, const char* key, const std::string& why) {
    if (!ok) throw Error(ErrorCode::BadConfig, std::string("config key '") + key + "': " + why);
  };
  check(version == 1, "version", "only version 1 is understood");
  for (auto [v, k] : {std::pair{word_dim, "word_dim"}, {char_dim, "char_dim"}, {char_hidden, "char_hidden"},
                      {pos_dim, "pos_dim"}, {ner_dim, "ner_dim"}, {exact_match_dim, "exact_match_dim"},
                      {dtype_dim, "dtype_dim"}, {hidden, "hidden"}, {encoder_layers, "encoder_layers"},
                      {decoder_embedding, "decoder_embedding"}, {decoder_hidden, "decoder_hidden"},
                      {decoder_layers, "decoder_layers"}, {mlp_hidden, "mlp_hidden"},
                      {batch_size, "batch_size"}, {folds, "folds"}, {max_decode_length, "max_decode_length"}})
    check(v > 0, k, "must be positive");
  check(max_epochs >= 0, "max_epochs", "must be non-negative");
  check(patience >= 0, "patience", "must be non-negative");
  check(min_word_count >= 1, "min_word_count", "must be at least 1");
  check(dropout >= 0.0 && dropout < 1.0, "dropout", "must lie in [0, 1)");
  check(attention_loss_variant == "mse" || attention_loss_variant == "mul" || attention_loss_variant == "xent",
        "attention_loss_variant", "expected mse, mul or xent");
  check(oracle_mode == "none" || oracle_mode == "encoder" || oracle_mode == "decoder" || oracle_mode == "both",
        "oracle_mode", "expected none, encoder, decoder or both");
  check(alignment_source == "manual" || alignment_source == "heuristic", "alignment_source",
        "expected manual or heuristic");
  check(dev_fold >= 0 && dev_fold < folds, "dev_fold", "must index one of the folds");
  check(learning_rate > 0.0, "learning_rate", "must be positive");
  check(clip_norm > 0.0, "clip_norm", "must be positive");
}

}  // namespace alignsql

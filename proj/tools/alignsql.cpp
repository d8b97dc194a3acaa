#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "alignsql/config.hpp"
#include "alignsql/corpus.hpp"
#include "alignsql/executor.hpp"
#include "alignsql/model.hpp"
#include "alignsql/synth.hpp"
#include "alignsql/train_eval.hpp"

namespace fs = std::filesystem;
using namespace alignsql;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

struct ConfigOptions {
  std::string file;
  std::string preset;
  std::vector<std::string> sets;
  std::string encoder_attention, decoder_attention, column_prediction, exact_match;
  std::string loss_variant, oracle_mode, alignment_source;
  std::string seed;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "JSON config file (flat keys)");
    app->add_option("--preset", preset, "Starting point: align, seq2seq+ or seq2seq");
    app->add_option("--set", sets, "Override a config key, key=value (repeatable)");
    app->add_option("--supervised-encoder-attention", encoder_attention, "true|false");
    app->add_option("--supervised-decoder-attention", decoder_attention, "true|false");
    app->add_option("--column-prediction", column_prediction, "true|false");
    app->add_option("--exact-match-features", exact_match, "true|false");
    app->add_option("--attention-loss", loss_variant, "mse|mul|xent");
    app->add_option("--oracle-mode", oracle_mode, "none|encoder|decoder|both");
    app->add_option("--alignment-source", alignment_source, "manual|heuristic");
    app->add_option("--seed", seed, "Random seed");
  }

  Config resolve() const {
    Config c = preset.empty() ? Config{} : Config::preset(preset);
    if (!file.empty()) {
      // Keys in the file override the preset; absent keys keep it.
      json base = c.to_json();
      json overrides = read_json(file);
      if (!overrides.is_object()) throw Error(ErrorCode::BadConfig, file + ": config must be a JSON object");
      for (const auto& [k, v] : overrides.items()) base[k] = v;
      c = Config::from_json(base);
    }
    const std::pair<const char*, const std::string*> named[] = {
        {"supervised_encoder_attention", &encoder_attention},
        {"supervised_decoder_attention", &decoder_attention},
        {"column_prediction", &column_prediction},
        {"exact_match_features", &exact_match},
        {"attention_loss_variant", &loss_variant},
        {"oracle_mode", &oracle_mode},
        {"alignment_source", &alignment_source},
        {"seed", &seed},
    };
    for (const auto& [key, value] : named)
      if (!value->empty()) c.set(key, *value);
    for (const auto& s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, "--set expects key=value, got '" + s + "'");
      c.set(s.substr(0, eq), s.substr(eq + 1));
    }
    return c;
  }
};

RawTable read_table(const fs::path& path) {
  if (path.extension() == ".tsv") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return raw_table_from_tsv(ss.str());
  }
  return raw_table_from_json(read_json(path));
}

Corpus read_corpus(const std::string& dir) {
  if (dir.empty()) throw Error(ErrorCode::MissingInput, "--data is required");
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingInput, "data directory " + dir + " does not exist");
  return load_corpus(dir);
}

Model read_checkpoint(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::MissingInput, "--checkpoint is required");
  return Model::from_checkpoint(read_json(path));
}

std::vector<std::size_t> select_split(const Corpus& corpus, const Config& config, const std::string& which) {
  if (which == "all") {
    std::vector<std::size_t> all(corpus.examples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  Split s = split_by_tables(corpus, config);
  if (which == "dev") return s.dev;
  if (which == "train") return s.train;
  throw Error(ErrorCode::BadConfig, "--split must be train, dev or all");
}

json with_config(json report, const std::string& command, const Config& config) {
  report["command"] = command;
  report["config"] = config.to_json();
  report["config_hash"] = config.hash();
  return report;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::MissingInput, "cannot write " + path);
  out << j.dump(2) << '\n';
}

int fail(ErrorCode code, const std::string& message) {
  json err = {{"error", {{"kind", std::string(error_code_name(code))}, {"message", message}}}};
  std::cout << err.dump() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alignment-supervised text-to-SQL: data, training, decoding and evaluation"};
  app.require_subcommand(1);

  std::string data, out, checkpoint, split = "dev", report_path;

  auto* build_db = app.add_subcommand("build-db", "Canonicalize a raw table (JSON or TSV) into its database form");
  std::string table_path;
  build_db->add_option("--table", table_path, "Raw table file")->required();
  build_db->add_option("--out", out, "Output file (default stdout)");

  auto* preprocess = app.add_subcommand("preprocess", "Validate a corpus, attach literal spans, drop unreconstructable examples");
  preprocess->add_option("--data", data, "Corpus directory (tables.json, examples.json)")->required();
  preprocess->add_option("--out", out, "Output corpus directory")->required();
  preprocess->add_option("--report", report_path, "Filter report file (default stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train on the training folds with early stopping on the dev fold");
  ConfigOptions train_cfg;
  train_cfg.attach(train_cmd);
  train_cmd->add_option("--data", data, "Corpus directory")->required();
  train_cmd->add_option("--checkpoint", checkpoint, "Checkpoint to write")->required();
  train_cmd->add_option("--report", report_path, "Training report file (default stdout)");

  auto* decode_cmd = app.add_subcommand("decode", "Greedy decoding of a split");
  decode_cmd->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  decode_cmd->add_option("--data", data, "Corpus directory")->required();
  decode_cmd->add_option("--split", split, "train, dev or all");
  decode_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "ACC_LF, ACC_EXE, ACC_TEMP and ACC_COL on a split");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  eval_cmd->add_option("--data", data, "Corpus directory")->required();
  eval_cmd->add_option("--split", split, "train, dev or all");
  eval_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* oracle_cmd = app.add_subcommand("oracle-eval", "Train and evaluate with gold attention substituted");
  ConfigOptions oracle_cfg;
  std::string mode = "both";
  oracle_cfg.attach(oracle_cmd);
  oracle_cmd->add_option("--mode", mode, "none|encoder|decoder|both");
  oracle_cmd->add_option("--data", data, "Corpus directory")->required();
  oracle_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* diagnose_cmd = app.add_subcommand("diagnose", "Attention recall and entropy per module");
  diagnose_cmd->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  diagnose_cmd->add_option("--data", data, "Corpus directory")->required();
  diagnose_cmd->add_option("--split", split, "train, dev or all");
  diagnose_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* curves_cmd = app.add_subcommand("curves", "Accuracy against training-data and alignment fractions");
  ConfigOptions curves_cfg;
  std::vector<double> data_fractions = kDataFractions, alignment_fractions = kAlignmentFractions;
  curves_cfg.attach(curves_cmd);
  curves_cmd->add_option("--data", data, "Corpus directory")->required();
  curves_cmd->add_option("--data-fractions", data_fractions, "Fractions of training examples");
  curves_cmd->add_option("--alignment-fractions", alignment_fractions, "Fractions of examples keeping alignments");
  curves_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* template_cmd = app.add_subcommand("template-gen", "Hold out one template (or each frequent one) and evaluate on it");
  ConfigOptions template_cfg;
  std::string pattern;
  template_cfg.attach(template_cmd);
  template_cmd->add_option("--data", data, "Corpus directory")->required();
  template_cmd->add_option("--template", pattern, "Reporting pattern; omit for the macro-averaged sweep");
  template_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* exec_cmd = app.add_subcommand("exec", "Execute a query against a raw table");
  std::string query_text;
  exec_cmd->add_option("--table", table_path, "Raw table file")->required();
  exec_cmd->add_option("--query,--sql", query_text, "Query text or a file holding it")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic corpus");
  SynthOptions synth_opt;
  synth_cmd->add_option("--seed", synth_opt.seed, "Generator seed");
  synth_cmd->add_option("--size", synth_opt.size, "Number of examples");
  synth_cmd->add_option("--per-table", synth_opt.examples_per_table, "Examples per table");
  synth_cmd->add_option("--vague-noun-rate", synth_opt.vague_noun_rate, "Share of numeric mentions using a shared noun");
  synth_cmd->add_option("--out", out, "Output corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*build_db) {
      write_json(table_to_json(build_database(read_table(table_path))), out);
    } else if (*preprocess) {
      Corpus c = read_corpus(data);
      FilterReport report = derive_literal_spans(c.examples);
      save_corpus(c, out);
      write_json(report.to_json(), report_path);
    } else if (*train_cmd) {
      Config config = train_cfg.resolve();
      Corpus c = read_corpus(data);
      Split s = split_by_tables(c, config);
      TrainResult r = train(config, c, s.train, s.dev);
      write_json(r.model.checkpoint(), checkpoint);
      json report = r.log_json();
      report["train_size"] = s.train.size();
      report["dev_size"] = s.dev.size();
      report["dev"] = evaluate(r.model, c, s.dev).to_json();
      write_json(with_config(report, "train", config), report_path);
    } else if (*decode_cmd) {
      Model m = read_checkpoint(checkpoint);
      Corpus c = read_corpus(data);
      std::vector<Prediction> preds;
      evaluate(m, c, select_split(c, m.config(), split), &preds);
      json arr = json::array();
      for (const auto& p : preds) arr.push_back(p.to_json());
      write_json(with_config({{"split", split}, {"predictions", arr}}, "decode", m.config()), out);
    } else if (*eval_cmd) {
      Model m = read_checkpoint(checkpoint);
      Corpus c = read_corpus(data);
      Metrics metrics = evaluate(m, c, select_split(c, m.config(), split));
      write_json(with_config({{"split", split}, {"metrics", metrics.to_json()}}, "eval", m.config()), out);
    } else if (*oracle_cmd) {
      Config config = oracle_cfg.resolve();
      config.set("oracle_mode", mode);
      Corpus c = read_corpus(data);
      Split s = split_by_tables(c, config);
      TrainResult r = train(config, c, s.train, s.dev);
      json report = {{"mode", mode}, {"metrics", evaluate(r.model, c, s.dev).to_json()}, {"training", r.log_json()}};
      write_json(with_config(report, "oracle-eval", config), out);
    } else if (*diagnose_cmd) {
      Model m = read_checkpoint(checkpoint);
      Corpus c = read_corpus(data);
      Diagnostics d = attention_diagnostics(m, c, select_split(c, m.config(), split));
      write_json(with_config({{"split", split}, {"diagnostics", d.to_json()}}, "diagnose", m.config()), out);
    } else if (*curves_cmd) {
      Config config = curves_cfg.resolve();
      Corpus c = read_corpus(data);
      write_json(with_config(learning_curves(config, c, data_fractions, alignment_fractions).to_json(), "curves", config),
                 out);
    } else if (*template_cmd) {
      Config config = template_cfg.resolve();
      Corpus c = read_corpus(data);
      json report = pattern.empty() ? template_generalization_sweep(config, c).to_json()
                                    : template_generalization(config, c, pattern).to_json();
      write_json(with_config(report, "template-gen", config), out);
    } else if (*exec_cmd) {
      Table t = build_database(read_table(table_path));
      if (fs::is_regular_file(query_text)) {
        std::ifstream in(query_text);
        query_text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
      }
      std::cout << json{{"answer", answer_to_json(execute(sql::parse_sql(query_text), t))}}.dump() << '\n';
    } else if (*synth_cmd) {
      Corpus c = synthesize(synth_opt);
      save_corpus(c, out);
      std::cout << json{{"tables", c.tables.size()}, {"examples", c.examples.size()}, {"out", out}}.dump() << '\n';
    }
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCode::MissingInput, e.what());
  }
  return 0;
}

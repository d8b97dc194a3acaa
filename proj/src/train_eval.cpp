#include "alignsql/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "alignsql/text.hpp"

namespace alignsql {

namespace {

template <class F>
void for_each_select(sql::Select& s, const F& f);

template <class F>
void visit_expr(sql::Expr& e, const F& f) {
  if (auto* a = std::get_if<sql::Arithmetic>(&e.node)) {
    visit_expr(*a->lhs, f);
    visit_expr(*a->rhs, f);
  } else if (auto* s = std::get_if<sql::Subquery>(&e.node)) {
    for_each_select(*s->query, f);
  }
}

template <class F>
void for_each_select(sql::Select& s, const F& f) {
  f(s);
  for (auto& p : s.projections) visit_expr(p, f);
  for (auto& pred : s.where) {
    if (auto* c = std::get_if<sql::Comparison>(&pred)) {
      visit_expr(c->lhs, f);
      visit_expr(c->rhs, f);
    } else {
      visit_expr(std::get<sql::InList>(pred).lhs, f);
    }
  }
  for (auto& o : s.order_by) visit_expr(o.expr, f);
}

const sql::ColumnRef* as_column(const sql::Expr& e) { return std::get_if<sql::ColumnRef>(&e.node); }
sql::Literal* as_str(sql::Expr& e) {
  auto* l = std::get_if<sql::Literal>(&e.node);
  return l && l->kind == sql::LiteralKind::Str ? l : nullptr;
}

std::vector<std::string> column_cells(const Table& t, const std::string& column) {
  std::vector<std::string> out;
  auto j = t.column_index(column);
  if (!j) return out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    const Value& v = t.cell(r, *j);
    if (!v.null && seen.insert(v.raw).second) out.push_back(v.raw);
  }
  return out;
}

void repair(sql::Literal& lit, const Table& t, const std::string& column) {
  auto cells = column_cells(t, column);
  if (auto best = text::best_fuzzy_match(lit.text, cells)) lit.text = cells[*best];
}

std::optional<std::string> numeric_text(const std::string& s) {
  std::string stripped;
  for (char c : s)
    if (c != ',') stripped.push_back(c);
  if (stripped.empty() || !text::parse_plain_number(stripped)) return std::nullopt;
  return stripped;
}

std::set<std::string> column_set(const sql::Query& q) {
  auto cols = sql::referenced_columns(q);
  return {cols.begin(), cols.end()};
}

bool better(const Metrics& a, const Metrics& b) {
  if (a.acc_exe != b.acc_exe) return a.acc_exe > b.acc_exe;
  return a.acc_lf > b.acc_lf;
}

void check_fraction(double f, bool allow_zero) {
  if (!(f <= 1.0) || (allow_zero ? f < 0.0 : f <= 0.0))
    throw Error(ErrorCode::FractionOutOfRange, "fraction " + std::to_string(f) + " is out of range");
}

constexpr std::uint64_t kDataSalt = 0x5ca1ab1eULL;
constexpr std::uint64_t kAlignSalt = 0xa119d0c5ULL;
constexpr std::uint64_t kShuffleSalt = 0x5b0ff1e5ULL;
constexpr std::uint64_t kDropoutSalt = 0xd20b0a7ULL;

}  // namespace

// ---------------------------------------------------------------------------
// Decoding

void repair_literals(sql::Query& q, const Table& t) {
  for_each_select(q, [&](sql::Select& s) {
    for (auto& pred : s.where) {
      if (auto* c = std::get_if<sql::Comparison>(&pred)) {
        if (c->op != sql::CompOp::Eq && c->op != sql::CompOp::Ne) continue;
        const auto* lc = as_column(c->lhs);
        const auto* rc = as_column(c->rhs);
        if (lc)
          if (auto* lit = as_str(c->rhs)) repair(*lit, t, lc->name);
        if (rc)
          if (auto* lit = as_str(c->lhs)) repair(*lit, t, rc->name);
      } else {
        auto& in = std::get<sql::InList>(pred);
        if (const auto* lc = as_column(in.lhs))
          for (auto& lit : in.values)
            if (lit.kind == sql::LiteralKind::Str) repair(lit, t, lc->name);
      }
    }
  });
}

Decoded greedy_decode(Model& model, const ModelInput& in, const Table& t, int max_len) {
  Decoded out;
  auto tokens = model.render_steps(in, model.greedy_steps(in, max_len));
  for (auto& tok : tokens) {
    if (tok.kind != sql::TokenKind::Str) continue;
    if (auto num = numeric_text(tok.text)) {
      tok.kind = sql::TokenKind::Num;
      tok.text = *num;
    }
  }
  try {
    sql::Query q = sql::parse(tokens);
    repair_literals(q, t);
    out.tokens = sql::serialize(q);
    out.query = std::move(q);
  } catch (const Error& e) {
    out.tokens.clear();
    out.error = std::string(error_code_name(ErrorCode::DecodeUnparseable)) + ": " + e.what();
  }
  return out;
}

Decoded greedy_decode(Model& model, const AlignedExample& ex, const Table& t, int max_len) {
  return greedy_decode(model, model.prepare(ex, t), t, max_len);
}

// ---------------------------------------------------------------------------
// Metrics

nlohmann::json Metrics::to_json() const {
  nlohmann::json j = {{"count", count},
                      {"acc_lf", acc_lf},
                      {"acc_exe", acc_exe},
                      {"acc_temp", acc_temp},
                      {"acc_col", nullptr},
                      {"acc_col_defined", acc_col.has_value()},
                      {"template_correct", template_correct},
                      {"decode_failures", decode_failures}};
  if (acc_col) j["acc_col"] = *acc_col;
  return j;
}

nlohmann::json Prediction::to_json() const {
  nlohmann::json j = {{"id", example_id}, {"sql", sql::render(tokens)}, {"lf", lf},
                      {"exe", exe},       {"temp", temp},               {"col", col}};
  if (error) j["error"] = *error;
  return j;
}

Prediction score_prediction(const AlignedExample& ex, const Table& t, const Decoded& d) {
  Prediction p;
  p.example_id = ex.id;
  p.tokens = d.tokens;
  p.error = d.error;
  if (!d.query) return p;
  p.lf = d.tokens.size() == ex.gold_tokens.size() &&
         std::equal(d.tokens.begin(), d.tokens.end(), ex.gold_tokens.begin(),
                    [](const sql::SqlToken& a, const sql::SqlToken& b) { return a.same_surface(b); });
  try {
    p.exe = answers_match(execute(*d.query, t), ex.answer);
  } catch (const Error&) {
    p.exe = false;
  }
  p.temp = sql::extract_template(*d.query) == sql::extract_template(ex.gold_query);
  p.col = p.temp && column_set(*d.query) == column_set(ex.gold_query);
  return p;
}

Metrics aggregate(const std::vector<Prediction>& predictions) {
  Metrics m;
  m.count = predictions.size();
  std::size_t lf = 0, exe = 0, col = 0;
  for (const auto& p : predictions) {
    lf += p.lf;
    exe += p.exe;
    m.template_correct += p.temp;
    col += p.col;
    m.decode_failures += p.error.has_value();
  }
  if (m.count == 0) return m;
  const double n = static_cast<double>(m.count);
  m.acc_lf = static_cast<double>(lf) / n;
  m.acc_exe = static_cast<double>(exe) / n;
  m.acc_temp = static_cast<double>(m.template_correct) / n;
  if (m.template_correct > 0) m.acc_col = static_cast<double>(col) / static_cast<double>(m.template_correct);
  return m;
}

Metrics evaluate(Model& model, const Corpus& corpus, const std::vector<std::size_t>& set,
                 std::vector<Prediction>* predictions) {
  std::vector<Prediction> preds;
  for (std::size_t idx : set) {
    const auto& ex = corpus.examples[idx];
    const Table& t = corpus.table_of(ex);
    preds.push_back(score_prediction(ex, t, greedy_decode(model, ex, t, model.config().max_decode_length)));
  }
  Metrics m = aggregate(preds);
  if (predictions) *predictions = std::move(preds);
  return m;
}

// ---------------------------------------------------------------------------
// Diagnostics

double entropy(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i)
    if (row(i) > 0.0) h -= row(i) * std::log(row(i));
  return h;
}

nlohmann::json ModuleDiagnostics::to_json() const {
  return {{"recall", recall}, {"entropy", entropy}, {"links", links}, {"rows", rows}};
}

nlohmann::json Diagnostics::to_json() const {
  return {{"q2c", q2c.to_json()}, {"c2q", c2q.to_json()}, {"d2q", d2q.to_json()},
          {"recall_definition", "argmax of the attention row hits a gold link"}};
}

namespace {

struct Tally {
  std::size_t hits = 0, links = 0, rows = 0;
  double entropy_sum = 0.0;

  void add(const nn::Mat& att, const TargetRows& targets) {
    for (Eigen::Index i = 0; i < att.rows(); ++i) {
      Eigen::RowVectorXd row = att.row(i);
      entropy_sum += entropy(row);
      ++rows;
      const auto r = static_cast<std::size_t>(i);
      if (r >= targets.size() || !targets[r]) continue;
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < row.size(); ++j)
        if (row(j) > row(best)) best = j;
      for (std::size_t j = 0; j < targets[r]->size(); ++j) {
        if ((*targets[r])[j] <= 0.0) continue;
        ++links;
        hits += static_cast<Eigen::Index>(j) == best;
      }
    }
  }

  ModuleDiagnostics result() const {
    ModuleDiagnostics d;
    d.links = links;
    d.rows = rows;
    if (links) d.recall = static_cast<double>(hits) / static_cast<double>(links);
    if (rows) d.entropy = entropy_sum / static_cast<double>(rows);
    return d;
  }
};

}  // namespace

Diagnostics attention_diagnostics(Model& model, const Corpus& corpus, const std::vector<std::size_t>& set) {
  Tally q2c, c2q, d2q;
  for (std::size_t idx : set) {
    const auto& ex = corpus.examples[idx];
    const Table& t = corpus.table_of(ex);
    ModelInput in = model.prepare(ex, t);
    if (in.gold_error) continue;
    AlignmentTargets gold = build_alignment_targets(ex, t);
    AttentionMaps maps = model.attention(in);
    q2c.add(maps.q2c, gold.q2c);
    c2q.add(maps.c2q, gold.c2q);
    d2q.add(maps.d2q, gold.d2q);
  }
  return Diagnostics{q2c.result(), c2q.result(), d2q.result()};
}

// ---------------------------------------------------------------------------
// Training

Split split_by_tables(const Corpus& corpus, const Config& config) {
  std::vector<std::string> ids;
  for (const auto& [id, table] : corpus.tables) ids.push_back(id);
  auto folds = make_splits(ids, static_cast<std::size_t>(config.folds), config.seed);
  std::set<std::string> dev_tables(folds[static_cast<std::size_t>(config.dev_fold)].begin(),
                                   folds[static_cast<std::size_t>(config.dev_fold)].end());
  Split s;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i)
    (dev_tables.count(corpus.examples[i].table_id) ? s.dev : s.train).push_back(i);
  return s;
}

std::vector<std::size_t> subsample(const std::vector<std::size_t>& items, double fraction, std::uint64_t seed) {
  check_fraction(fraction, true);
  auto perm = seeded_permutation(items.size(), seed);
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(items.size()) - 1e-9));
  if (fraction > 0.0 && k == 0 && !items.empty()) k = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(items[perm[i]]);
  return out;
}

nlohmann::json EpochLog::to_json() const {
  return {{"epoch", epoch},         {"train_loss", train_loss}, {"train_seq2seq", train_seq2seq},
          {"train_att", train_att}, {"train_cp", train_cp},     {"grad_norm", grad_norm},
          {"clamped", clamped},     {"dev", dev.to_json()},     {"improved", improved}};
}

nlohmann::json TrainResult::log_json() const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs) epochs_json.push_back(e.to_json());
  return {{"epochs", epochs_json},
          {"best_epoch", best_epoch},
          {"train_examples", train_examples},
          {"aligned_examples", aligned_examples},
          {"skipped", skipped}};
}

TrainResult train(const Config& config, const Corpus& corpus, const std::vector<std::size_t>& train_set,
                  const std::vector<std::size_t>& dev, const EpochCallback& on_epoch) {
  config.validate();
  check_fraction(config.train_fraction, false);
  check_fraction(config.alignment_fraction, true);
  auto selected = subsample(train_set, config.train_fraction, config.seed ^ kDataSalt);
  if (selected.empty()) throw Error(ErrorCode::EmptyTrainSet, "no training examples");
  std::sort(selected.begin(), selected.end());
  auto aligned_list = subsample(selected, config.alignment_fraction, config.seed ^ kAlignSalt);
  std::set<std::size_t> aligned(aligned_list.begin(), aligned_list.end());

  TrainResult result{Model(config, Vocabularies::build(corpus, selected, static_cast<std::size_t>(config.min_word_count))),
                     {}, 0, 0, aligned.size(), 0};
  Model& model = result.model;

  std::vector<ModelInput> inputs;
  for (std::size_t idx : selected) {
    const auto& ex = corpus.examples[idx];
    ModelInput in = model.prepare(ex, corpus.table_of(ex));
    if (in.gold_error) {
      ++result.skipped;
      continue;
    }
    if (!aligned.count(idx)) {
      for (auto* rows : {&in.targets.q2c, &in.targets.c2q, &in.targets.d2q, &in.cp_targets})
        std::fill(rows->begin(), rows->end(), std::nullopt);
    }
    inputs.push_back(std::move(in));
  }
  if (inputs.empty()) throw Error(ErrorCode::EmptyTrainSet, "every training example was skipped");
  result.train_examples = inputs.size();

  Rng dropout_rng(config.seed ^ kDropoutSalt);
  nn::Adam adam;
  adam.lr = config.learning_rate;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  std::vector<nn::Mat> best_values;
  std::optional<Metrics> best;
  int bad_epochs = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    auto order = seeded_permutation(inputs.size(), config.seed ^ kShuffleSalt ^ static_cast<std::uint64_t>(epoch));
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      model.params().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        nn::Graph g(true, &dropout_rng);
        LossBreakdown lb = model.loss(g, inputs[order[k]]);
        g.backward(lb.total_var, 1.0 / static_cast<double>(end - start));
        log.train_loss += lb.total;
        log.train_seq2seq += lb.seq2seq;
        log.train_att += lb.att;
        log.train_cp += lb.cp;
        log.clamped += lb.clamped;
      }
      log.grad_norm += nn::clip_gradients(model.params(), config.clip_norm);
      adam.step(model.params());
      ++batches;
    }
    const double n = static_cast<double>(inputs.size());
    log.train_loss /= n;
    log.train_seq2seq /= n;
    log.train_att /= n;
    log.train_cp /= n;
    log.grad_norm /= static_cast<double>(batches);

    log.dev = evaluate(model, corpus, dev);
    log.improved = dev.empty() || !best || better(log.dev, *best);
    if (log.improved) {
      best = log.dev;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : model.params().all()) best_values.push_back(p.value);
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (bad_epochs > config.patience) break;
  }
  if (!best_values.empty()) {
    std::size_t i = 0;
    for (auto& p : model.params().all()) p.value = best_values[i++];
  }
  return result;
}

// ---------------------------------------------------------------------------
// Experiments

nlohmann::json CurveReport::to_json() const {
  auto points = [](const std::vector<CurvePoint>& pts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : pts)
      a.push_back({{"fraction", p.fraction}, {"acc_exe", p.metrics.acc_exe}, {"metrics", p.metrics.to_json()}});
    return a;
  };
  return {{"data_fraction", points(data)}, {"alignment_fraction", points(alignment)}};
}

CurveReport learning_curves(const Config& config, const Corpus& corpus, const std::vector<double>& data_fractions,
                            const std::vector<double>& alignment_fractions) {
  for (double f : data_fractions) check_fraction(f, false);
  for (double f : alignment_fractions) check_fraction(f, true);
  const Split split = split_by_tables(corpus, config);
  CurveReport report;
  for (double f : data_fractions) {
    Config c = config;
    c.train_fraction = f;
    c.alignment_fraction = 1.0;
    TrainResult r = train(c, corpus, split.train, split.dev);
    report.data.push_back({f, evaluate(r.model, corpus, split.dev)});
  }
  for (double f : alignment_fractions) {
    Config c = config;
    c.train_fraction = 1.0;
    c.alignment_fraction = f;
    TrainResult r = train(c, corpus, split.train, split.dev);
    report.alignment.push_back({f, evaluate(r.model, corpus, split.dev)});
  }
  return report;
}

nlohmann::json TemplateReport::to_json() const {
  return {{"template", pattern}, {"train_count", train_count}, {"eval_count", eval_count},
          {"metrics", metrics.to_json()}};
}

std::vector<std::size_t> template_instances(const Corpus& corpus, std::string_view pattern) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i)
    if (sql::template_matches(sql::extract_template(corpus.examples[i].gold_query), pattern)) out.push_back(i);
  return out;
}

TemplateReport template_generalization(const Config& config, const Corpus& corpus, std::string_view pattern) {
  auto held_out = template_instances(corpus, pattern);
  if (held_out.empty())
    throw Error(ErrorCode::UnknownTemplate, "no example has template '" + std::string(pattern) + "'");
  std::vector<std::size_t> rest;
  std::set<std::size_t> held(held_out.begin(), held_out.end());
  for (std::size_t i = 0; i < corpus.examples.size(); ++i)
    if (!held.count(i)) rest.push_back(i);
  TemplateReport report;
  report.pattern = std::string(pattern);
  report.eval_count = held_out.size();
  report.train_count = rest.size();
  TrainResult r = train(config, corpus, rest, {});
  report.metrics = evaluate(r.model, corpus, held_out);
  return report;
}

nlohmann::json TemplateSweep::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : templates) a.push_back(t.to_json());
  return {{"templates", a}, {"macro_acc_lf", macro_acc_lf}, {"macro_acc_exe", macro_acc_exe}};
}

TemplateSweep template_generalization_sweep(const Config& config, const Corpus& corpus) {
  TemplateSweep sweep;
  for (auto pattern : sql::top_templates()) {
    if (template_instances(corpus, pattern).empty()) continue;
    sweep.templates.push_back(template_generalization(config, corpus, pattern));
    sweep.macro_acc_lf += sweep.templates.back().metrics.acc_lf;
    sweep.macro_acc_exe += sweep.templates.back().metrics.acc_exe;
  }
  if (!sweep.templates.empty()) {
    sweep.macro_acc_lf /= static_cast<double>(sweep.templates.size());
    sweep.macro_acc_exe /= static_cast<double>(sweep.templates.size());
  }
  return sweep;
}

}  // namespace alignsql

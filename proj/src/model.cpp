#include "alignsql/model.hpp"

#include <cmath>
#include <unordered_map>

#include "alignsql/text.hpp"

namespace alignsql {

using nn::Graph;
using nn::Mat;
using nn::Var;

namespace {

const std::string kGo = "<go>";
const std::string kColPlaceholder = "<col>";
const std::string kStrPlaceholder = "<str>";

std::vector<std::string> char_strings(const std::string& word) {
  std::vector<std::string> out;
  for (char c : word) out.emplace_back(1, c);
  return out;
}

template <class V>
int argmax(const V& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

bool is_numeral(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Row targets as a dense matrix plus a row mask.
std::pair<Mat, Mat> target_matrix(const TargetRows& rows, Eigen::Index width) {
  Mat t = Mat::Zero(static_cast<Eigen::Index>(rows.size()), width);
  Mat m = Mat::Zero(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]) continue;
    m(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < rows[i]->size(); ++j)
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*rows[i])[j];
  }
  return {t, m};
}

bool any_row(const TargetRows& rows) {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.has_value(); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabularies

Vocabularies Vocabularies::build(const Corpus& corpus, const std::vector<std::size_t>& train,
                                 std::size_t min_word_count) {
  std::vector<std::vector<std::string>> words, chars, pos, ner;
  for (std::size_t idx : train) {
    const auto& ex = corpus.examples[idx];
    std::vector<std::string> seq;
    for (const auto& q : ex.question) seq.push_back(text::fold(q));
    for (const auto& col : corpus.table_of(ex).columns)
      for (auto& w : header_tokens(col)) seq.push_back(std::move(w));
    for (const auto& w : seq) chars.push_back(char_strings(w));
    words.push_back(std::move(seq));
    pos.push_back(ex.pos);
    ner.push_back(ex.ner);
  }
  return Vocabularies{Vocab::build(words, min_word_count), Vocab::build(chars, 1), Vocab::build(pos, 1),
                      Vocab::build(ner, 1)};
}

nlohmann::json Vocabularies::to_json() const {
  return {{"words", words.to_json()}, {"chars", chars.to_json()}, {"pos", pos.to_json()}, {"ner", ner.to_json()}};
}

Vocabularies Vocabularies::from_json(const nlohmann::json& j) {
  return Vocabularies{Vocab::from_json(j.at("words")), Vocab::from_json(j.at("chars")),
                      Vocab::from_json(j.at("pos")), Vocab::from_json(j.at("ner"))};
}

nlohmann::json LossBreakdown::to_json() const {
  return {{"seq2seq", seq2seq}, {"att", att},     {"att_q2c", att_q2c}, {"att_c2q", att_c2q},
          {"att_d2q", att_d2q}, {"cp", cp},       {"total", total},     {"clamped", clamped}};
}

// ---------------------------------------------------------------------------
// Attention losses

std::pair<Var, int> attention_loss(Var a, const Mat& target, const Mat& mask, std::string_view variant) {
  Graph& g = *a.graph;
  constexpr double kFloor = 1e-12;
  const Mat row_mask = mask.replicate(1, a.cols());
  if (variant == "mse") {
    Var d = nn::mul(nn::sub(a, g.constant(target)), g.constant(row_mask));
    return {nn::scale(nn::sum(nn::mul(d, d)), 0.5), 0};
  }
  if (variant == "xent") {
    int clamped = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (mask(i, 0) > 0 && target(i, j) > 0 && a.value()(i, j) <= kFloor) ++clamped;
    Var l = nn::log(nn::clamp_min(a, kFloor));
    return {nn::scale(nn::sum(nn::mul(l, g.constant(target.cwiseProduct(row_mask)))), -1.0), clamped};
  }
  if (variant == "mul") {
    Var r = nn::matmul(nn::mul(a, g.constant(target)), g.constant(Mat::Ones(a.cols(), 1)));
    int clamped = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (mask(i, 0) > 0 && r.value()(i, 0) <= kFloor) ++clamped;
    Var l = nn::log(nn::clamp_min(r, kFloor));
    return {nn::scale(nn::sum(nn::mul(l, g.constant(mask))), -1.0), clamped};
  }
  throw Error(ErrorCode::BadConfig, "unknown attention loss variant '" + std::string(variant) + "'");
}

double attention_loss_value(const std::vector<double>& a, const std::vector<double>& target,
                            std::string_view variant) {
  if (a.size() != target.size()) throw Error(ErrorCode::ShapeMismatch, "attention and target differ in length");
  double acc = 0.0;
  if (variant == "mse") {
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - target[i]) * (a[i] - target[i]);
    return 0.5 * acc;
  }
  if (variant == "mul") {
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * target[i];
    return -std::log(std::max(acc, 1e-12));
  }
  if (variant == "xent") {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (target[i] > 0) acc -= target[i] * std::log(std::max(a[i], 1e-12));
    return acc;
  }
  throw Error(ErrorCode::BadConfig, "unknown attention loss variant '" + std::string(variant) + "'");
}

// ---------------------------------------------------------------------------
// Forward pass

struct Forward {
  struct StepOut {
    Var type_logp;   // 3 x 1
    Var key_logp;    // V x 1
    Var col_logp;    // 1 x m
    Var start_logp;  // 1 x n
    Var end_logp;    // 1 x n
    Var attention;   // 1 x n, induced
    Var used;        // 1 x n, after oracle substitution
  };

  Model& m;
  Graph& g;
  const ModelInput& in;
  const Config& cfg;
  std::unordered_map<std::string, Var> cache;
  std::unordered_map<std::string, Var> char_memo;

  Var q, c, a_induced, a_used, b_induced, b_used, qbar, cbar, final_state;
  Var pq, pcol, pstart, pend;
  std::vector<Var> h, cell;
  Var v_prev;

  Forward(Model& model, Graph& graph, const ModelInput& input)
      : m(model), g(graph), in(input), cfg(model.config_) {}

  bool oracle_encoder() const { return cfg.oracle_mode == "encoder" || cfg.oracle_mode == "both"; }
  bool oracle_decoder() const { return cfg.oracle_mode == "decoder" || cfg.oracle_mode == "both"; }

  Var P(const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    Var v = g.param(m.params_.get(name));
    cache.emplace(name, v);
    return v;
  }

  Var zeros(Eigen::Index rows) { return g.constant(Mat::Zero(rows, 1)); }
  Var drop(Var x) { return nn::dropout(x, cfg.dropout); }
  Var embed(const std::string& table, int index) { return nn::embedding(g, m.params_.get(table), index); }

  std::vector<Var> run_lstm(const std::vector<Var>& xs, const std::string& name, int hidden, bool reverse) {
    std::vector<Var> out(xs.size());
    Var hs = zeros(hidden), cs = zeros(hidden);
    Var w = P(name + ".w"), b = P(name + ".bias");
    for (std::size_t k = 0; k < xs.size(); ++k) {
      std::size_t i = reverse ? xs.size() - 1 - k : k;
      std::tie(hs, cs) = nn::lstm_step(xs[i], hs, cs, w, b);
      out[i] = hs;
    }
    return out;
  }

  std::vector<Var> bilstm(std::vector<Var> xs, const std::string& name, int layers, int hidden) {
    for (int l = 0; l < layers; ++l) {
      if (l > 0)
        for (auto& x : xs) x = drop(x);
      const std::string base = name + ".l" + std::to_string(l);
      auto fwd = run_lstm(xs, base + ".fwd", hidden, false);
      auto bwd = run_lstm(xs, base + ".bwd", hidden, true);
      for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = nn::concat({fwd[i], bwd[i]});
    }
    return xs;
  }

  Var char_features(const std::string& word) {
    auto it = char_memo.find(word);
    if (it != char_memo.end()) return it->second;
    Var out;
    if (word.empty()) {
      out = zeros(2 * cfg.char_hidden);
    } else {
      std::vector<Var> xs;
      for (const auto& ch : char_strings(word)) xs.push_back(embed("emb.char", m.vocabs_.chars.index(ch)));
      auto fwd = run_lstm(xs, "char.fwd", cfg.char_hidden, false);
      auto bwd = run_lstm(xs, "char.bwd", cfg.char_hidden, true);
      out = nn::concat({fwd.back(), bwd.front()});
    }
    char_memo.emplace(word, out);
    return out;
  }

  Var flag(const std::string& table, int value) {
    if (!cfg.exact_match_features) return zeros(cfg.exact_match_dim);
    return embed(table, value);
  }

  void encode() {
    const std::size_t n = in.words.size();
    const std::size_t mcols = in.column_names.size();
    if (n == 0 || mcols == 0) throw Error(ErrorCode::EmptyInput, "empty question or column list");
    const int H = cfg.hidden;

    std::vector<Var> toks;
    for (std::size_t i = 0; i < n; ++i) {
      toks.push_back(drop(nn::concat({embed("emb.word", in.words[i]), char_features(in.folded[i]),
                                      embed("emb.pos", in.pos[i]), embed("emb.ner", in.ner[i]),
                                      flag("emb.in_header", in.in_header[i]), flag("emb.in_cell", in.in_cell[i])})));
    }
    q = nn::hcat(bilstm(toks, "enc.q1", cfg.encoder_layers, H));

    std::vector<Var> cols;
    for (std::size_t j = 0; j < mcols; ++j) {
      std::vector<Var> xs;
      for (std::size_t k = 0; k < in.header_words[j].size(); ++k)
        xs.push_back(drop(nn::concat({embed("emb.word", in.header_word_ids[j][k]), char_features(in.header_words[j][k])})));
      auto fwd = run_lstm(xs, "enc.header.fwd", H, false);
      auto bwd = run_lstm(xs, "enc.header.bwd", H, true);
      cols.push_back(nn::concat({fwd.back(), bwd.front(), embed("emb.dtype", in.dtypes[j]),
                                 flag("emb.name_in_question", in.name_in_question[j])}));
    }
    c = nn::hcat(cols);

    a_induced = nn::softmax_rows(nn::bilinear(q, P("att.q2c"), c));
    a_used = substitute(a_induced, in.targets.q2c, oracle_encoder());
    Var x2 = nn::concat({q, nn::matmul(c, nn::transpose(a_used))});
    std::vector<Var> xs2;
    for (std::size_t i = 0; i < n; ++i) xs2.push_back(drop(nn::column(x2, static_cast<Eigen::Index>(i))));
    qbar = nn::hcat(bilstm(xs2, "enc.q2", 1, H));

    b_induced = nn::softmax_rows(nn::bilinear(c, P("att.c2q"), q));
    b_used = substitute(b_induced, in.targets.c2q, oracle_encoder());
    Var y2 = nn::concat({c, nn::matmul(q, nn::transpose(b_used))});
    std::vector<Var> ys2;
    for (std::size_t j = 0; j < mcols; ++j) ys2.push_back(drop(nn::column(y2, static_cast<Eigen::Index>(j))));
    cbar = nn::hcat(bilstm(ys2, "enc.c2", 1, H));

    final_state = nn::concat({nn::slice_rows(nn::column(qbar, static_cast<Eigen::Index>(n - 1)), 0, H),
                              nn::slice_rows(nn::column(qbar, 0), H, H)});
  }

  // Rows with a target are replaced by it exactly: a * 0 + t == t.
  Var substitute(Var a, const TargetRows& rows, bool enabled) {
    if (!enabled || !any_row(rows)) return a;
    auto [t, mask] = target_matrix(rows, a.cols());
    Mat keep = (1.0 - mask.array()).matrix().replicate(1, a.cols());
    return nn::add(nn::mul(a, g.constant(keep)), g.constant(t));
  }

  void init_decoder() {
    h.clear();
    cell.clear();
    for (int l = 0; l < cfg.decoder_layers; ++l) {
      const std::string base = "dec.bridge" + std::to_string(l);
      h.push_back(nn::tanh(nn::affine(P(base + ".w"), final_state, P(base + ".bias"))));
      cell.push_back(zeros(cfg.decoder_hidden));
    }
    v_prev = zeros(2 * cfg.hidden);
    pq = nn::matmul(P("dec.att"), qbar);
    pcol = nn::matmul(P("copy.col"), cbar);
    pstart = nn::matmul(P("copy.str_start"), qbar);
    pend = nn::matmul(P("copy.str_end"), qbar);
  }

  Var mlp(const std::string& name, Var x) {
    Var hidden = nn::tanh(nn::affine(P(name + ".h.w"), x, P(name + ".h.bias")));
    return nn::affine(P(name + ".out.w"), drop(hidden), P(name + ".out.bias"));
  }

  StepOut step(int input_index, std::size_t t) {
    Var x = drop(nn::concat({v_prev, embed("dec.emb", input_index)}));
    for (int l = 0; l < cfg.decoder_layers; ++l) {
      const std::string base = "dec.l" + std::to_string(l);
      std::tie(h[static_cast<std::size_t>(l)], cell[static_cast<std::size_t>(l)]) =
          nn::lstm_step(x, h[static_cast<std::size_t>(l)], cell[static_cast<std::size_t>(l)], P(base + ".w"),
                        P(base + ".bias"));
      x = drop(h[static_cast<std::size_t>(l)]);
    }
    Var top = h.back();
    StepOut s;
    s.attention = nn::softmax(nn::matmul(nn::transpose(top), pq));
    s.used = s.attention;
    if (oracle_decoder() && t < in.targets.d2q.size() && in.targets.d2q[t]) {
      const auto& row = *in.targets.d2q[t];
      s.used = g.constant(Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
    }
    Var v = nn::matmul(qbar, nn::transpose(s.used));
    Var o = drop(nn::concat({top, v}));
    Var ot = nn::transpose(o);
    s.type_logp = nn::log_softmax(mlp("type", o));
    s.key_logp = nn::log_softmax(mlp("key", o));
    s.col_logp = nn::log_softmax(nn::matmul(ot, pcol));
    s.start_logp = nn::log_softmax(nn::matmul(ot, pstart));
    s.end_logp = nn::log_softmax(nn::matmul(ot, pend));
    v_prev = v;
    return s;
  }

  int next_input(OutType type, int index) const {
    switch (type) {
      case OutType::Key: return index;
      case OutType::Col: return m.col_placeholder_;
      case OutType::Str: return m.str_placeholder_;
    }
    return index;
  }
};

// ---------------------------------------------------------------------------
// Model

Model::Model(Config config, Vocabularies vocabs) : config_(std::move(config)), vocabs_(std::move(vocabs)) {
  config_.validate();
  for (auto k : sql::keyword_vocabulary()) key_vocab_.emplace_back(k);
  key_vocab_.push_back("<stop>");
  const int v = static_cast<int>(key_vocab_.size());
  go_index_ = v;
  col_placeholder_ = v + 1;
  str_placeholder_ = v + 2;
  create_parameters();
  Rng rng(config_.seed);
  params_.initialize(rng);
}

void Model::create_parameters() {
  const Config& c = config_;
  const int H = c.hidden, CH = c.char_hidden, D = c.decoder_hidden, M = c.mlp_hidden;
  const int em = c.exact_match_dim;
  const int cdim = 2 * H + c.dtype_dim + em;
  const int token_in = c.word_dim + 2 * CH + c.pos_dim + c.ner_dim + 2 * em;
  const int header_in = c.word_dim + 2 * CH;
  const int odim = D + 2 * H;
  const int V = static_cast<int>(key_vocab_.size());

  auto lstm = [&](const std::string& name, int in, int hidden) {
    params_.create(name + ".w", 4 * hidden, in + hidden);
    params_.create(name + ".bias", 4 * hidden, 1);
  };
  auto bi = [&](const std::string& name, int layers, int in, int hidden) {
    for (int l = 0; l < layers; ++l) {
      const std::string base = name + ".l" + std::to_string(l);
      lstm(base + ".fwd", l == 0 ? in : 2 * hidden, hidden);
      lstm(base + ".bwd", l == 0 ? in : 2 * hidden, hidden);
    }
  };
  auto mlp = [&](const std::string& name, int in, int out) {
    params_.create(name + ".h.w", M, in);
    params_.create(name + ".h.bias", M, 1);
    params_.create(name + ".out.w", out, M);
    params_.create(name + ".out.bias", out, 1);
  };

  params_.create("emb.word", c.word_dim, static_cast<Eigen::Index>(vocabs_.words.size()));
  params_.create("emb.char", c.char_dim, static_cast<Eigen::Index>(vocabs_.chars.size()));
  params_.create("emb.pos", c.pos_dim, static_cast<Eigen::Index>(vocabs_.pos.size()));
  params_.create("emb.ner", c.ner_dim, static_cast<Eigen::Index>(vocabs_.ner.size()));
  params_.create("emb.in_header", em, 2);
  params_.create("emb.in_cell", em, 2);
  params_.create("emb.name_in_question", em, 2);
  params_.create("emb.dtype", c.dtype_dim, static_cast<Eigen::Index>(kDataTypeCount));
  lstm("char.fwd", c.char_dim, CH);
  lstm("char.bwd", c.char_dim, CH);
  bi("enc.q1", c.encoder_layers, token_in, H);
  lstm("enc.header.fwd", header_in, H);
  lstm("enc.header.bwd", header_in, H);
  params_.create("att.q2c", 2 * H, cdim);
  params_.create("att.c2q", cdim, 2 * H);
  bi("enc.q2", 1, 2 * H + cdim, H);
  bi("enc.c2", 1, cdim + 2 * H, H);
  params_.create("cp.w", 2 * H, cdim);
  params_.create("dec.emb", c.decoder_embedding, V + 3);
  for (int l = 0; l < c.decoder_layers; ++l) {
    lstm("dec.l" + std::to_string(l), l == 0 ? 2 * H + c.decoder_embedding : D, D);
    params_.create("dec.bridge" + std::to_string(l) + ".w", D, 2 * H);
    params_.create("dec.bridge" + std::to_string(l) + ".bias", D, 1);
  }
  params_.create("dec.att", D, 2 * H);
  mlp("type", odim, 3);
  mlp("key", odim, V);
  params_.create("copy.col", odim, 2 * H);
  params_.create("copy.str_start", odim, 2 * H);
  params_.create("copy.str_end", odim, 2 * H);
}

ModelInput Model::prepare(const AlignedExample& ex, const Table& t) const {
  ModelInput in;
  in.example_id = ex.id;
  in.question = ex.question;
  for (const auto& tok : ex.question) {
    in.folded.push_back(text::fold(tok));
    in.words.push_back(vocabs_.words.index(in.folded.back()));
  }
  for (std::size_t i = 0; i < ex.question.size(); ++i) {
    in.pos.push_back(ex.pos.empty() ? Vocab::kPad : vocabs_.pos.index(ex.pos[i]));
    in.ner.push_back(ex.ner.empty() ? Vocab::kPad : vocabs_.ner.index(ex.ner[i]));
  }
  auto em = exact_match_features(ex.question, t);
  for (std::size_t i = 0; i < ex.question.size(); ++i) {
    in.in_header.push_back(em.in_header[i] ? 1 : 0);
    in.in_cell.push_back(em.in_cell[i] ? 1 : 0);
  }
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    const Column& col = t.columns[j];
    in.column_names.push_back(col.name);
    in.header_words.push_back(header_tokens(col));
    std::vector<int> ids;
    for (const auto& w : in.header_words.back()) ids.push_back(vocabs_.words.index(w));
    in.header_word_ids.push_back(std::move(ids));
    in.dtypes.push_back(static_cast<int>(col.dtype));
    in.name_in_question.push_back(em.name_in_question[j] ? 1 : 0);
  }

  if (config_.alignment_source == "heuristic") {
    fill_encoder_targets(in.targets, ex.question.size(), t.columns.size(), heuristic_alignments(ex.question, t));
    in.targets.d2q.assign(ex.gold_tokens.size() + 1, std::nullopt);
  } else {
    in.targets = build_alignment_targets(ex, t);
  }
  in.cp_targets = in.targets.q2c;

  const auto mask = sql::literal_mask(ex.gold_tokens);
  for (std::size_t k = 0; k < ex.gold_tokens.size() && !in.gold_error; ++k) {
    const auto& tok = ex.gold_tokens[k];
    if (mask[k]) {
      if (!tok.source_span) {
        in.gold_error = "literal '" + tok.text + "' has no question span";
        break;
      }
      in.gold.push_back(GoldStep{OutType::Str, tok.source_span->begin, tok.source_span->end});
    } else if (tok.kind == sql::TokenKind::Col) {
      auto c = t.column_index(tok.text);
      if (!c) in.gold_error = "column " + tok.text + " not in table";
      else in.gold.push_back(GoldStep{OutType::Col, static_cast<int>(*c), 0});
    } else {
      auto it = std::find(key_vocab_.begin(), key_vocab_.end() - 1, tok.text);
      if (it == key_vocab_.end() - 1) in.gold_error = "token '" + tok.text + "' is not in the KEY vocabulary";
      else in.gold.push_back(GoldStep{OutType::Key, static_cast<int>(it - key_vocab_.begin()), 0});
    }
  }
  if (in.gold_error) in.gold.clear();
  else in.gold.push_back(GoldStep{OutType::Key, stop_index(), 0});
  return in;
}

LossBreakdown Model::loss(Graph& g, const ModelInput& in) {
  if (in.gold_error) throw Error(ErrorCode::GoldTokenOutOfVocab, in.example_id + ": " + *in.gold_error);
  Forward f(*this, g, in);
  f.encode();
  f.init_decoder();

  std::vector<Var> logps;
  std::vector<Var> d2q_rows;
  TargetRows d2q_targets;
  int input = go_index_;
  for (std::size_t t = 0; t < in.gold.size(); ++t) {
    const GoldStep& gs = in.gold[t];
    auto s = f.step(input, t);
    logps.push_back(nn::pick(s.type_logp, static_cast<int>(gs.type), 0));
    switch (gs.type) {
      case OutType::Key: logps.push_back(nn::pick(s.key_logp, gs.index, 0)); break;
      case OutType::Col: logps.push_back(nn::pick(s.col_logp, 0, gs.index)); break;
      case OutType::Str:
        logps.push_back(nn::pick(s.start_logp, 0, gs.index));
        logps.push_back(nn::pick(s.end_logp, 0, gs.end));
        break;
    }
    if (t < in.targets.d2q.size() && in.targets.d2q[t]) {
      d2q_rows.push_back(s.attention);
      d2q_targets.push_back(in.targets.d2q[t]);
    }
    input = f.next_input(gs.type, gs.index);
  }

  LossBreakdown out;
  Var seq = nn::scale(nn::sum(nn::concat(logps)), -1.0);
  out.seq2seq = seq.scalar();
  Var total = seq;

  std::vector<Var> att_terms;
  const auto& variant = config_.attention_loss_variant;
  if (config_.supervised_encoder_attention) {
    if (any_row(in.targets.q2c)) {
      auto [t, mk] = target_matrix(in.targets.q2c, f.a_induced.cols());
      auto [l, clamped] = attention_loss(f.a_induced, t, mk, variant);
      out.att_q2c = l.scalar();
      out.clamped += clamped;
      att_terms.push_back(l);
    }
    if (any_row(in.targets.c2q)) {
      auto [t, mk] = target_matrix(in.targets.c2q, f.b_induced.cols());
      auto [l, clamped] = attention_loss(f.b_induced, t, mk, variant);
      out.att_c2q = l.scalar();
      out.clamped += clamped;
      att_terms.push_back(l);
    }
  }
  if (config_.supervised_decoder_attention && !d2q_rows.empty()) {
    Var e = nn::concat(d2q_rows);
    auto [t, mk] = target_matrix(d2q_targets, e.cols());
    auto [l, clamped] = attention_loss(e, t, mk, variant);
    out.att_d2q = l.scalar();
    out.clamped += clamped;
    att_terms.push_back(l);
  }
  if (!att_terms.empty()) {
    Var att = nn::sum(nn::concat(att_terms));
    out.att = att.scalar();
    total = nn::add(total, nn::scale(att, config_.lambda_att));
  }
  if (config_.column_prediction && any_row(in.cp_targets)) {
    auto [t, mk] = target_matrix(in.cp_targets, f.c.cols());
    Var ls = nn::log_softmax_rows(nn::bilinear(f.q, f.P("cp.w"), f.c));
    Var cp = nn::scale(nn::sum(nn::mul(ls, g.constant(t))), -1.0);
    out.cp = cp.scalar();
    total = nn::add(total, nn::scale(cp, config_.lambda_cp));
  }
  out.total = total.scalar();
  out.total_var = total;
  return out;
}

std::vector<DecodedStep> Model::greedy_steps(const ModelInput& in, int max_len) {
  Graph g(false);
  Forward f(*this, g, in);
  f.encode();
  f.init_decoder();
  std::vector<DecodedStep> out;
  int input = go_index_;
  for (int t = 0; t < max_len; ++t) {
    auto s = f.step(input, static_cast<std::size_t>(t));
    DecodedStep d;
    d.type = static_cast<OutType>(argmax(s.type_logp.value().col(0)));
    switch (d.type) {
      case OutType::Key: d.index = argmax(s.key_logp.value().col(0)); break;
      case OutType::Col: d.index = argmax(s.col_logp.value().row(0)); break;
      case OutType::Str: {
        Eigen::RowVectorXd start = s.start_logp.value().row(0);
        Eigen::RowVectorXd end = s.end_logp.value().row(0);
        d.index = argmax(start);
        d.end = d.index;
        for (int k = d.index + 1; k < static_cast<int>(end.size()); ++k)
          if (end(k) > end(d.end)) d.end = k;
        break;
      }
    }
    if (d.type == OutType::Key && d.index == stop_index()) break;
    out.push_back(d);
    input = f.next_input(d.type, d.index);
  }
  return out;
}

AttentionMaps Model::attention(const ModelInput& in) {
  Graph g(false);
  Forward f(*this, g, in);
  f.encode();
  AttentionMaps maps;
  maps.q2c = f.a_used.value();
  maps.c2q = f.b_used.value();
  maps.d2q = Mat::Zero(static_cast<Eigen::Index>(in.gold.size()), static_cast<Eigen::Index>(in.words.size()));
  f.init_decoder();
  int input = go_index_;
  for (std::size_t t = 0; t < in.gold.size(); ++t) {
    auto s = f.step(input, t);
    maps.d2q.row(static_cast<Eigen::Index>(t)) = s.used.value().row(0);
    input = f.next_input(in.gold[t].type, in.gold[t].index);
  }
  return maps;
}

std::vector<sql::SqlToken> Model::render_steps(const ModelInput& in, const std::vector<DecodedStep>& steps) const {
  std::vector<sql::SqlToken> out;
  for (const auto& d : steps) {
    switch (d.type) {
      case OutType::Key: {
        const std::string& text = key_vocab_[static_cast<std::size_t>(d.index)];
        out.push_back({is_numeral(text) ? sql::TokenKind::Num : sql::TokenKind::Key, text, std::nullopt});
        break;
      }
      case OutType::Col:
        out.push_back({sql::TokenKind::Col, in.column_names[static_cast<std::size_t>(d.index)], std::nullopt});
        break;
      case OutType::Str: {
        std::vector<std::string> span(in.question.begin() + d.index, in.question.begin() + d.end + 1);
        out.push_back({sql::TokenKind::Str, text::join(span, " "), sql::Span{d.index, d.end}});
        break;
      }
    }
  }
  return out;
}

nlohmann::json Model::checkpoint() const {
  return {{"format", "alignsql-checkpoint"},
          {"version", 1},
          {"config", config_.to_json()},
          {"vocabs", vocabs_.to_json()},
          {"parameters", params_.to_json()}};
}

Model Model::from_checkpoint(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "alignsql-checkpoint")
    throw Error(ErrorCode::SchemaError, "not a checkpoint file");
  Model m(Config::from_json(j.at("config")), Vocabularies::from_json(j.at("vocabs")));
  m.params_.load_json(j.at("parameters"));
  return m;
}

}  // namespace alignsql

#include "alignsql/tensor.hpp"

#include <cmath>

namespace alignsql::nn {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

std::string shape(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Graph& graph_of(Var a) { return *a.graph; }

bool any_grad(Graph& g, std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (g.needs_grad(v)) return true;
  return false;
}

Mat softmax_rows_value(const Mat& a) {
  Mat out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double mx = a.row(i).maxCoeff();
    Eigen::RowVectorXd e = (a.row(i).array() - mx).exp().matrix();
    out.row(i) = e / e.sum();
  }
  return out;
}

Mat log_softmax_rows_value(const Mat& a) {
  Mat out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double mx = a.row(i).maxCoeff();
    double lse = mx + std::log((a.row(i).array() - mx).exp().sum());
    out.row(i) = a.row(i).array() - lse;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

Parameter& ParameterStore::create(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (index_.count(name)) throw Error(ErrorCode::ShapeMismatch, "parameter " + name + " already exists");
  index_[name] = params_.size();
  Parameter p;
  p.name = name;
  p.value = Mat::Zero(rows, cols);
  p.grad = Mat::Zero(rows, cols);
  p.adam_m = Mat::Zero(rows, cols);
  p.adam_v = Mat::Zero(rows, cols);
  params_.push_back(std::move(p));
  return params_.back();
}

void ParameterStore::initialize(Rng& rng) {
  for (auto& p : params_) {
    if (p.name.ends_with("bias")) {
      p.value.setZero();
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
    for (Eigen::Index c = 0; c < p.value.cols(); ++c)
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) p.value(r, c) = uniform_real(rng, -limit, limit);
  }
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::BadConfig, "no parameter named " + name);
  return params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::BadConfig, "no parameter named " + name);
  return params_[it->second];
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

nlohmann::json ParameterStore::to_json() const {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : params_) {
    std::vector<double> values(p.value.data(), p.value.data() + p.value.size());
    params[p.name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"values", values}};
  }
  return {{"version", 1}, {"parameters", params}};
}

void ParameterStore::load_json(const nlohmann::json& j) {
  if (!j.contains("parameters")) throw Error(ErrorCode::SchemaError, "checkpoint without parameters");
  const auto& params = j.at("parameters");
  for (auto& p : params_) {
    if (!params.contains(p.name)) throw Error(ErrorCode::SchemaError, "checkpoint lacks " + p.name);
    const auto& pj = params.at(p.name);
    auto shp = pj.at("shape").get<std::vector<Eigen::Index>>();
    auto values = pj.at("values").get<std::vector<double>>();
    if (shp.size() != 2 || shp[0] != p.value.rows() || shp[1] != p.value.cols() ||
        static_cast<Eigen::Index>(values.size()) != p.value.size())
      throw Error(ErrorCode::ShapeMismatch, "checkpoint shape mismatch for " + p.name);
    std::copy(values.begin(), values.end(), p.value.data());
  }
}

// ---------------------------------------------------------------------------
// Graph

const Mat& Var::value() const { return graph->value(id); }

const Mat& Graph::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.param ? n.param->value : n.value;
}

Rng& Graph::rng() {
  if (!rng_) throw Error(ErrorCode::BadConfig, "graph has no random source for dropout");
  return *rng_;
}

Var Graph::constant(Mat value) { return push(std::move(value), false, nullptr); }

Var Graph::param(Parameter& p) {
  Node n;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::push(Mat value, bool needs_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Graph::accumulate(int id, const Mat& delta) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (n.param) {
    n.param->grad += delta;
    return;
  }
  if (n.grad.size() == 0) n.grad = delta;
  else n.grad += delta;
}

void Graph::backward(Var loss, double seed) {
  if (loss.graph != this) throw Error(ErrorCode::NotScalar, "loss belongs to another graph");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw Error(ErrorCode::NotScalar, "backward needs a scalar, got " + shape(loss.value()));
  if (!needs_grad(loss)) return;
  accumulate(loss.id, Mat::Constant(1, 1, seed));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.param || !n.backward || n.grad.size() == 0) continue;
    Mat grad = std::move(n.grad);
    n.backward(*this, grad);
  }
}

// ---------------------------------------------------------------------------
// Ops

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a);
  require(a.cols() == b.rows(), "matmul " + shape(a.value()) + " * " + shape(b.value()));
  return g.push(a.value() * b.value(), any_grad(g, {a, b}), [a, b](Graph& g, const Mat& d) {
    if (g.needs_grad(a)) g.accumulate(a.id, d * b.value().transpose());
    if (g.needs_grad(b)) g.accumulate(b.id, a.value().transpose() * d);
  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  return g.push(a.value().transpose(), g.needs_grad(a),
                [a](Graph& g, const Mat& d) { g.accumulate(a.id, d.transpose()); });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add " + shape(a.value()) + " + " + shape(b.value()));
  return g.push(a.value() + b.value(), any_grad(g, {a, b}), [a, b](Graph& g, const Mat& d) {
    g.accumulate(a.id, d);
    g.accumulate(b.id, d);
  });
}

Var add_bias(Var a, Var bias) {
  Graph& g = graph_of(a);
  require(bias.cols() == 1 && bias.rows() == a.rows(), "add_bias " + shape(a.value()) + " + " + shape(bias.value()));
  Mat out = a.value().colwise() + bias.value().col(0);
  return g.push(std::move(out), any_grad(g, {a, bias}), [a, bias](Graph& g, const Mat& d) {
    g.accumulate(a.id, d);
    if (g.needs_grad(bias)) g.accumulate(bias.id, d.rowwise().sum());
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub " + shape(a.value()) + " - " + shape(b.value()));
  return g.push(a.value() - b.value(), any_grad(g, {a, b}), [a, b](Graph& g, const Mat& d) {
    g.accumulate(a.id, d);
    if (g.needs_grad(b)) g.accumulate(b.id, -d);
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul " + shape(a.value()) + " * " + shape(b.value()));
  return g.push(a.value().cwiseProduct(b.value()), any_grad(g, {a, b}), [a, b](Graph& g, const Mat& d) {
    if (g.needs_grad(a)) g.accumulate(a.id, d.cwiseProduct(b.value()));
    if (g.needs_grad(b)) g.accumulate(b.id, d.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  Graph& g = graph_of(a);
  return g.push(a.value() * s, g.needs_grad(a), [a, s](Graph& g, const Mat& d) { g.accumulate(a.id, d * s); });
}

Var tanh(Var a) {
  Graph& g = graph_of(a);
  Mat y = a.value().array().tanh().matrix();
  return g.push(y, g.needs_grad(a), [a, y](Graph& g, const Mat& d) {
    g.accumulate(a.id, d.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  Mat y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return g.push(y, g.needs_grad(a), [a, y](Graph& g, const Mat& d) {
    g.accumulate(a.id, d.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var log(Var a) {
  Graph& g = graph_of(a);
  return g.push(a.value().array().log().matrix(), g.needs_grad(a),
                [a](Graph& g, const Mat& d) { g.accumulate(a.id, d.cwiseQuotient(a.value())); });
}

Var clamp_min(Var a, double lo) {
  Graph& g = graph_of(a);
  Mat mask = (a.value().array() > lo).cast<double>().matrix();
  Mat y = a.value().cwiseMax(lo);
  return g.push(std::move(y), g.needs_grad(a),
                [a, mask](Graph& g, const Mat& d) { g.accumulate(a.id, d.cwiseProduct(mask)); });
}

Var concat(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat of nothing");
  Graph& g = graph_of(parts[0]);
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  bool grad = false;
  for (Var p : parts) {
    require(p.cols() == cols, "concat column mismatch");
    rows += p.rows();
    grad = grad || g.needs_grad(p);
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return g.push(std::move(out), grad, [parts](Graph& g, const Mat& d) {
    Eigen::Index r = 0;
    for (Var p : parts) {
      if (g.needs_grad(p)) g.accumulate(p.id, d.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

Var hcat(const std::vector<Var>& parts) {
  require(!parts.empty(), "hcat of nothing");
  Graph& g = graph_of(parts[0]);
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  bool grad = false;
  for (Var p : parts) {
    require(p.rows() == rows, "hcat row mismatch");
    cols += p.cols();
    grad = grad || g.needs_grad(p);
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return g.push(std::move(out), grad, [parts](Graph& g, const Mat& d) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      if (g.needs_grad(p)) g.accumulate(p.id, d.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  Graph& g = graph_of(a);
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows out of range");
  return g.push(a.value().middleRows(start, count), g.needs_grad(a), [a, start, count](Graph& g, const Mat& d) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    full.middleRows(start, count) = d;
    g.accumulate(a.id, full);
  });
}

Var column(Var a, Eigen::Index j) {
  Graph& g = graph_of(a);
  require(j >= 0 && j < a.cols(), "column out of range");
  return g.push(a.value().col(j), g.needs_grad(a), [a, j](Graph& g, const Mat& d) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    full.col(j) = d;
    g.accumulate(a.id, full);
  });
}

Var row(Var a, Eigen::Index i) {
  Graph& g = graph_of(a);
  require(i >= 0 && i < a.rows(), "row out of range");
  return g.push(a.value().row(i), g.needs_grad(a), [a, i](Graph& g, const Mat& d) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    full.row(i) = d;
    g.accumulate(a.id, full);
  });
}

Var softmax_rows(Var a) {
  Graph& g = graph_of(a);
  require(a.cols() > 0, "softmax over an empty row");
  Mat y = softmax_rows_value(a.value());
  return g.push(y, g.needs_grad(a), [a, y](Graph& g, const Mat& d) {
    Eigen::VectorXd inner = d.cwiseProduct(y).rowwise().sum();
    Mat dx = y.cwiseProduct(d.colwise() - inner);
    g.accumulate(a.id, dx);
  });
}

Var log_softmax_rows(Var a) {
  Graph& g = graph_of(a);
  require(a.cols() > 0, "softmax over an empty row");
  Mat y = log_softmax_rows_value(a.value());
  return g.push(y, g.needs_grad(a), [a, y](Graph& g, const Mat& d) {
    Mat p = y.array().exp().matrix();
    Eigen::VectorXd total = d.rowwise().sum();
    Mat dx = d - p.cwiseProduct(total.replicate(1, d.cols()));
    g.accumulate(a.id, dx);
  });
}

Var softmax(Var a) {
  if (a.cols() == 1) return transpose(softmax_rows(transpose(a)));
  require(a.rows() == 1, "softmax needs a vector");
  return softmax_rows(a);
}

Var log_softmax(Var a) {
  if (a.cols() == 1) return transpose(log_softmax_rows(transpose(a)));
  require(a.rows() == 1, "log_softmax needs a vector");
  return log_softmax_rows(a);
}

Var pick(Var a, Eigen::Index r, Eigen::Index c) {
  Graph& g = graph_of(a);
  require(r >= 0 && r < a.rows() && c >= 0 && c < a.cols(), "pick out of range");
  return g.push(Mat::Constant(1, 1, a.value()(r, c)), g.needs_grad(a), [a, r, c](Graph& g, const Mat& d) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    full(r, c) = d(0, 0);
    g.accumulate(a.id, full);
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  return g.push(Mat::Constant(1, 1, a.value().sum()), g.needs_grad(a), [a](Graph& g, const Mat& d) {
    g.accumulate(a.id, Mat::Constant(a.rows(), a.cols(), d(0, 0)));
  });
}

Var dot(Var a, Var b) {
  Graph& g = graph_of(a);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "dot " + shape(a.value()) + " . " + shape(b.value()));
  double v = a.value().cwiseProduct(b.value()).sum();
  return g.push(Mat::Constant(1, 1, v), any_grad(g, {a, b}), [a, b](Graph& g, const Mat& d) {
    if (g.needs_grad(a)) g.accumulate(a.id, b.value() * d(0, 0));
    if (g.needs_grad(b)) g.accumulate(b.id, a.value() * d(0, 0));
  });
}

Var embedding(Graph& g, Parameter& table, Eigen::Index index) {
  require(index >= 0 && index < table.value.cols(), "embedding index out of range in " + table.name);
  Parameter* t = &table;
  return g.push(table.value.col(index), true,
                [t, index](Graph&, const Mat& d) { t->grad.col(index) += d.col(0); });
}

Var dropout(Var a, double rate) {
  Graph& g = graph_of(a);
  if (!g.training() || rate <= 0.0) return a;
  Rng& rng = g.rng();
  const double keep = 1.0 - rate;
  Mat mask(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < mask.cols(); ++c)
    for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = uniform01(rng) < keep ? 1.0 / keep : 0.0;
  return g.push(a.value().cwiseProduct(mask), g.needs_grad(a),
                [a, mask](Graph& g, const Mat& d) { g.accumulate(a.id, d.cwiseProduct(mask)); });
}

Var affine(Var w, Var x, Var b) { return add_bias(matmul(w, x), b); }

Var bilinear(Var u, Var w, Var v) { return matmul(transpose(u), matmul(w, v)); }

std::pair<Var, Var> lstm_step(Var x, Var h, Var c, Var w, Var b) {
  Graph& g = graph_of(x);
  const Eigen::Index H = h.rows();
  const Eigen::Index X = x.rows();
  require(x.cols() == 1 && h.cols() == 1 && c.rows() == H && c.cols() == 1, "lstm_step state shapes");
  require(w.rows() == 4 * H && w.cols() == X + H, "lstm_step weight " + shape(w.value()));
  require(b.rows() == 4 * H && b.cols() == 1, "lstm_step bias " + shape(b.value()));

  Eigen::VectorXd in(X + H);
  in << x.value().col(0), h.value().col(0);
  Eigen::VectorXd z = w.value() * in + b.value().col(0);
  auto sig = [](const Eigen::VectorXd& v) { return (1.0 / (1.0 + (-v.array()).exp())).matrix().eval(); };
  Eigen::VectorXd ig = sig(z.segment(0, H));
  Eigen::VectorXd fg = sig(z.segment(H, H));
  Eigen::VectorXd cg = z.segment(2 * H, H).array().tanh().matrix();
  Eigen::VectorXd og = sig(z.segment(3 * H, H));
  Eigen::VectorXd c2 = fg.cwiseProduct(c.value().col(0)) + ig.cwiseProduct(cg);
  Eigen::VectorXd tc = c2.array().tanh().matrix();
  Eigen::VectorXd h2 = og.cwiseProduct(tc);

  Mat both(2 * H, 1);
  both << h2, c2;
  bool grad = any_grad(g, {x, h, c, w, b});
  Var out = g.push(std::move(both), grad, [=](Graph& g, const Mat& d) {
    Eigen::VectorXd dh = d.col(0).segment(0, H);
    Eigen::VectorXd dc = d.col(0).segment(H, H) + dh.cwiseProduct(og).cwiseProduct((1.0 - tc.array().square()).matrix());
    Eigen::VectorXd dz(4 * H);
    dz.segment(0, H) = dc.cwiseProduct(cg).cwiseProduct((ig.array() * (1.0 - ig.array())).matrix());
    dz.segment(H, H) = dc.cwiseProduct(c.value().col(0)).cwiseProduct((fg.array() * (1.0 - fg.array())).matrix());
    dz.segment(2 * H, H) = dc.cwiseProduct(ig).cwiseProduct((1.0 - cg.array().square()).matrix());
    dz.segment(3 * H, H) = dh.cwiseProduct(tc).cwiseProduct((og.array() * (1.0 - og.array())).matrix());
    if (g.needs_grad(w)) g.accumulate(w.id, dz * in.transpose());
    if (g.needs_grad(b)) g.accumulate(b.id, dz);
    if (g.needs_grad(x) || g.needs_grad(h)) {
      Eigen::VectorXd din = w.value().transpose() * dz;
      if (g.needs_grad(x)) g.accumulate(x.id, din.segment(0, X));
      if (g.needs_grad(h)) g.accumulate(h.id, din.segment(X, H));
    }
    if (g.needs_grad(c)) g.accumulate(c.id, dc.cwiseProduct(fg));
  });
  return {slice_rows(out, 0, H), slice_rows(out, H, H)};
}

double clip_gradients(ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (const auto& p : store.all()) sq += p.grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : store.all()) p.grad *= s;
  }
  return norm;
}

void Adam::step(ParameterStore& store) {
  ++steps;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
  for (auto& p : store.all()) {
    p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * p.grad;
    p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (p.adam_m.array() / c1) / ((p.adam_v.array() / c2).sqrt() + eps);
  }
}

}  // namespace alignsql::nn

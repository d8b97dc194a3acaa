#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "alignsql/error.hpp"
#include "alignsql/rng.hpp"
#include "json.hpp"

// Reverse-mode autodiff over dense double matrices. Vectors are columns.
namespace alignsql::nn {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
};

/// Owns every learned matrix; addresses stay stable as parameters are added.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  /// Glorot-uniform initialisation; zero for `bias` names.
  void initialize(Rng& rng);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  void zero_grad();
  std::size_t scalar_count() const;

  /// {"version": 1, "parameters": {name: {"shape": [r, c], "values": [...]}}}
  /// Doubles round-trip exactly through the JSON number format.
  nlohmann::json to_json() const;
  /// Loads values into already-created parameters; shapes must agree.
  void load_json(const nlohmann::json& j);

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

class Graph;

/// Handle to a node on a graph's tape.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

/// One tape. Nodes are appended in creation order, which is a topological
/// order, so backward simply walks it in reverse.
class Graph {
 public:
  explicit Graph(bool training = false, Rng* rng = nullptr) : training_(training), rng_(rng) {}

  Var constant(Mat value);
  Var param(Parameter& p);

  /// Seeds d(loss)/d(loss) = `seed` and propagates to every parameter
  /// reachable from `loss`, accumulating into Parameter::grad.
  void backward(Var loss, double seed = 1.0);

  bool training() const { return training_; }
  Rng& rng();

  const Mat& value(int id) const;
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  using Backward = std::function<void(Graph&, const Mat& grad)>;
  Var push(Mat value, bool needs_grad, Backward backward);
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
  /// Adds `delta` to the gradient flowing into node `id`.
  void accumulate(int id, const Mat& delta);

 private:
  struct Node {
    Mat value;
    Parameter* param = nullptr;
    Mat grad;
    bool needs_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool training_;
  Rng* rng_;
};

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// Adds a column vector to every column of `a`.
Var add_bias(Var a, Var bias);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var tanh(Var a);
Var sigmoid(Var a);
Var log(Var a);
/// max(a, lo) elementwise; clamped entries pass no gradient.
Var clamp_min(Var a, double lo);
/// Vertical stacking (equal column counts).
Var concat(const std::vector<Var>& parts);
/// Horizontal stacking (equal row counts).
Var hcat(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var column(Var a, Eigen::Index j);
Var row(Var a, Eigen::Index i);
/// Softmax over every row independently.
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Softmax over all entries of a row or column vector.
Var softmax(Var a);
Var log_softmax(Var a);
Var pick(Var a, Eigen::Index r, Eigen::Index c);
Var sum(Var a);
Var dot(Var a, Var b);
/// Column `index` of a (dim x vocab) table; only that column receives gradient.
Var embedding(Graph& g, Parameter& table, Eigen::Index index);
/// Inverted dropout; the identity outside training.
Var dropout(Var a, double rate);
/// W x + b.
Var affine(Var w, Var x, Var b);
/// u^T W v; with matrices this gives all pairwise scores.
Var bilinear(Var u, Var w, Var v);

/// Fused LSTM cell with gate order (input, forget, cell, output);
/// w is 4H x (X + H), b is 4H x 1. Returns (h', c').
std::pair<Var, Var> lstm_step(Var x, Var h, Var c, Var w, Var b);

/// Global L2 rescaling; returns the norm before clipping.
double clip_gradients(ParameterStore& store, double max_norm);

struct Adam {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t steps = 0;

  /// Bias-corrected update from the accumulated gradients.
  void step(ParameterStore& store);
};

}  // namespace alignsql::nn

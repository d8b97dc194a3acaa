#include <gtest/gtest.h>

#include <cmath>

#include "alignsql/tensor.hpp"
#include "support/primitives.hpp"

using namespace alignsql;
using namespace alignsql::nn;

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

Mat vec(std::initializer_list<double> xs) {
  Mat m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST(Tensor, PrimitiveGradients) {
  for (const auto& name : testsupport::primitive_names())
    for (std::uint64_t seed : {1, 2, 3}) {
      auto r = testsupport::check_primitive(name, seed);
      EXPECT_LT(r.max_rel, 1e-4) << name << " seed " << seed << " worst " << r.worst;
      EXPECT_GT(r.checked, 0u);
    }
}

TEST(Tensor, SoftmaxAndLstmAndBilinear) {
  Graph g;
  Var s = softmax(g.constant(vec({0, 0})));
  EXPECT_DOUBLE_EQ(s.value()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.value()(1, 0), 0.5);

  auto [h, c] = lstm_step(g.constant(Mat::Zero(2, 1)), g.constant(Mat::Zero(3, 1)), g.constant(Mat::Zero(3, 1)),
                          g.constant(Mat::Zero(12, 5)), g.constant(Mat::Zero(12, 1)));
  EXPECT_EQ(h.value().norm(), 0.0);
  EXPECT_EQ(c.value().norm(), 0.0);

  Mat u = vec({1, 2, 3}), v = vec({-1, 0.5, 4});
  Var b = bilinear(g.constant(u), g.constant(Mat::Identity(3, 3)), g.constant(v));
  EXPECT_DOUBLE_EQ(b.scalar(), u.col(0).dot(v.col(0)));

  Rng rng(4);
  Mat big(5, 7);
  for (Eigen::Index i = 0; i < big.size(); ++i) big.data()[i] = uniform_real(rng, -30, 30);
  Var rows = softmax_rows(g.constant(big));
  for (Eigen::Index r = 0; r < 5; ++r) EXPECT_NEAR(rows.value().row(r).sum(), 1.0, 1e-9);
}

TEST(Tensor, Backward) {
  ParameterStore store;
  Parameter& w = store.create("w", 1, 1);
  Parameter& other = store.create("other", 1, 1);
  w.value(0, 0) = 3.0;
  other.value(0, 0) = 2.0;
  store.zero_grad();
  Graph g;
  Var wv = g.param(w);
  g.param(other);
  g.backward(mul(wv, wv));
  EXPECT_DOUBLE_EQ(w.grad(0, 0), 6.0);
  EXPECT_EQ(other.grad(0, 0), 0.0);
  EXPECT_EQ(code_of([&] { g.backward(g.param(store.create("m", 2, 1))); }), ErrorCode::NotScalar);
  EXPECT_EQ(code_of([&] { matmul(g.constant(Mat::Zero(2, 3)), g.constant(Mat::Zero(2, 3))); }),
            ErrorCode::ShapeMismatch);
}

TEST(Tensor, DropoutEvalIsIdentity) {
  Rng rng(1);
  Graph g(false, &rng);
  Mat a = Mat::Random(4, 4);
  EXPECT_EQ(dropout(g.constant(a), 0.3).value(), a);
  Graph t(true, &rng);
  Mat d = dropout(t.constant(Mat::Ones(200, 1)), 0.5).value();
  int zeros = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i, 0) == 0.0) ++zeros;
    else EXPECT_DOUBLE_EQ(d(i, 0), 2.0);
  }
  EXPECT_GT(zeros, 50);
  EXPECT_LT(zeros, 150);
}

TEST(Tensor, ClipGradients) {
  ParameterStore store;
  Parameter& a = store.create("a", 2, 1);
  Parameter& b = store.create("b", 1, 1);
  a.grad = vec({6, 0});
  b.grad = vec({8});
  EXPECT_DOUBLE_EQ(clip_gradients(store, 5.0), 10.0);
  EXPECT_DOUBLE_EQ(a.grad(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(b.grad(0, 0), 4.0);
  a.grad = vec({0, 3});
  b.grad = vec({0});
  clip_gradients(store, 5.0);
  EXPECT_EQ(a.grad, vec({0, 3}));
  store.zero_grad();
  EXPECT_EQ(clip_gradients(store, 5.0), 0.0);
  EXPECT_EQ(a.grad, vec({0, 0}));
}

TEST(Tensor, AdamSteps) {
  ParameterStore store;
  Parameter& p = store.create("p", 3, 1);
  p.value = vec({1, -2, 0.5});
  const Mat start = p.value;
  Adam adam;
  p.grad = Mat::Ones(3, 1);
  adam.step(store);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LT(std::abs(p.value(i, 0) - start(i, 0) + 0.001), 1e-6);
  const Mat after = p.value;
  p.grad.setZero();
  adam.step(store);
  EXPECT_EQ(adam.steps, 2);
  // The first moment still carries the earlier gradient; a fresh optimizer
  // with zero gradient leaves parameters alone.
  ParameterStore fresh;
  Parameter& q = fresh.create("q", 2, 1);
  q.value = vec({0.3, 0.7});
  q.grad.setZero();
  Adam a2;
  a2.step(fresh);
  EXPECT_EQ(q.value, vec({0.3, 0.7}));
  EXPECT_EQ(a2.steps, 1);
  (void)after;
}

TEST(Tensor, AdamPreservesSymmetry) {
  ParameterStore store;
  Parameter& p = store.create("p", 2, 1);
  p.value = vec({0.4, 0.4});
  Adam adam;
  for (int step = 0; step < 2; ++step) {
    store.zero_grad();
    Graph g;
    Var x = g.param(p);
    // symmetric loss (x0 - 1)^2 + (x1 - 1)^2
    Var d = sub(x, g.constant(Mat::Ones(2, 1)));
    g.backward(sum(mul(d, d)));
    adam.step(store);
  }
  EXPECT_EQ(p.value(0, 0), p.value(1, 0));
  EXPECT_GT(p.value(0, 0), 0.4);
}

TEST(Tensor, CheckpointRoundTripIsExact) {
  ParameterStore a;
  a.create("w", 3, 2);
  a.create("w.bias", 3, 1);
  Rng rng(9);
  a.initialize(rng);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(a.get("w.bias").value(i, 0), 0.0);
  a.get("w").value(0, 0) = 0.1 + 0.2;
  ParameterStore b;
  b.create("w", 3, 2);
  b.create("w.bias", 3, 1);
  b.load_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(b.get("w").value, a.get("w").value);
  ParameterStore wrong;
  wrong.create("w", 2, 2);
  wrong.create("w.bias", 3, 1);
  EXPECT_THROW(wrong.load_json(a.to_json()), Error);
}

TEST(Tensor, DeterministicTrajectories) {
  auto run = [] {
    ParameterStore store;
    store.create("w", 4, 3);
    store.create("x", 3, 1);
    Rng init(5);
    store.initialize(init);
    Adam adam;
    Rng drop(6);
    for (int step = 0; step < 20; ++step) {
      store.zero_grad();
      Graph g(true, &drop);
      Var y = tanh(matmul(g.param(store.get("w")), dropout(g.param(store.get("x")), 0.3)));
      g.backward(sum(mul(y, y)));
      clip_gradients(store, 5.0);
      adam.step(store);
    }
    return store.to_json().dump();
  };
  EXPECT_EQ(run(), run());
}

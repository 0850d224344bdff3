#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "hamos/nn.hpp"

using namespace hamos;
using nn::Mat;
using nn::Tape;
using nn::Var;

namespace {

std::mt19937_64 rng(2024);

Mat random_mat(int r, int c, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Mat m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-7, std::abs(a), std::abs(b)});
}

// Central finite differences of a scalar-valued tape program with respect to
// one leaf input.
void check_gradient(const std::function<Var(Tape&, Var)>& program,
                    const Mat& input, double eps = 1e-6,
                    double tol = 1e-5) {
  Tape tape;
  Var leaf = tape.leaf(input);
  Var loss = program(tape, leaf);
  REQUIRE(tape.val(loss).size() == 1);
  tape.backward(loss);
  const Mat grad = tape.grad(leaf);
  REQUIRE(grad.rows() == input.rows());
  REQUIRE(grad.cols() == input.cols());

  auto value = [&](const Mat& m) {
    Tape t2;
    return t2.val(program(t2, t2.leaf(m)))(0, 0);
  };
  for (int i = 0; i < input.size(); ++i) {
    Mat p = input, m = input;
    p.data()[i] += eps;
    m.data()[i] -= eps;
    const double fd = (value(p) - value(m)) / (2 * eps);
    CHECK(rel_err(grad.data()[i], fd) < tol);
  }
}

// Naive in-test rotary encoding: pair (2i, 2i+1) rotated by t * 10000^{-2i/dh}.
Mat rope_reference(const Mat& x) {
  Mat out = x;
  const int dh = static_cast<int>(x.cols());
  for (int i = 0; i < dh / 2; ++i) {
    const double omega = std::pow(10000.0, -2.0 * i / dh);
    for (int t = 0; t < x.rows(); ++t) {
      const double ang = t * omega;
      const double a = x(t, 2 * i), b = x(t, 2 * i + 1);
      out(t, 2 * i) = a * std::cos(ang) - b * std::sin(ang);
      out(t, 2 * i + 1) = a * std::sin(ang) + b * std::cos(ang);
    }
  }
  return out;
}

// Dense reference attention: per-head softmax over a banded mask, rotary
// encoding applied to queries and keys via the independent reference above.
Mat attention_reference(const Mat& Q, const Mat& K, const Mat& V, int heads,
                        int window, bool rope) {
  const int D = static_cast<int>(Q.cols());
  const int dh = D / heads;
  const int Tq = static_cast<int>(Q.rows());
  const int Tk = static_cast<int>(K.rows());
  Mat out = Mat::Zero(Tq, D);
  for (int h = 0; h < heads; ++h) {
    Mat Qh = Q.middleCols(h * dh, dh);
    Mat Kh = K.middleCols(h * dh, dh);
    Mat Vh = V.middleCols(h * dh, dh);
    if (rope) {
      Qh = rope_reference(Qh);
      Kh = rope_reference(Kh);
    }
    for (int t = 0; t < Tq; ++t) {
      Eigen::VectorXd scores(Tk);
      for (int s = 0; s < Tk; ++s) {
        if (window >= 0 && std::abs(t - s) > window) {
          scores[s] = -std::numeric_limits<double>::infinity();
        } else {
          scores[s] = Qh.row(t).dot(Kh.row(s)) / std::sqrt(double(dh));
        }
      }
      const double mx = scores.maxCoeff();
      Eigen::VectorXd w = (scores.array() - mx).exp();
      w /= w.sum();
      out.row(t).segment(h * dh, dh) = w.transpose() * Vh;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("elementwise and linear ops match finite differences") {
  const Mat a = random_mat(3, 4);
  const Mat b = random_mat(4, 5);
  const Mat c = random_mat(3, 4, 0.5);

  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.matmul(x, t.constant(b)), Mat::Zero(3, 5)); },
      a);
  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.add(x, t.constant(c)), Mat::Ones(3, 4)); },
      a);
  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.sub(t.constant(c), x), Mat::Zero(3, 4)); },
      a);
  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.scale(x, -2.3), Mat::Zero(3, 4)); }, a);
  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.mul(x, t.constant(c)), Mat::Zero(3, 4)); },
      a);
  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.mul_const(x, c), Mat::Zero(3, 4)); }, a);
  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.add_const(x, c), Mat::Zero(3, 4)); }, a);
  check_gradient([&](Tape& t, Var x) { return t.mse(t.silu(x), Mat::Zero(3, 4)); },
                 a);
}

TEST_CASE("layer norm matches finite differences and normalizes rows") {
  const Mat a = random_mat(4, 6);
  Tape tape;
  Var y = tape.layer_norm(tape.leaf(a));
  const Mat& v = tape.val(y);
  for (int r = 0; r < v.rows(); ++r) {
    CHECK(v.row(r).mean() == doctest::Approx(0.0).epsilon(1e-10));
    const double var = v.row(r).array().square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
  const Mat target = random_mat(4, 6);
  check_gradient(
      [&](Tape& t, Var x) { return t.mse(t.layer_norm(x), target); }, a, 1e-6,
      1e-4);
}

TEST_CASE("broadcast, slicing and padding ops match finite differences") {
  const Mat x = random_mat(3, 5);
  const Mat row = random_mat(1, 5);

  check_gradient(
      [&](Tape& t, Var v) {
        return t.mse(t.row_broadcast_add(v, t.constant(row)), Mat::Zero(3, 5));
      },
      x);
  check_gradient(
      [&](Tape& t, Var v) {
        return t.mse(t.row_broadcast_add(t.constant(x), v), Mat::Zero(3, 5));
      },
      row);
  check_gradient(
      [&](Tape& t, Var v) {
        return t.mse(t.row_broadcast_mul(t.constant(x), v), Mat::Zero(3, 5));
      },
      row);
  check_gradient(
      [&](Tape& t, Var v) {
        return t.mse(t.repeat_rows(v, 4), Mat::Zero(4, 5));
      },
      row);
  check_gradient(
      [&](Tape& t, Var v) { return t.mse(t.cols(v, 1, 3), Mat::Zero(3, 3)); }, x);
  check_gradient(
      [&](Tape& t, Var v) {
        return t.mse(t.pad_cols(v, 9, 2), Mat::Zero(1, 9));
      },
      row);
}

TEST_CASE("mse value matches the elementwise mean of squares") {
  const Mat a = random_mat(2, 3);
  const Mat b = random_mat(2, 3);
  Tape tape;
  const double got = tape.val(tape.mse(tape.leaf(a), b))(0, 0);
  CHECK(got == doctest::Approx((a - b).array().square().mean()).epsilon(1e-12));
}

TEST_CASE("rope preserves norms and encodes relative positions") {
  const int T = 12, dh = 8;
  Mat x = random_mat(T, dh);
  Mat rot = x;
  nn::apply_rope(rot, 1.0);
  for (int t = 0; t < T; ++t)
    CHECK(rot.row(t).norm() == doctest::Approx(x.row(t).norm()).epsilon(1e-10));
  // Matches the in-test reference.
  CHECK((rot - rope_reference(x)).norm() < 1e-10);
  // Backward rotation undoes the forward one.
  Mat back = rot;
  nn::apply_rope(back, -1.0);
  CHECK((back - x).norm() < 1e-10);
  // Inner products depend only on the position difference: shifting both
  // rows by one position preserves <rope(q,t), rope(k,s)> when t-s is fixed.
  Mat q = random_mat(T, dh), k = random_mat(T, dh);
  Mat qr = q, kr = k;
  nn::apply_rope(qr, 1.0);
  nn::apply_rope(kr, 1.0);
  // Build copies shifted by one position: row i holds the value for pos i+1.
  Mat q2(T, dh), k2(T, dh);
  for (int t = 0; t < T - 1; ++t) {
    q2.row(t + 1) = q.row(t);
    k2.row(t + 1) = k.row(t);
  }
  q2.row(0).setZero();
  k2.row(0).setZero();
  Mat q2r = q2, k2r = k2;
  nn::apply_rope(q2r, 1.0);
  nn::apply_rope(k2r, 1.0);
  for (int t = 0; t < T - 3; ++t) {
    const double base = qr.row(t + 2).dot(kr.row(t));
    const double shifted = q2r.row(t + 3).dot(k2r.row(t + 1));
    CHECK(base == doctest::Approx(shifted).epsilon(1e-9));
  }
}

TEST_CASE("attention matches the dense banded reference") {
  for (int heads : {1, 2, 4}) {
    for (int window : {-1, 0, 2, 5, 100}) {
      for (bool rope : {false, true}) {
        const int T = 9;
        const int dim = heads * 4;
        const Mat Q = random_mat(T, dim);
        const Mat K = random_mat(T, dim);
        const Mat V = random_mat(T, dim);
        Tape tape;
        Var out = tape.attention(tape.leaf(Q), tape.leaf(K), tape.leaf(V),
                                 heads, window, rope);
        const Mat ref = attention_reference(Q, K, V, heads, window, rope);
        CHECK((tape.val(out) - ref).norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("cross-attention with unequal lengths matches the reference") {
  const Mat Q = random_mat(5, 8);
  const Mat K = random_mat(11, 8);
  const Mat V = random_mat(11, 8);
  Tape tape;
  Var out =
      tape.attention(tape.leaf(Q), tape.leaf(K), tape.leaf(V), 2, -1, false);
  CHECK((tape.val(out) - attention_reference(Q, K, V, 2, -1, false)).norm() <
        1e-9);
}

TEST_CASE("attention gradients match finite differences") {
  const int T = 6, dim = 8;
  const Mat Q = random_mat(T, dim, 0.5);
  const Mat K = random_mat(T, dim, 0.5);
  const Mat V = random_mat(T, dim, 0.5);
  const Mat target = random_mat(T, dim, 0.5);
  for (int window : {-1, 2}) {
    for (bool rope : {false, true}) {
      check_gradient(
          [&](Tape& t, Var q) {
            return t.mse(t.attention(q, t.constant(K), t.constant(V), 2,
                                     window, rope),
                         target);
          },
          Q, 1e-6, 1e-4);
      check_gradient(
          [&](Tape& t, Var k) {
            return t.mse(t.attention(t.constant(Q), k, t.constant(V), 2,
                                     window, rope),
                         target);
          },
          K, 1e-6, 1e-4);
      check_gradient(
          [&](Tape& t, Var v) {
            return t.mse(t.attention(t.constant(Q), t.constant(K), v, 2,
                                     window, rope),
                         target);
          },
          V, 1e-6, 1e-4);
    }
  }
}

TEST_CASE("banded attention ignores keys outside the window exactly") {
  const int T = 16, dim = 8, window = 3;
  const Mat Q = random_mat(T, dim);
  const Mat K = random_mat(T, dim);
  const Mat V = random_mat(T, dim);
  Tape t1;
  const Mat base = t1.val(
      t1.attention(t1.leaf(Q), t1.leaf(K), t1.leaf(V), 2, window, true));
  // Perturb a key/value pair far outside every query's band for row 0.
  Mat K2 = K, V2 = V;
  K2.row(T - 1).setConstant(100.0);
  V2.row(T - 1).setConstant(-50.0);
  Tape t2;
  const Mat mod = t2.val(
      t2.attention(t2.leaf(Q), t2.leaf(K2), t2.leaf(V2), 2, window, true));
  // Rows farther than `window` from the modified key are bitwise unchanged.
  for (int t = 0; t < T - 1 - window; ++t)
    CHECK((base.row(t) - mod.row(t)).norm() == 0.0);
  // The last row does change.
  CHECK((base.row(T - 1) - mod.row(T - 1)).norm() > 1e-6);
}

TEST_CASE("external nodes propagate precomputed gradients") {
  const Mat a = random_mat(2, 3);
  check_gradient(
      [&](Tape& t, Var x) {
        // f(X) = sum of squares, an external with analytic gradient 2X.
        return t.external({x}, [](const std::vector<const Mat*>& in) {
          Tape::External e;
          e.value = in[0]->array().square().sum();
          e.input_grads.push_back(2.0 * (*in[0]));
          return e;
        });
      },
      a);
}

TEST_CASE("param leaves accumulate into the store and optimizer state") {
  nn::ParamStore store;
  nn::Param& p = store.create("w", 2, 2, nn::zeros_init());
  p.value << 1.0, 2.0, 3.0, 4.0;
  Tape tape;
  Var w = tape.param(p);
  Var loss = tape.mse(w, Mat::Zero(2, 2));
  tape.backward(loss);
  tape.flush_param_grads();
  // d/dw mean(w^2) = w/2 for a 4-element matrix.
  CHECK((p.grad - p.value / 2.0).norm() < 1e-12);
  CHECK(store.has("w"));
  CHECK(!store.has("missing"));
  CHECK(store.all().size() == 1);
}

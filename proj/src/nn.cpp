#include "hamos/nn.hpp"

#include <cmath>

#include "hamos/errors.hpp"

namespace hamos::nn {

Param& ParamStore::create(const std::string& name, int rows, int cols,
                          std::function<void(Mat&)> init) {
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value.setZero(rows, cols);
  init(p->value);
  p->grad.setZero(rows, cols);
  p->adam_m.setZero(rows, cols);
  p->adam_v.setZero(rows, cols);
  p->ema = p->value;
  Param* raw = p.get();
  auto [it, inserted] = params_.emplace(name, std::move(p));
  if (!inserted) throw Error("duplicate parameter name: " + name);
  order_.push_back(raw);
  return *raw;
}

Param& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter: " + name);
  return *it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter: " + name);
  return *it->second;
}

bool ParamStore::has(const std::string& name) const {
  return params_.count(name) > 0;
}

void ParamStore::zero_grads() {
  for (Param* p : order_) p->grad.setZero();
}

std::function<void(Mat&)> zeros_init() {
  return [](Mat& m) { m.setZero(); };
}

std::function<void(Mat&)> uniform_init(double limit, std::mt19937_64& rng) {
  return [limit, &rng](Mat& m) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    }
  };
}

int Tape::push(Mat val, bool needs_grad, std::function<void(Tape&, int)> bw) {
  Node node;
  node.val = std::move(val);
  node.needs_grad = needs_grad;
  node.backward = std::move(bw);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad_ref(int idx) {
  Node& n = nodes_[idx];
  if (n.grad.size() == 0) n.grad.setZero(n.val.rows(), n.val.cols());
  return n.grad;
}

Var Tape::constant(Mat v) { return {push(std::move(v), false, nullptr)}; }

Var Tape::leaf(Mat v) { return {push(std::move(v), true, nullptr)}; }

Var Tape::param(Param& p, bool use_ema) {
  Var v{push(use_ema ? p.ema : p.value, !use_ema, nullptr)};
  if (!use_ema) param_leaves_.emplace_back(&p, v.idx);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  Mat out = val(a) * val(b);
  bool ng = needs(a) || needs(b);
  int ai = a.idx, bi = b.idx;
  return {push(std::move(out), ng, [ai, bi](Tape& t, int self) {
    const Mat& g = t.nodes_[self].grad;
    if (t.nodes_[ai].needs_grad)
      t.grad_ref(ai) += g * t.nodes_[bi].val.transpose();
    if (t.nodes_[bi].needs_grad)
      t.grad_ref(bi) += t.nodes_[ai].val.transpose() * g;
  })};
}

Var Tape::add(Var a, Var b) {
  Mat out = val(a) + val(b);
  bool ng = needs(a) || needs(b);
  int ai = a.idx, bi = b.idx;
  return {push(std::move(out), ng, [ai, bi](Tape& t, int self) {
    const Mat& g = t.nodes_[self].grad;
    if (t.nodes_[ai].needs_grad) t.grad_ref(ai) += g;
    if (t.nodes_[bi].needs_grad) t.grad_ref(bi) += g;
  })};
}

Var Tape::sub(Var a, Var b) {
  Mat out = val(a) - val(b);
  bool ng = needs(a) || needs(b);
  int ai = a.idx, bi = b.idx;
  return {push(std::move(out), ng, [ai, bi](Tape& t, int self) {
    const Mat& g = t.nodes_[self].grad;
    if (t.nodes_[ai].needs_grad) t.grad_ref(ai) += g;
    if (t.nodes_[bi].needs_grad) t.grad_ref(bi) -= g;
  })};
}

Var Tape::scale(Var a, double s) {
  Mat out = val(a) * s;
  int ai = a.idx;
  return {push(std::move(out), needs(a), [ai, s](Tape& t, int self) {
    if (t.nodes_[ai].needs_grad) t.grad_ref(ai) += t.nodes_[self].grad * s;
  })};
}

Var Tape::mul(Var a, Var b) {
  Mat out = val(a).cwiseProduct(val(b));
  bool ng = needs(a) || needs(b);
  int ai = a.idx, bi = b.idx;
  return {push(std::move(out), ng, [ai, bi](Tape& t, int self) {
    const Mat& g = t.nodes_[self].grad;
    if (t.nodes_[ai].needs_grad)
      t.grad_ref(ai) += g.cwiseProduct(t.nodes_[bi].val);
    if (t.nodes_[bi].needs_grad)
      t.grad_ref(bi) += g.cwiseProduct(t.nodes_[ai].val);
  })};
}

Var Tape::mul_const(Var a, const Mat& c) {
  Mat out = val(a).cwiseProduct(c);
  int ai = a.idx;
  Mat cc = c;
  return {push(std::move(out), needs(a), [ai, cc](Tape& t, int self) {
    if (t.nodes_[ai].needs_grad)
      t.grad_ref(ai) += t.nodes_[self].grad.cwiseProduct(cc);
  })};
}

Var Tape::add_const(Var a, const Mat& c) {
  Mat out = val(a) + c;
  int ai = a.idx;
  return {push(std::move(out), needs(a), [ai](Tape& t, int self) {
    if (t.nodes_[ai].needs_grad) t.grad_ref(ai) += t.nodes_[self].grad;
  })};
}

Var Tape::silu(Var a) {
  const Mat& x = val(a);
  Mat sig = ((1.0 + (-x.array()).exp()).inverse()).matrix();
  Mat out = x.cwiseProduct(sig);
  int ai = a.idx;
  return {push(std::move(out), needs(a), [ai, sig](Tape& t, int self) {
    if (!t.nodes_[ai].needs_grad) return;
    const Mat& x = t.nodes_[ai].val;
    Mat d = (sig.array() * (1.0 + x.array() * (1.0 - sig.array()))).matrix();
    t.grad_ref(ai) += t.nodes_[self].grad.cwiseProduct(d);
  })};
}

Var Tape::layer_norm(Var a, double eps) {
  const Mat& x = val(a);
  int n = static_cast<int>(x.cols());
  Eigen::VectorXd mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / n) + eps)
          .sqrt()
          .inverse();
  Mat out = (centered.array().colwise() * inv_std.array()).matrix();
  int ai = a.idx;
  Mat y = out;
  return {push(std::move(out), needs(a),
               [ai, y, inv_std, n](Tape& t, int self) {
    if (!t.nodes_[ai].needs_grad) return;
    const Mat& g = t.nodes_[self].grad;
    Eigen::VectorXd gsum = g.rowwise().sum();
    Eigen::VectorXd gysum = g.cwiseProduct(y).rowwise().sum();
    Mat dx = g * static_cast<double>(n);
    dx.colwise() -= gsum;
    dx -= (y.array().colwise() * gysum.array()).matrix();
    dx = (dx.array().colwise() * (inv_std.array() / n)).matrix();
    t.grad_ref(ai) += dx;
  })};
}

Var Tape::row_broadcast_add(Var x, Var row) {
  Mat out = val(x).rowwise() + Eigen::RowVectorXd(val(row).row(0));
  bool ng = needs(x) || needs(row);
  int xi = x.idx, ri = row.idx;
  return {push(std::move(out), ng, [xi, ri](Tape& t, int self) {
    const Mat& g = t.nodes_[self].grad;
    if (t.nodes_[xi].needs_grad) t.grad_ref(xi) += g;
    if (t.nodes_[ri].needs_grad) t.grad_ref(ri) += g.colwise().sum();
  })};
}

Var Tape::row_broadcast_mul(Var x, Var row) {
  Eigen::RowVectorXd r = val(row).row(0);
  Mat out = (val(x).array().rowwise() * r.array()).matrix();
  bool ng = needs(x) || needs(row);
  int xi = x.idx, ri = row.idx;
  return {push(std::move(out), ng, [xi, ri, r](Tape& t, int self) {
    const Mat& g = t.nodes_[self].grad;
    if (t.nodes_[xi].needs_grad)
      t.grad_ref(xi) += Mat(g.array().rowwise() * r.array());
    if (t.nodes_[ri].needs_grad)
      t.grad_ref(ri) += g.cwiseProduct(t.nodes_[xi].val).colwise().sum();
  })};
}

Var Tape::repeat_rows(Var row, int rows) {
  Mat out = val(row).row(0).replicate(rows, 1);
  int ri = row.idx;
  return {push(std::move(out), needs(row), [ri](Tape& t, int self) {
    if (t.nodes_[ri].needs_grad)
      t.grad_ref(ri) += t.nodes_[self].grad.colwise().sum();
  })};
}

Var Tape::cols(Var a, int start, int n) {
  Mat out = val(a).middleCols(start, n);
  int ai = a.idx;
  return {push(std::move(out), needs(a), [ai, start, n](Tape& t, int self) {
    if (t.nodes_[ai].needs_grad)
      t.grad_ref(ai).middleCols(start, n) += t.nodes_[self].grad;
  })};
}

Var Tape::pad_cols(Var row, int total, int offset) {
  const Mat& r = val(row);
  Mat out = Mat::Zero(r.rows(), total);
  out.middleCols(offset, r.cols()) = r;
  int ri = row.idx;
  int n = static_cast<int>(r.cols());
  return {push(std::move(out), needs(row), [ri, offset, n](Tape& t, int self) {
    if (t.nodes_[ri].needs_grad)
      t.grad_ref(ri) += t.nodes_[self].grad.middleCols(offset, n);
  })};
}

Var Tape::mse(Var a, const Mat& target) {
  const Mat& x = val(a);
  if (x.rows() != target.rows() || x.cols() != target.cols()) {
    throw ShapeMismatch("mse: operand shapes differ");
  }
  Mat diff = x - target;
  double numel = static_cast<double>(diff.size());
  Mat out(1, 1);
  out(0, 0) = diff.squaredNorm() / numel;
  int ai = a.idx;
  return {push(std::move(out), needs(a), [ai, diff, numel](Tape& t, int self) {
    if (t.nodes_[ai].needs_grad)
      t.grad_ref(ai) += t.nodes_[self].grad(0, 0) * 2.0 / numel * diff;
  })};
}

void apply_rope(Eigen::Ref<Mat> x, double sign) {
  int dh = static_cast<int>(x.cols());
  int pairs = dh / 2;
  for (int i = 0; i < pairs; ++i) {
    double omega = std::pow(10000.0, -2.0 * i / dh);
    for (int t = 0; t < x.rows(); ++t) {
      double angle = sign * t * omega;
      double c = std::cos(angle), s = std::sin(angle);
      double a = x(t, 2 * i), b = x(t, 2 * i + 1);
      x(t, 2 * i) = a * c - b * s;
      x(t, 2 * i + 1) = a * s + b * c;
    }
  }
}

namespace {
struct AttnCache {
  Mat qr, kr;                 // rotated queries/keys
  std::vector<Mat> probs;     // per head, Tq x band
};
}  // namespace

Var Tape::attention(Var q, Var k, Var v, int heads, int window, bool rope) {
  const Mat& Q = val(q);
  const Mat& K = val(k);
  const Mat& V = val(v);
  int D = static_cast<int>(Q.cols());
  if (D % heads != 0) throw ShapeMismatch("attention: heads must divide dim");
  int dh = D / heads;
  int Tq = static_cast<int>(Q.rows());
  int Tk = static_cast<int>(K.rows());
  int band = window < 0 ? Tk : std::min(Tk, 2 * window + 1);
  double scl = 1.0 / std::sqrt(static_cast<double>(dh));

  auto cache = std::make_shared<AttnCache>();
  cache->qr = Q;
  cache->kr = K;
  if (rope) {
    for (int h = 0; h < heads; ++h) {
      apply_rope(cache->qr.middleCols(h * dh, dh), 1.0);
      apply_rope(cache->kr.middleCols(h * dh, dh), 1.0);
    }
  }
  auto lo_of = [window, Tk](int t) {
    return window < 0 ? 0 : std::max(0, t - window);
  };
  auto hi_of = [window, Tk](int t) {
    return window < 0 ? Tk - 1 : std::min(Tk - 1, t + window);
  };
  Mat out = Mat::Zero(Tq, D);
  cache->probs.assign(heads, Mat::Zero(Tq, band));
  for (int h = 0; h < heads; ++h) {
    auto Qh = cache->qr.middleCols(h * dh, dh);
    auto Kh = cache->kr.middleCols(h * dh, dh);
    auto Vh = V.middleCols(h * dh, dh);
    for (int t = 0; t < Tq; ++t) {
      int lo = lo_of(t), n = hi_of(t) - lo_of(t) + 1;
      Eigen::RowVectorXd scores =
          (Qh.row(t) * Kh.middleRows(lo, n).transpose()) * scl;
      double mx = scores.maxCoeff();
      Eigen::RowVectorXd p = (scores.array() - mx).exp();
      p /= p.sum();
      cache->probs[h].row(t).head(n) = p;
      out.row(t).segment(h * dh, dh) = p * Vh.middleRows(lo, n);
    }
  }
  bool ng = needs(q) || needs(k) || needs(v);
  int qi = q.idx, ki = k.idx, vi = v.idx;
  return {push(std::move(out), ng,
               [qi, ki, vi, heads, dh, window, rope, scl, cache, lo_of,
                hi_of](Tape& t, int self) {
    const Mat& g = t.nodes_[self].grad;
    int Tq = static_cast<int>(cache->qr.rows());
    int Tk = static_cast<int>(cache->kr.rows());
    Mat dQ = Mat::Zero(Tq, cache->qr.cols());
    Mat dK = Mat::Zero(Tk, cache->kr.cols());
    Mat dV = Mat::Zero(Tk, cache->kr.cols());
    const Mat& V = t.nodes_[vi].val;
    for (int h = 0; h < heads; ++h) {
      auto Qh = cache->qr.middleCols(h * dh, dh);
      auto Kh = cache->kr.middleCols(h * dh, dh);
      auto Vh = V.middleCols(h * dh, dh);
      for (int tt = 0; tt < Tq; ++tt) {
        int lo = lo_of(tt), n = hi_of(tt) - lo_of(tt) + 1;
        Eigen::RowVectorXd p = cache->probs[h].row(tt).head(n);
        Eigen::RowVectorXd go = g.row(tt).segment(h * dh, dh);
        dV.middleRows(lo, n).middleCols(h * dh, dh) +=
            p.transpose() * go;
        Eigen::RowVectorXd da = go * Vh.middleRows(lo, n).transpose();
        Eigen::RowVectorXd ds =
            (p.array() * (da.array() - p.dot(da))).matrix() * scl;
        dQ.row(tt).segment(h * dh, dh) += ds * Kh.middleRows(lo, n);
        dK.middleRows(lo, n).middleCols(h * dh, dh) +=
            ds.transpose() * Qh.row(tt);
      }
    }
    if (rope) {
      for (int h = 0; h < heads; ++h) {
        apply_rope(dQ.middleCols(h * dh, dh), -1.0);
        apply_rope(dK.middleCols(h * dh, dh), -1.0);
      }
    }
    if (t.nodes_[qi].needs_grad) t.grad_ref(qi) += dQ;
    if (t.nodes_[ki].needs_grad) t.grad_ref(ki) += dK;
    if (t.nodes_[vi].needs_grad) t.grad_ref(vi) += dV;
  })};
}

Var Tape::external(
    const std::vector<Var>& inputs,
    const std::function<External(const std::vector<const Mat*>&)>& fn) {
  std::vector<const Mat*> vals;
  bool ng = false;
  for (Var in : inputs) {
    vals.push_back(&val(in));
    ng = ng || needs(in);
  }
  auto result = std::make_shared<External>(fn(vals));
  Mat out(1, 1);
  out(0, 0) = result->value;
  std::vector<int> idx;
  for (Var in : inputs) idx.push_back(in.idx);
  return {push(std::move(out), ng, [idx, result](Tape& t, int self) {
    double g = t.nodes_[self].grad(0, 0);
    for (size_t i = 0; i < idx.size(); ++i) {
      if (t.nodes_[idx[i]].needs_grad)
        t.grad_ref(idx[i]) += g * result->input_grads[i];
    }
  })};
}

void Tape::backward(Var loss) {
  Mat& g = grad_ref(loss.idx);
  g.setOnes();
  for (int i = loss.idx; i >= 0; --i) {
    Node& node = nodes_[i];
    if (node.needs_grad && node.backward && node.grad.size() != 0) {
      node.backward(*this, i);
    }
  }
}

void Tape::flush_param_grads() {
  for (auto& [p, idx] : param_leaves_) {
    if (nodes_[idx].grad.size() != 0) p->grad += nodes_[idx].grad;
  }
}

}  // namespace hamos::nn

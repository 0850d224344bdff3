#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace hamos::nn {

using Mat = Eigen::MatrixXd;

// Named trainable tensor with optimizer and EMA state.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
  Mat ema;
};

// Parameters are iterated in creation order, which keeps optimizer updates
// and checkpoints deterministic.
class ParamStore {
 public:
  Param& create(const std::string& name, int rows, int cols,
                std::function<void(Mat&)> init);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<Param*>& all() { return order_; }
  const std::vector<Param*>& all() const { return order_; }
  void zero_grads();

 private:
  std::map<std::string, std::unique_ptr<Param>> params_;
  std::vector<Param*> order_;
};

// Common initializers.
std::function<void(Mat&)> zeros_init();
std::function<void(Mat&)> uniform_init(double limit, std::mt19937_64& rng);

struct Var {
  int idx = -1;
};

// Reverse-mode tape over dense matrices. Values are computed eagerly; calling
// backward(loss) runs the recorded closures in reverse order.
class Tape {
 public:
  Var constant(Mat v);
  Var leaf(Mat v);
  // Leaf bound to a parameter; flush_param_grads() accumulates into p.grad.
  Var param(Param& p, bool use_ema = false);

  const Mat& val(Var v) const { return nodes_[v.idx].val; }
  const Mat& grad(Var v) const { return nodes_[v.idx].grad; }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var mul(Var a, Var b);                   // elementwise, same shape
  Var mul_const(Var a, const Mat& c);      // elementwise with a constant
  Var add_const(Var a, const Mat& c);
  Var silu(Var a);
  Var layer_norm(Var a, double eps = 1e-5);  // per row, non-affine
  Var row_broadcast_add(Var x, Var row);     // row: 1 x C
  Var row_broadcast_mul(Var x, Var row);
  Var repeat_rows(Var row, int rows);
  Var cols(Var a, int start, int n);
  Var pad_cols(Var row, int total, int offset);
  Var mse(Var a, const Mat& target);  // mean over elements, 1x1 output

  // Banded multi-head softmax attention with rotary position encoding on
  // queries/keys. window < 0 means full attention; rope uses row indices as
  // positions. q: Tq x D, k/v: Tk x D.
  Var attention(Var q, Var k, Var v, int heads, int window, bool rope);

  // Scalar-valued external function with precomputed input gradients.
  struct External {
    double value = 0.0;
    std::vector<Mat> input_grads;
  };
  Var external(const std::vector<Var>& inputs,
               const std::function<External(const std::vector<const Mat*>&)>& fn);

  void backward(Var loss);
  void flush_param_grads();

 private:
  struct Node {
    Mat val;
    Mat grad;
    bool needs_grad = false;
    std::function<void(Tape&, int)> backward;
  };
  int push(Mat val, bool needs_grad, std::function<void(Tape&, int)> bw);
  Mat& grad_ref(int idx);
  bool needs(Var v) const { return nodes_[v.idx].needs_grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<Param*, int>> param_leaves_;
};

// Rotary position encoding applied in place to a Tq x dh head slice; sign -1
// rotates backwards (gradient path). Positions are the row indices.
void apply_rope(Eigen::Ref<Mat> x, double sign);

}  // namespace hamos::nn

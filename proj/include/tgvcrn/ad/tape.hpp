#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "tgvcrn/ad/params.hpp"
#include "tgvcrn/ad/tensor.hpp"
#include "tgvcrn/common/rng.hpp"

namespace tgvcrn::ad {

enum class Op {
  Constant,
  Parameter,
  MatMul,
  Add,
  Sub,
  Mul,
  Div,
  AddBias,
  Scale,
  AddScalar,
  Tanh,
  Sigmoid,
  Softplus,
  Exp,
  Log,
  Square,
  Neg,
  Sin,
  Cos,
  Sqrt,
  Abs,
  Atan2,
  Clamp,
  ConcatCols,
  SliceCols,
  Reshape,
  Sum,
  Mean,
  SegmentMean,
  SegmentRepeat,
  SegmentMatmul,
  PairTanhSum,
  GaussianSample,
  KlDiagGauss,
  GradReverse,
  BceWithLogits,
  GaussianNll,
};

std::string_view op_name(Op op);
// Every kind that has a backward rule (everything except the two leaf kinds).
const std::vector<Op>& differentiable_ops();

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
};

struct Node {
  Op op = Op::Constant;
  Tensor value;
  std::array<int, 4> in{-1, -1, -1, -1};
  int n_in = 0;
  bool needs_grad = false;
  Tensor aux;        // op-specific saved values
  double s0 = 0.0;   // op-specific scalars
  double s1 = 0.0;
  int i0 = 0;        // op-specific integers
  std::vector<int> group;  // ConcatCols inputs
  std::shared_ptr<const std::vector<double>> blocks;  // SegmentMatmul constants
  int param = -1;
};

// Define-by-run record of one forward pass. Nodes are appended in
// topological order; backward() walks them in reverse.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr);

  Var constant(Tensor t);
  // Leaf bound to a stored parameter; one node per parameter per tape.
  Var param(int index);
  Var param(const std::string& name);

  const Node& node(int id) const { return nodes_[id]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  ParamStore* store() const { return store_; }

  // Reverse accumulation from a 1x1 node. Parameter gradients are added into
  // the store (when present) so several tapes can accumulate one batch.
  void backward(Var loss);
  // Gradient of the last backward() root w.r.t. node id; zeros if unreached.
  Tensor grad(Var v) const;

  Var push(Node n);

  // Test hooks. A faulted op kind gets a wrong backward rule; allow_degenerate
  // lets gaussian_sample accept sigma == 0.
  static void set_backward_fault(std::optional<Op> op);
  static std::optional<Op> backward_fault();
  bool allow_degenerate_sigma = false;

 private:
  void run_backward_rule(int id);
  Tensor& grad_buf(int id);

  ParamStore* store_;
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<bool> has_grad_;
  std::vector<int> param_nodes_;
};

// --- operations ---------------------------------------------------------
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var add_bias(Var x, Var bias);  // bias 1xC broadcast over rows
Var scale(Var x, double s);
Var add_scalar(Var x, double s);
Var tanh(Var x);
Var sigmoid(Var x);
Var softplus(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);
Var neg(Var x);
Var sin(Var x);
Var cos(Var x);
Var sqrt(Var x);
Var abs(Var x);
Var atan2(Var y, Var x);
Var clamp(Var x, double lo, double hi);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var x, int begin, int count);
Var reshape(Var x, int rows, int cols);
Var sum(Var x);
Var mean(Var x);
// Rows are grouped into consecutive segments of `group` rows.
Var segment_mean(Var x, int group);    // (B*g)xC -> BxC
Var segment_repeat(Var x, int group);  // BxC -> (B*g)xC
// Per segment b: out_b = M_b * x_b with constant gxg blocks M_b (row-major,
// concatenated).
Var segment_matmul(std::shared_ptr<const std::vector<double>> blocks, Var x, int group);
// Per segment and ordered pair k != j: out_k = sum_j tanh(recv_k + send_j).
Var pair_tanh_sum(Var recv, Var send, int group);
Var gaussian_sample(Var mu, Var sigma, Rng& rng);
// Sum over entries of KL(N(mu_q, sigma_q) || N(mu_p, sigma_p)).
Var kl_diag_gauss(Var mu_q, Var sigma_q, Var mu_p, Var sigma_p);
Var grad_reverse(Var x, double scale);
// Sum over entries of binary cross-entropy of sigmoid(logits) against targets.
Var bce_with_logits(Var logits, Var targets);
// Sum over entries of -log N(x; mu, sigma).
Var gaussian_nll(Var x, Var mu, Var sigma);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator+(Var a, double s) { return add_scalar(a, s); }
inline Var operator+(double s, Var a) { return add_scalar(a, s); }
inline Var operator-(Var a, double s) { return add_scalar(a, -s); }
inline Var operator-(double s, Var a) { return add_scalar(neg(a), s); }

}  // namespace tgvcrn::ad

#include "tgvcrn/ad/tape.hpp"

#include <cmath>

#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::ad {
namespace {

std::optional<Op> g_fault;

Tape* tape_of(std::initializer_list<Var> vs) {
  Tape* t = vs.begin()->tape;
  for (const Var& v : vs) {
    if (v.tape == nullptr || v.tape != t) throw ContractError("operands live on different tapes");
  }
  return t;
}

void require_same_shape(const char* what, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

void require_positive(const char* what, const Tensor& t, bool allow_zero = false) {
  const auto a = t.arr();
  const bool ok = allow_zero ? (a >= 0.0).all() : (a > 0.0).all();
  if (!ok) throw NumericError(std::string(what) + ": argument outside domain (needs > 0)");
}

Node make(Op op, Tensor value, std::initializer_list<Var> ins) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (const Var& v : ins) n.in[n.n_in++] = v.id;
  return n;
}

Var unary(Op op, Var x, Tensor value) {
  return x.tape->push(make(op, std::move(value), {x}));
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Parameter: return "parameter";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::AddBias: return "add_bias";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Square: return "square";
    case Op::Neg: return "neg";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Atan2: return "atan2";
    case Op::Clamp: return "clamp";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::Reshape: return "reshape";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SegmentMean: return "segment_mean";
    case Op::SegmentRepeat: return "segment_repeat";
    case Op::SegmentMatmul: return "segment_matmul";
    case Op::PairTanhSum: return "pair_tanh_sum";
    case Op::GaussianSample: return "gaussian_sample";
    case Op::KlDiagGauss: return "kl_diag_gauss";
    case Op::GradReverse: return "grad_reverse";
    case Op::BceWithLogits: return "bce_with_logits";
    case Op::GaussianNll: return "gaussian_nll";
  }
  return "unknown";
}

const std::vector<Op>& differentiable_ops() {
  static const std::vector<Op> ops = [] {
    std::vector<Op> v;
    for (int i = static_cast<int>(Op::MatMul); i <= static_cast<int>(Op::GaussianNll); ++i) {
      v.push_back(static_cast<Op>(i));
    }
    return v;
  }();
  return ops;
}

const Tensor& Var::value() const { return tape->node(id).value; }

Tape::Tape(ParamStore* store) : store_(store) {
  if (store_) param_nodes_.assign(store_->size(), -1);
}

void Tape::set_backward_fault(std::optional<Op> op) { g_fault = op; }
std::optional<Op> Tape::backward_fault() { return g_fault; }

Var Tape::push(Node n) {
  if (!n.value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op_name(n.op)));
  }
  if (n.op != Op::Parameter && n.op != Op::Constant) {
    n.needs_grad = false;
    for (int i = 0; i < n.n_in; ++i) n.needs_grad = n.needs_grad || nodes_[n.in[i]].needs_grad;
    for (int id : n.group) n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor t) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(t);
  return push(std::move(n));
}

Var Tape::param(int index) {
  if (!store_) throw ContractError("tape has no parameter store");
  if (index < 0 || index >= store_->size()) throw ContractError("parameter index out of range");
  if (param_nodes_.size() < static_cast<std::size_t>(store_->size())) {
    param_nodes_.resize(store_->size(), -1);
  }
  if (param_nodes_[index] >= 0) return Var{this, param_nodes_[index]};
  Node n;
  n.op = Op::Parameter;
  n.value = store_->value(index);
  n.needs_grad = true;
  n.param = index;
  Var v = push(std::move(n));
  param_nodes_[index] = v.id;
  return v;
}

Var Tape::param(const std::string& name) {
  if (!store_) throw ContractError("tape has no parameter store");
  return param(store_->index(name));
}

// --- forward rules ------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape* t = tape_of({a, b});
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + A.shape_str() + " x " +
                         B.shape_str());
  }
  Tensor out(A.rows(), B.cols());
  out.mat().noalias() = A.mat() * B.mat();
  return t->push(make(Op::MatMul, std::move(out), {a, b}));
}

namespace {
template <typename F>
Var binary(Op op, const char* what, Var a, Var b, F f) {
  Tape* t = tape_of({a, b});
  require_same_shape(what, a.value(), b.value());
  Tensor out(a.rows(), a.cols());
  out.arr() = f(a.value().arr(), b.value().arr());
  return t->push(make(op, std::move(out), {a, b}));
}
}  // namespace

Var add(Var a, Var b) {
  return binary(Op::Add, "add", a, b, [](const auto& x, const auto& y) { return x + y; });
}
Var sub(Var a, Var b) {
  return binary(Op::Sub, "sub", a, b, [](const auto& x, const auto& y) { return x - y; });
}
Var mul(Var a, Var b) {
  return binary(Op::Mul, "mul", a, b, [](const auto& x, const auto& y) { return x * y; });
}
Var div(Var a, Var b) {
  if ((b.value().arr() == 0.0).any()) throw NumericError("div: division by zero");
  return binary(Op::Div, "div", a, b, [](const auto& x, const auto& y) { return x / y; });
}

Var add_bias(Var x, Var bias) {
  Tape* t = tape_of({x, bias});
  const Tensor& X = x.value();
  const Tensor& b = bias.value();
  if (b.rows() != 1 || b.cols() != X.cols()) {
    throw DimensionError("add_bias: bias " + b.shape_str() + " for input " + X.shape_str());
  }
  Tensor out = X;
  out.mat().rowwise() += b.mat().row(0);
  return t->push(make(Op::AddBias, std::move(out), {x, bias}));
}

Var scale(Var x, double s) {
  Tensor out = x.value();
  out.arr() *= s;
  Node n = make(Op::Scale, std::move(out), {x});
  n.s0 = s;
  return x.tape->push(std::move(n));
}

Var add_scalar(Var x, double s) {
  Tensor out = x.value();
  out.arr() += s;
  Node n = make(Op::AddScalar, std::move(out), {x});
  n.s0 = s;
  return x.tape->push(std::move(n));
}

Var tanh(Var x) {
  Tensor out(x.rows(), x.cols());
  tanh_into(x.value().data(), out.data(), out.size());
  return unary(Op::Tanh, x, std::move(out));
}

Var sigmoid(Var x) {
  Tensor out(x.rows(), x.cols());
  out.arr() = 1.0 / (1.0 + (-x.value().arr()).exp());
  return unary(Op::Sigmoid, x, std::move(out));
}

Var softplus(Var x) {
  Tensor out(x.rows(), x.cols());
  const auto a = x.value().arr();
  out.arr() = a.max(0.0) + (-a.abs()).exp().log1p();
  return unary(Op::Softplus, x, std::move(out));
}

Var exp(Var x) {
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().exp();
  return unary(Op::Exp, x, std::move(out));
}

Var log(Var x) {
  require_positive("log", x.value());
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().log();
  return unary(Op::Log, x, std::move(out));
}

Var square(Var x) {
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().square();
  return unary(Op::Square, x, std::move(out));
}

Var neg(Var x) {
  Tensor out(x.rows(), x.cols());
  out.arr() = -x.value().arr();
  return unary(Op::Neg, x, std::move(out));
}

Var sin(Var x) {
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().sin();
  return unary(Op::Sin, x, std::move(out));
}

Var cos(Var x) {
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().cos();
  return unary(Op::Cos, x, std::move(out));
}

Var sqrt(Var x) {
  require_positive("sqrt", x.value());
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().sqrt();
  return unary(Op::Sqrt, x, std::move(out));
}

Var abs(Var x) {
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().abs();
  return unary(Op::Abs, x, std::move(out));
}

Var atan2(Var y, Var x) {
  Tape* t = tape_of({y, x});
  require_same_shape("atan2", y.value(), x.value());
  Tensor out(y.rows(), y.cols());
  for (int i = 0; i < out.size(); ++i) out[i] = std::atan2(y.value()[i], x.value()[i]);
  return t->push(make(Op::Atan2, std::move(out), {y, x}));
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
  Tensor out(x.rows(), x.cols());
  out.arr() = x.value().arr().max(lo).min(hi);
  Node n = make(Op::Clamp, std::move(out), {x});
  n.s0 = lo;
  n.s1 = hi;
  return x.tape->push(std::move(n));
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape* t = parts[0].tape;
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Var& p : parts) {
    if (p.tape != t) throw ContractError("operands live on different tapes");
    if (p.rows() != rows) throw DimensionError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  Node n;
  n.op = Op::ConcatCols;
  int c0 = 0;
  for (const Var& p : parts) {
    out.mat().middleCols(c0, p.cols()) = p.value().mat();
    c0 += p.cols();
    n.group.push_back(p.id);
  }
  n.value = std::move(out);
  return t->push(std::move(n));
}

Var slice_cols(Var x, int begin, int count) {
  if (begin < 0 || count < 1 || begin + count > x.cols()) {
    throw DimensionError("slice_cols: range out of bounds for " + x.value().shape_str());
  }
  Tensor out(x.rows(), count);
  out.mat() = x.value().mat().middleCols(begin, count);
  Node n = make(Op::SliceCols, std::move(out), {x});
  n.i0 = begin;
  return x.tape->push(std::move(n));
}

Var reshape(Var x, int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols != x.value().size()) {
    throw DimensionError("reshape: cannot view " + x.value().shape_str() + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  return unary(Op::Reshape, x, Tensor(rows, cols, x.value().values()));
}

Var sum(Var x) { return unary(Op::Sum, x, Tensor::scalar(x.value().arr().sum())); }

Var mean(Var x) { return unary(Op::Mean, x, Tensor::scalar(x.value().arr().mean())); }

Var segment_mean(Var x, int group) {
  if (group < 1 || x.rows() % group != 0) {
    throw DimensionError("segment_mean: rows not divisible by group size");
  }
  const int B = x.rows() / group;
  Tensor out(B, x.cols());
  for (int b = 0; b < B; ++b) {
    out.mat().row(b) = x.value().mat().middleRows(b * group, group).colwise().mean();
  }
  Node n = make(Op::SegmentMean, std::move(out), {x});
  n.i0 = group;
  return x.tape->push(std::move(n));
}

Var segment_repeat(Var x, int group) {
  if (group < 1) throw DimensionError("segment_repeat: group must be positive");
  Tensor out(x.rows() * group, x.cols());
  for (int b = 0; b < x.rows(); ++b) {
    out.mat().middleRows(b * group, group).rowwise() = x.value().mat().row(b);
  }
  Node n = make(Op::SegmentRepeat, std::move(out), {x});
  n.i0 = group;
  return x.tape->push(std::move(n));
}

Var segment_matmul(std::shared_ptr<const std::vector<double>> blocks, Var x, int group) {
  if (group < 1 || x.rows() % group != 0) {
    throw DimensionError("segment_matmul: rows not divisible by group size");
  }
  const int B = x.rows() / group;
  if (!blocks || blocks->size() != static_cast<std::size_t>(B) * group * group) {
    throw DimensionError("segment_matmul: block storage does not match segments");
  }
  Tensor out(x.rows(), x.cols());
  for (int b = 0; b < B; ++b) {
    ConstMatMap M(blocks->data() + static_cast<std::size_t>(b) * group * group, group, group);
    out.mat().middleRows(b * group, group).noalias() =
        M * x.value().mat().middleRows(b * group, group);
  }
  Node n = make(Op::SegmentMatmul, std::move(out), {x});
  n.i0 = group;
  n.blocks = std::move(blocks);
  return x.tape->push(std::move(n));
}

Var pair_tanh_sum(Var recv, Var send, int group) {
  Tape* t = tape_of({recv, send});
  require_same_shape("pair_tanh_sum", recv.value(), send.value());
  if (group < 1 || recv.rows() % group != 0) {
    throw DimensionError("pair_tanh_sum: rows not divisible by group size");
  }
  const int B = recv.rows() / group;
  const int C = recv.cols();
  const bool keep = t->node(recv.id).needs_grad || t->node(send.id).needs_grad;
  Tensor out(recv.rows(), C);
  // aux row (b*g + k)*g + j holds 1 - tanh^2 for pair (k, j); zero on j == k.
  Tensor aux = keep ? Tensor(B * group * group, C) : Tensor();
  RowMat pre(group, C);
  RowMat th(group, C);
  for (int b = 0; b < B; ++b) {
    const auto S = send.value().mat().middleRows(b * group, group);
    for (int k = 0; k < group; ++k) {
      const int row = b * group + k;
      pre = S;
      pre.rowwise() += recv.value().mat().row(row);
      tanh_into(pre.data(), th.data(), group * C);
      th.row(k).setZero();
      out.mat().row(row) = th.colwise().sum();
      if (keep) {
        auto d = aux.mat().middleRows(static_cast<Eigen::Index>(row) * group, group);
        d.array() = 1.0 - th.array().square();
        d.row(k).setZero();
      }
    }
  }
  Node n = make(Op::PairTanhSum, std::move(out), {recv, send});
  n.i0 = group;
  n.aux = std::move(aux);
  return t->push(std::move(n));
}

Var gaussian_sample(Var mu, Var sigma, Rng& rng) {
  Tape* t = tape_of({mu, sigma});
  require_same_shape("gaussian_sample", mu.value(), sigma.value());
  require_positive("gaussian_sample sigma", sigma.value(), t->allow_degenerate_sigma);
  Tensor eps(mu.rows(), mu.cols());
  for (int i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  Tensor out(mu.rows(), mu.cols());
  out.arr() = mu.value().arr() + sigma.value().arr() * eps.arr();
  Node n = make(Op::GaussianSample, std::move(out), {mu, sigma});
  n.aux = std::move(eps);
  return t->push(std::move(n));
}

Var kl_diag_gauss(Var mu_q, Var sigma_q, Var mu_p, Var sigma_p) {
  Tape* t = tape_of({mu_q, sigma_q, mu_p, sigma_p});
  require_same_shape("kl_diag_gauss", mu_q.value(), sigma_q.value());
  require_same_shape("kl_diag_gauss", mu_q.value(), mu_p.value());
  require_same_shape("kl_diag_gauss", mu_q.value(), sigma_p.value());
  require_positive("kl_diag_gauss sigma_q", sigma_q.value());
  require_positive("kl_diag_gauss sigma_p", sigma_p.value());
  const auto mq = mu_q.value().arr();
  const auto sq = sigma_q.value().arr();
  const auto mp = mu_p.value().arr();
  const auto sp = sigma_p.value().arr();
  const double kl =
      ((sp / sq).log() + (sq.square() + (mq - mp).square()) / (2.0 * sp.square()) - 0.5).sum();
  return t->push(make(Op::KlDiagGauss, Tensor::scalar(kl), {mu_q, sigma_q, mu_p, sigma_p}));
}

Var grad_reverse(Var x, double s) {
  if (!(s > 0.0)) throw ContractError("grad_reverse: scale must be positive");
  Node n = make(Op::GradReverse, x.value(), {x});
  n.s0 = s;
  return x.tape->push(std::move(n));
}

Var bce_with_logits(Var logits, Var targets) {
  Tape* t = tape_of({logits, targets});
  require_same_shape("bce_with_logits", logits.value(), targets.value());
  const auto l = logits.value().arr();
  const auto y = targets.value().arr();
  const double v = (l.max(0.0) + (-l.abs()).exp().log1p() - y * l).sum();
  return t->push(make(Op::BceWithLogits, Tensor::scalar(v), {logits, targets}));
}

Var gaussian_nll(Var x, Var mu, Var sigma) {
  Tape* t = tape_of({x, mu, sigma});
  require_same_shape("gaussian_nll", x.value(), mu.value());
  require_same_shape("gaussian_nll", x.value(), sigma.value());
  require_positive("gaussian_nll sigma", sigma.value());
  const auto d = (x.value().arr() - mu.value().arr()) / sigma.value().arr();
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  const double v = (0.5 * d.square() + sigma.value().arr().log() + kHalfLog2Pi).sum();
  return t->push(make(Op::GaussianNll, Tensor::scalar(v), {x, mu, sigma}));
}

}  // namespace tgvcrn::ad

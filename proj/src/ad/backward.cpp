#include <cmath>

#include "tgvcrn/ad/tape.hpp"
#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::ad {

Tensor& Tape::grad_buf(int id) {
  if (!has_grad_[id]) {
    const Tensor& v = nodes_[id].value;
    grads_[id] = Tensor(v.rows(), v.cols());
    has_grad_[id] = true;
  }
  return grads_[id];
}

Tensor Tape::grad(Var v) const {
  if (v.tape != this) throw ContractError("grad: variable belongs to another tape");
  if (v.id < static_cast<int>(has_grad_.size()) && has_grad_[v.id]) return grads_[v.id];
  return Tensor(v.rows(), v.cols());
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be a scalar, got " + loss.value().shape_str());
  }
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), false);
  grad_buf(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    if (!has_grad_[id] || !nodes_[id].needs_grad) continue;
    if (nodes_[id].op == Op::Parameter || nodes_[id].op == Op::Constant) continue;
    run_backward_rule(id);
  }
  if (store_) {
    for (std::size_t p = 0; p < param_nodes_.size(); ++p) {
      const int id = param_nodes_[p];
      if (id < 0) continue;
      store_->accumulate_grad(static_cast<int>(p), grad_buf(id));
    }
  }
}

void Tape::run_backward_rule(int id) {
  const Node& n = nodes_[id];
  Tensor g = grads_[id];
  if (backward_fault() == n.op) g.arr() *= 1.25;
  const auto ga = g.arr();
  const auto y = n.value.arr();
  auto want = [&](int k) { return nodes_[n.in[k]].needs_grad; };
  auto in = [&](int k) -> const Tensor& { return nodes_[n.in[k]].value; };
  auto acc = [&](int k) -> Tensor& { return grad_buf(n.in[k]); };

  switch (n.op) {
    case Op::Constant:
    case Op::Parameter:
      break;
    case Op::MatMul:
      if (want(0)) acc(0).mat().noalias() += g.mat() * in(1).mat().transpose();
      if (want(1)) acc(1).mat().noalias() += in(0).mat().transpose() * g.mat();
      break;
    case Op::Add:
      if (want(0)) acc(0).arr() += ga;
      if (want(1)) acc(1).arr() += ga;
      break;
    case Op::Sub:
      if (want(0)) acc(0).arr() += ga;
      if (want(1)) acc(1).arr() -= ga;
      break;
    case Op::Mul:
      if (want(0)) acc(0).arr() += ga * in(1).arr();
      if (want(1)) acc(1).arr() += ga * in(0).arr();
      break;
    case Op::Div:
      if (want(0)) acc(0).arr() += ga / in(1).arr();
      if (want(1)) acc(1).arr() -= ga * in(0).arr() / in(1).arr().square();
      break;
    case Op::AddBias:
      if (want(0)) acc(0).arr() += ga;
      if (want(1)) acc(1).mat().row(0) += g.mat().colwise().sum();
      break;
    case Op::Scale:
      acc(0).arr() += n.s0 * ga;
      break;
    case Op::AddScalar:
    case Op::Reshape:
      acc(0).arr() += ga;
      break;
    case Op::Tanh:
      acc(0).arr() += ga * (1.0 - y.square());
      break;
    case Op::Sigmoid:
      acc(0).arr() += ga * y * (1.0 - y);
      break;
    case Op::Softplus:
      acc(0).arr() += ga / (1.0 + (-in(0).arr()).exp());
      break;
    case Op::Exp:
      acc(0).arr() += ga * y;
      break;
    case Op::Log:
      acc(0).arr() += ga / in(0).arr();
      break;
    case Op::Square:
      acc(0).arr() += 2.0 * ga * in(0).arr();
      break;
    case Op::Neg:
      acc(0).arr() -= ga;
      break;
    case Op::Sin:
      acc(0).arr() += ga * in(0).arr().cos();
      break;
    case Op::Cos:
      acc(0).arr() -= ga * in(0).arr().sin();
      break;
    case Op::Sqrt:
      acc(0).arr() += ga / (2.0 * y);
      break;
    case Op::Abs:
      acc(0).arr() += ga * in(0).arr().sign();
      break;
    case Op::Atan2: {
      const auto ya = in(0).arr();
      const auto xa = in(1).arr();
      const Eigen::ArrayXd r2 = ya.square() + xa.square();
      const Eigen::ArrayXd inv = (r2 > 0.0).select(1.0 / r2, 0.0);
      if (want(0)) acc(0).arr() += ga * xa * inv;
      if (want(1)) acc(1).arr() -= ga * ya * inv;
      break;
    }
    case Op::Clamp: {
      const auto x = in(0).arr();
      acc(0).arr() += ((x >= n.s0) && (x <= n.s1)).select(ga, 0.0);
      break;
    }
    case Op::ConcatCols: {
      int c0 = 0;
      for (int src : n.group) {
        const int w = nodes_[src].value.cols();
        if (nodes_[src].needs_grad) grad_buf(src).mat() += g.mat().middleCols(c0, w);
        c0 += w;
      }
      break;
    }
    case Op::SliceCols:
      acc(0).mat().middleCols(n.i0, g.cols()) += g.mat();
      break;
    case Op::Sum:
      acc(0).arr() += g[0];
      break;
    case Op::Mean:
      acc(0).arr() += g[0] / in(0).size();
      break;
    case Op::SegmentMean: {
      Tensor& dst = acc(0);
      const int group = n.i0;
      for (int b = 0; b < g.rows(); ++b) {
        dst.mat().middleRows(b * group, group).rowwise() += g.mat().row(b) / group;
      }
      break;
    }
    case Op::SegmentRepeat: {
      Tensor& dst = acc(0);
      const int group = n.i0;
      for (int b = 0; b < dst.rows(); ++b) {
        dst.mat().row(b) += g.mat().middleRows(b * group, group).colwise().sum();
      }
      break;
    }
    case Op::SegmentMatmul: {
      Tensor& dst = acc(0);
      const int group = n.i0;
      const int B = g.rows() / group;
      for (int b = 0; b < B; ++b) {
        ConstMatMap M(n.blocks->data() + static_cast<std::size_t>(b) * group * group, group,
                      group);
        dst.mat().middleRows(b * group, group).noalias() +=
            M.transpose() * g.mat().middleRows(b * group, group);
      }
      break;
    }
    case Op::PairTanhSum: {
      const int group = n.i0;
      const int C = g.cols();
      Tensor* dr = want(0) ? &acc(0) : nullptr;
      Tensor* ds = want(1) ? &acc(1) : nullptr;
      RowMat d(group, C);
      for (int row = 0; row < g.rows(); ++row) {
        const int base = row - row % group;
        d = n.aux.mat().middleRows(static_cast<Eigen::Index>(row) * group, group);
        d.array().rowwise() *= g.mat().row(row).array();
        if (dr) dr->mat().row(row) += d.colwise().sum();
        if (ds) ds->mat().middleRows(base, group) += d;
      }
      break;
    }
    case Op::GaussianSample:
      if (want(0)) acc(0).arr() += ga;
      if (want(1)) acc(1).arr() += ga * n.aux.arr();
      break;
    case Op::KlDiagGauss: {
      const double s = g[0];
      const auto mq = in(0).arr();
      const auto sq = in(1).arr();
      const auto mp = in(2).arr();
      const auto sp = in(3).arr();
      const Eigen::ArrayXd diff = mq - mp;
      const Eigen::ArrayXd sp2 = sp.square();
      if (want(0)) acc(0).arr() += s * diff / sp2;
      if (want(1)) acc(1).arr() += s * (sq / sp2 - 1.0 / sq);
      if (want(2)) acc(2).arr() -= s * diff / sp2;
      if (want(3)) acc(3).arr() += s * (1.0 / sp - (sq.square() + diff.square()) / (sp2 * sp));
      break;
    }
    case Op::GradReverse:
      acc(0).arr() -= n.s0 * ga;
      break;
    case Op::BceWithLogits: {
      const double s = g[0];
      const auto l = in(0).arr();
      if (want(0)) acc(0).arr() += s * (1.0 / (1.0 + (-l).exp()) - in(1).arr());
      if (want(1)) acc(1).arr() -= s * l;
      break;
    }
    case Op::GaussianNll: {
      const double s = g[0];
      const auto sig = in(2).arr();
      const Eigen::ArrayXd diff = in(0).arr() - in(1).arr();
      const Eigen::ArrayXd sig2 = sig.square();
      if (want(0)) acc(0).arr() += s * diff / sig2;
      if (want(1)) acc(1).arr() -= s * diff / sig2;
      if (want(2)) acc(2).arr() += s * (1.0 / sig - diff.square() / (sig2 * sig));
      break;
    }
  }
}

}  // namespace tgvcrn::ad

#include "tgvcrn/nn/layers.hpp"

#include <cmath>

#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::nn {

Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Sigmoid: return ad::sigmoid(x);
  }
  return x;
}

Tensor init_weight(int fan_in, int rows, int cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor w(rows, cols);
  for (int i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
  return w;
}

Linear::Linear(ParamStore& store, const std::string& name, int in_dim, int out_dim, Rng& rng)
    : in(in_dim), out(out_dim) {
  w = store.add(name + ".w", init_weight(in_dim, in_dim, out_dim, rng));
  b = store.add(name + ".b", Tensor(1, out_dim));
}

Var Linear::operator()(Tape& tape, Var x) const {
  if (x.cols() != in) {
    throw DimensionError("linear layer expects " + std::to_string(in) + " inputs, got " +
                         std::to_string(x.cols()));
  }
  return ad::add_bias(ad::matmul(x, tape.param(w)), tape.param(b));
}

Mlp::Mlp(ParamStore& store, const std::string& name, const std::vector<int>& sizes,
         Activation act, Rng& rng)
    : out_act(act) {
  if (sizes.size() < 2) throw ContractError("MLP needs at least an input and an output size");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers.emplace_back(store, name + ".l" + std::to_string(i), sizes[i], sizes[i + 1], rng);
  }
}

Var Mlp::operator()(Tape& tape, Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](tape, x);
    x = activate(x, i + 1 < layers.size() ? Activation::Tanh : out_act);
  }
  return x;
}

GruCell::GruCell(ParamStore& store, const std::string& name, int in_dim, int hidden_dim,
                 Rng& rng)
    : in(in_dim), hidden(hidden_dim) {
  wx = store.add(name + ".wx", init_weight(in_dim, in_dim, 3 * hidden_dim, rng));
  wh = store.add(name + ".wh", init_weight(hidden_dim, hidden_dim, 3 * hidden_dim, rng));
  bx = store.add(name + ".bx", Tensor(1, 3 * hidden_dim));
  bh = store.add(name + ".bh", Tensor(1, 3 * hidden_dim));
}

Var GruCell::step(Tape& tape, Var x, Var h) const {
  if (x.cols() != in || h.cols() != hidden || x.rows() != h.rows()) {
    throw DimensionError("GRU step: got input " + x.value().shape_str() + " and state " +
                         h.value().shape_str());
  }
  const int H = hidden;
  Var gx = ad::add_bias(ad::matmul(x, tape.param(wx)), tape.param(bx));
  Var gh = ad::add_bias(ad::matmul(h, tape.param(wh)), tape.param(bh));
  Var r = ad::sigmoid(ad::slice_cols(gx, 0, H) + ad::slice_cols(gh, 0, H));
  Var z = ad::sigmoid(ad::slice_cols(gx, H, H) + ad::slice_cols(gh, H, H));
  Var cand = ad::tanh(ad::slice_cols(gx, 2 * H, H) + r * ad::slice_cols(gh, 2 * H, H));
  return (1.0 - z) * h + z * cand;
}

GaussianHead::GaussianHead(ParamStore& store, const std::string& name, int in, int out,
                           Rng& rng)
    : mu(store, name + ".mu", in, out, rng), sigma(store, name + ".sigma", in, out, rng) {}

Gaussian GaussianHead::operator()(Tape& tape, Var x) const {
  return {mu(tape, x), ad::softplus(sigma(tape, x)) + kSigmaFloor};
}

GnnBlock::GnnBlock(ParamStore& store, const std::string& name, int in, int edge_hidden, int msg,
                   const std::vector<int>& node_sizes, Rng& rng)
    : in_(in) {
  w_recv_ = store.add(name + ".fe.w_recv", init_weight(2 * in, in, edge_hidden, rng));
  w_send_ = store.add(name + ".fe.w_send", init_weight(2 * in, in, edge_hidden, rng));
  b_edge_ = store.add(name + ".fe.b", Tensor(1, edge_hidden));
  edge_out_ = Linear(store, name + ".fe.out", edge_hidden, msg, rng);
  std::vector<int> sizes{msg};
  sizes.insert(sizes.end(), node_sizes.begin(), node_sizes.end());
  f_v_ = Mlp(store, name + ".fv", sizes, Activation::Tanh, rng);
}

Var GnnBlock::aggregate(Tape& tape, Var nodes, int K) const {
  if (nodes.cols() != in_) {
    throw DimensionError("GNN block expects " + std::to_string(in_) + " node features, got " +
                         std::to_string(nodes.cols()));
  }
  Var recv = ad::add_bias(ad::matmul(nodes, tape.param(w_recv_)), tape.param(b_edge_));
  Var send = ad::matmul(nodes, tape.param(w_send_));
  Var hidden_sum = ad::pair_tanh_sum(recv, send, K);
  // sum_j (t_kj W + b) = (sum_j t_kj) W + (K - 1) b
  return ad::add_bias(ad::matmul(hidden_sum, tape.param(edge_out_.w)),
                      ad::scale(tape.param(edge_out_.b), static_cast<double>(K - 1)));
}

Var GnnBlock::operator()(Tape& tape, Var nodes, int K) const {
  return f_v_(tape, aggregate(tape, nodes, K));
}

FlatBlock::FlatBlock(ParamStore& store, const std::string& name, int K, int in, int hidden,
                     int out, Rng& rng)
    : K_(K), in_(in), out_(out) {
  mlp_ = Mlp(store, name, {K * in, hidden, K * out}, Activation::Tanh, rng);
}

Var FlatBlock::operator()(Tape& tape, Var nodes, int K) const {
  if (K != K_ || nodes.cols() != in_ || nodes.rows() % K != 0) {
    throw DimensionError("flat block built for " + std::to_string(K_) + " agents of " +
                         std::to_string(in_) + " features, got " + nodes.value().shape_str());
  }
  const int B = nodes.rows() / K;
  Var flat = ad::reshape(nodes, B, K * in_);
  return ad::reshape(mlp_(tape, flat), B * K, out_);
}

TreatmentHead::TreatmentHead(ParamStore& store, const std::string& name, int in, int hidden,
                             Rng& rng)
    : mlp(store, name, {in, hidden, 1}, Activation::Identity, rng) {}

Var TreatmentHead::logits(Tape& tape, Var z) const {
  return mlp(tape, use_grl ? ad::grad_reverse(z, grl_scale) : z);
}

}  // namespace tgvcrn::nn

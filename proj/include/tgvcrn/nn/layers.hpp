#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tgvcrn/ad/params.hpp"
#include "tgvcrn/ad/tape.hpp"
#include "tgvcrn/common/rng.hpp"

namespace tgvcrn::nn {

using ad::ParamStore;
using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class Activation { Identity, Tanh, Sigmoid };

Var activate(Var x, Activation a);

// Uniform in +-1/sqrt(fan_in).
Tensor init_weight(int fan_in, int rows, int cols, Rng& rng);

struct Linear {
  int w = -1;
  int b = -1;
  int in = 0;
  int out = 0;

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
};

// Affine layers with tanh between them and a chosen output activation.
// sizes = {in, hidden..., out}.
struct Mlp {
  std::vector<Linear> layers;
  Activation out_act = Activation::Identity;

  Mlp() = default;
  Mlp(ParamStore& store, const std::string& name, const std::vector<int>& sizes,
      Activation out_act, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
  int in_dim() const { return layers.front().in; }
  int out_dim() const { return layers.back().out; }
};

// Fused-gate GRU: gates ordered [reset, update, candidate].
struct GruCell {
  int wx = -1, wh = -1, bx = -1, bh = -1;
  int in = 0;
  int hidden = 0;

  GruCell() = default;
  GruCell(ParamStore& store, const std::string& name, int in, int hidden, Rng& rng);
  Var step(Tape& tape, Var x, Var h) const;
};

struct Gaussian {
  Var mu;
  Var sigma;
};

// mu = linear; sigma = softplus(linear) + 1e-4.
struct GaussianHead {
  Linear mu;
  Linear sigma;
  static constexpr double kSigmaFloor = 1e-4;

  GaussianHead() = default;
  GaussianHead(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
  Gaussian operator()(Tape& tape, Var x) const;
};

// Per-agent feature map over groups of K agents stacked as rows
// ((B*K) x in -> (B*K) x out).
class InteractionBlock {
 public:
  virtual ~InteractionBlock() = default;
  virtual Var operator()(Tape& tape, Var nodes, int K) const = 0;
  virtual int out_dim() const = 0;
};

// One round of message passing on the complete directed graph of each group:
// e_kj = f_e([v_k, v_j]) (one tanh hidden layer, linear output),
// o_k = f_v(sum_{j != k} e_kj).
class GnnBlock : public InteractionBlock {
 public:
  GnnBlock(ParamStore& store, const std::string& name, int in, int edge_hidden, int msg,
           const std::vector<int>& node_sizes, Rng& rng);
  Var operator()(Tape& tape, Var nodes, int K) const override;
  // Messages before f_v, for tests.
  Var aggregate(Tape& tape, Var nodes, int K) const;
  int out_dim() const override { return f_v_.out_dim(); }

 private:
  int w_recv_ = -1, w_send_ = -1, b_edge_ = -1;
  Linear edge_out_;
  Mlp f_v_;
  int in_ = 0;
};

// MLP over the flattened K x in features of each group, reshaped back to
// K rows of `out` features. Used where the graph block is ablated.
class FlatBlock : public InteractionBlock {
 public:
  FlatBlock(ParamStore& store, const std::string& name, int K, int in, int hidden, int out,
            Rng& rng);
  Var operator()(Tape& tape, Var nodes, int K) const override;
  int out_dim() const override { return out_; }

 private:
  Mlp mlp_;
  int K_ = 0;
  int in_ = 0;
  int out_ = 0;
};

// Propensity classifier: logit = MLP_a(grad_reverse(z)) when use_grl.
struct TreatmentHead {
  Mlp mlp;
  bool use_grl = true;
  double grl_scale = 1.0;

  TreatmentHead() = default;
  TreatmentHead(ParamStore& store, const std::string& name, int in, int hidden, Rng& rng);
  Var logits(Tape& tape, Var z) const;
  Var probability(Tape& tape, Var z) const { return ad::sigmoid(logits(tape, z)); }
};

}  // namespace tgvcrn::nn

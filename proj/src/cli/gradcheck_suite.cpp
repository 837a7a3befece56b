#include "tgvcrn/cli/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include "tgvcrn/ad/gradcheck.hpp"
#include "tgvcrn/boid/dataset.hpp"
#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"
#include "tgvcrn/model/model.hpp"
#include "tgvcrn/model/theory.hpp"
#include "tgvcrn/nn/layers.hpp"
#include "tgvcrn/train/loss.hpp"

namespace tgvcrn::cli {
namespace {

using ad::Op;
using ad::Tape;
using ad::Tensor;
using ad::Var;

constexpr double kOpTol = 1e-4;
constexpr double kModelTol = 1e-3;

Tensor uniform(int r, int c, double lo, double hi, Rng& rng) {
  Tensor t(r, c);
  for (int i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Away from zero, random sign.
Tensor signed_away(int r, int c, Rng& rng) {
  Tensor t(r, c);
  for (int i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(0.2, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  }
  return t;
}

// Reduces any output to a scalar with fixed random weights.
Var weigh(Tape& tape, Var out, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(out * tape.constant(uniform(out.rows(), out.cols(), -1.0, 1.0, rng)));
}

struct Suite {
  explicit Suite(std::uint64_t seed) : rng(seed) {}
  Rng rng;
  std::uint64_t next_seed = 1000;
  GradcheckReport report;
  std::set<Op> seen;

  void add(const std::string& kind, const std::string& name, const ad::GradcheckResult& r,
           double tol) {
    report.rows.push_back({kind, name, r.max_rel, r.entries, tol, r.entries > 0 && r.max_rel < tol});
  }

  void op(Op o, std::vector<Tensor> inputs,
          const std::function<Var(Tape&, const std::vector<Var>&)>& f) {
    const std::uint64_t s = next_seed++;
    seen.insert(o);
    auto loss = [&](Tape& tape, const std::vector<Var>& in) {
      Var out = f(tape, in);
      return out.rows() == 1 && out.cols() == 1 ? out * 1.3 : weigh(tape, out, s);
    };
    add("op", std::string(ad::op_name(o)), ad::check_input_gradients(inputs, loss), kOpTol);
  }
};

// Reversal rule: analytic gradient equals -scale times the forward difference.
ad::GradcheckResult check_reversal(Rng& rng) {
  const double scale = 0.7;
  const Tensor x0 = uniform(3, 2, -1.0, 1.0, rng);
  const Tensor w = uniform(3, 2, -1.0, 1.0, rng);
  auto forward = [&](const Tensor& x, Tape& tape, Var* leaf) {
    Var v = leaf ? *leaf : tape.constant(x);
    return ad::sum(ad::tanh(ad::grad_reverse(v, scale)) * tape.constant(w));
  };
  ad::ParamStore store;
  store.add("x", x0);
  Tape tape(&store);
  Var leaf = tape.param(0);
  tape.backward(forward(x0, tape, &leaf));
  const Tensor analytic = store.grad(0);
  ad::GradcheckResult r;
  const double h = 1e-5;
  for (int i = 0; i < x0.size(); ++i) {
    Tensor xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    Tape tp(nullptr), tm(nullptr);
    const double num = (forward(xp, tp, nullptr).value().item() -
                        forward(xm, tm, nullptr).value().item()) / (2 * h);
    const double expect = -scale * num;
    const double denom = std::max({std::abs(analytic[i]), std::abs(expect), 1e-6});
    r.max_rel = std::max(r.max_rel, std::abs(analytic[i] - expect) / denom);
    r.max_abs = std::max(r.max_abs, std::abs(analytic[i] - expect));
    ++r.entries;
  }
  return r;
}

void op_rows(Suite& s) {
  Rng& g = s.rng;
  using V = const std::vector<Var>&;
  s.op(Op::MatMul, {uniform(3, 4, -1, 1, g), uniform(4, 2, -1, 1, g)},
       [](Tape&, V in) { return ad::matmul(in[0], in[1]); });
  s.op(Op::Add, {uniform(3, 4, -1, 1, g), uniform(3, 4, -1, 1, g)},
       [](Tape&, V in) { return in[0] + in[1]; });
  s.op(Op::Sub, {uniform(3, 4, -1, 1, g), uniform(3, 4, -1, 1, g)},
       [](Tape&, V in) { return in[0] - in[1]; });
  s.op(Op::Mul, {uniform(3, 4, -1, 1, g), uniform(3, 4, -1, 1, g)},
       [](Tape&, V in) { return in[0] * in[1]; });
  s.op(Op::Div, {uniform(3, 4, -1, 1, g), uniform(3, 4, 0.5, 2, g)},
       [](Tape&, V in) { return in[0] / in[1]; });
  s.op(Op::AddBias, {uniform(3, 4, -1, 1, g), uniform(1, 4, -1, 1, g)},
       [](Tape&, V in) { return ad::add_bias(in[0], in[1]); });
  s.op(Op::Scale, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return in[0] * 1.7; });
  s.op(Op::AddScalar, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return ad::square(in[0] + 0.3); });
  s.op(Op::Tanh, {uniform(3, 4, -2, 2, g)}, [](Tape&, V in) { return ad::tanh(in[0]); });
  s.op(Op::Sigmoid, {uniform(3, 4, -2, 2, g)}, [](Tape&, V in) { return ad::sigmoid(in[0]); });
  s.op(Op::Softplus, {uniform(3, 4, -2, 2, g)}, [](Tape&, V in) { return ad::softplus(in[0]); });
  s.op(Op::Exp, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return ad::exp(in[0]); });
  s.op(Op::Log, {uniform(3, 4, 0.5, 2, g)}, [](Tape&, V in) { return ad::log(in[0]); });
  s.op(Op::Square, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return ad::square(in[0]); });
  s.op(Op::Neg, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return -in[0]; });
  s.op(Op::Sin, {uniform(3, 4, -3, 3, g)}, [](Tape&, V in) { return ad::sin(in[0]); });
  s.op(Op::Cos, {uniform(3, 4, -3, 3, g)}, [](Tape&, V in) { return ad::cos(in[0]); });
  s.op(Op::Sqrt, {uniform(3, 4, 0.5, 2, g)}, [](Tape&, V in) { return ad::sqrt(in[0]); });
  s.op(Op::Abs, {signed_away(3, 4, g)}, [](Tape&, V in) { return ad::abs(in[0]); });
  s.op(Op::Atan2, {uniform(3, 4, -1, 1, g), uniform(3, 4, 0.3, 1, g)},
       [](Tape&, V in) { return ad::atan2(in[0], in[1]); });
  s.op(Op::Clamp, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return ad::clamp(in[0], -0.5, 0.5); });
  s.op(Op::ConcatCols, {uniform(3, 2, -1, 1, g), uniform(3, 3, -1, 1, g)},
       [](Tape&, V in) { return ad::concat_cols({in[0], in[1]}); });
  s.op(Op::SliceCols, {uniform(3, 5, -1, 1, g)}, [](Tape&, V in) { return ad::slice_cols(in[0], 1, 3); });
  s.op(Op::Reshape, {uniform(4, 3, -1, 1, g)}, [](Tape&, V in) { return ad::reshape(in[0], 2, 6); });
  s.op(Op::Sum, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return ad::sum(in[0]); });
  s.op(Op::Mean, {uniform(3, 4, -1, 1, g)}, [](Tape&, V in) { return ad::mean(in[0]); });
  s.op(Op::SegmentMean, {uniform(6, 3, -1, 1, g)},
       [](Tape&, V in) { return ad::segment_mean(in[0], 3); });
  s.op(Op::SegmentRepeat, {uniform(2, 3, -1, 1, g)},
       [](Tape&, V in) { return ad::segment_repeat(in[0], 3); });
  {
    const Tensor blocks = uniform(1, 18, -1, 1, g);
    auto b = std::make_shared<const std::vector<double>>(blocks.values().begin(), blocks.values().end());
    s.op(Op::SegmentMatmul, {uniform(6, 2, -1, 1, g)},
         [b](Tape&, V in) { return ad::segment_matmul(b, in[0], 3); });
  }
  s.op(Op::PairTanhSum, {uniform(6, 4, -1, 1, g), uniform(6, 4, -1, 1, g)},
       [](Tape&, V in) { return ad::pair_tanh_sum(in[0], in[1], 3); });
  s.op(Op::GaussianSample, {uniform(3, 4, -1, 1, g), uniform(3, 4, 0.5, 1.5, g)},
       [](Tape&, V in) {
         Rng noise(7);
         return ad::gaussian_sample(in[0], in[1], noise);
       });
  s.op(Op::KlDiagGauss,
       {uniform(3, 4, -1, 1, g), uniform(3, 4, 0.5, 1.5, g), uniform(3, 4, -1, 1, g),
        uniform(3, 4, 0.5, 1.5, g)},
       [](Tape&, V in) { return ad::kl_diag_gauss(in[0], in[1], in[2], in[3]); });
  s.seen.insert(Op::GradReverse);
  s.add("op", std::string(ad::op_name(Op::GradReverse)), check_reversal(g), kOpTol);
  s.op(Op::BceWithLogits, {uniform(3, 4, -2, 2, g), uniform(3, 4, 0, 1, g)},
       [](Tape&, V in) { return ad::bce_with_logits(in[0], in[1]); });
  s.op(Op::GaussianNll,
       {uniform(3, 4, -1, 1, g), uniform(3, 4, -1, 1, g), uniform(3, 4, 0.5, 1.5, g)},
       [](Tape&, V in) { return ad::gaussian_nll(in[0], in[1], in[2]); });
}

void block_rows(Suite& s) {
  Rng& g = s.rng;
  auto check_block = [&](const std::string& name, ad::ParamStore& store, const Tensor& x,
                         const std::function<Var(Tape&, Var)>& f) {
    const std::uint64_t seed = s.next_seed++;
    auto loss = [&](Tape& tape) { return weigh(tape, f(tape, tape.constant(x)), seed); };
    s.add("block", name, ad::check_param_gradients(store, loss), kOpTol);
  };
  {
    ad::ParamStore st;
    nn::Linear l(st, "lin", 4, 3, g);
    check_block("linear", st, uniform(5, 4, -1, 1, g), [&](Tape& t, Var x) { return l(t, x); });
  }
  {
    ad::ParamStore st;
    nn::Mlp m(st, "mlp", {4, 6, 3}, nn::Activation::Sigmoid, g);
    check_block("mlp", st, uniform(5, 4, -1, 1, g), [&](Tape& t, Var x) { return m(t, x); });
  }
  {
    ad::ParamStore st;
    nn::GruCell cell(st, "gru", 3, 4, g);
    const Tensor h0 = uniform(5, 4, -1, 1, g);
    check_block("gru", st, uniform(5, 3, -1, 1, g), [&](Tape& t, Var x) {
      Var h = cell.step(t, x, t.constant(h0));
      return cell.step(t, x * 0.5, h);
    });
  }
  {
    ad::ParamStore st;
    nn::GaussianHead head(st, "gauss", 4, 3, g);
    const Tensor target = uniform(5, 3, -1, 1, g);
    check_block("gaussian_head", st, uniform(5, 4, -1, 1, g), [&](Tape& t, Var x) {
      const nn::Gaussian q = head(t, x);
      return ad::gaussian_nll(t.constant(target), q.mu, q.sigma);
    });
  }
  {
    ad::ParamStore st;
    nn::GnnBlock gnn(st, "gnn", 3, 5, 4, {6}, g);
    check_block("gnn", st, uniform(6, 3, -1, 1, g), [&](Tape& t, Var x) { return gnn(t, x, 3); });
  }
  {
    ad::ParamStore st;
    nn::FlatBlock flat(st, "flat", 3, 3, 5, 4, g);
    check_block("flat", st, uniform(6, 3, -1, 1, g), [&](Tape& t, Var x) { return flat(t, x, 3); });
  }
  {
    ad::ParamStore st;
    nn::TreatmentHead head(st, "treat", 3, 5, g);
    head.use_grl = false;
    const Tensor labels = uniform(4, 1, 0, 1, g);
    check_block("treatment_head", st, uniform(4, 3, -1, 1, g), [&](Tape& t, Var x) {
      return ad::bce_with_logits(head.logits(t, x), t.constant(labels));
    });
  }

  // Covariate step and order parameter, through their inputs.
  boid::SimConfig sim;
  sim.K = 4;
  const int B = 2, K = sim.K;
  Tensor x(B * K, boid::kLocalFeatures);
  for (int r = 0; r < B * K; ++r) {
    const double a = g.uniform(-3.0, 3.0);
    x(r, 0) = g.uniform(-2.5, 2.5);
    x(r, 1) = g.uniform(-2.5, 2.5);
    x(r, 2) = sim.speed * std::cos(a);
    x(r, 3) = sim.speed * std::sin(a);
    x(r, 4) = g.uniform(-0.3, 0.3);
  }
  const Tensor turn = uniform(B * K, 1, -0.3, 0.3, g);
  const Tensor treated = Tensor::from_rows({{0.0}, {1.0}});
  {
    const std::uint64_t seed = s.next_seed++;
    auto loss = [&](Tape& tape, const std::vector<Var>& in) {
      const model::TheoryStep st = model::theory_x(sim, in[0], in[1], treated, K);
      return weigh(tape, st.x_local, seed) +
             ad::sum(st.x_global * tape.constant(Tensor::from_rows({{0.5}, {-0.8}})));
    };
    s.add("block", "theory_step", ad::check_input_gradients({x, turn}, loss), kOpTol);
  }
  {
    auto loss = [&](Tape& tape, const std::vector<Var>& in) {
      Var hx = ad::cos(in[2]), hy = ad::sin(in[2]);
      return ad::sum(model::angular_momentum(in[0], in[1], hx, hy, K) *
                     tape.constant(Tensor::from_rows({{0.7}, {-1.1}})));
    };
    s.add("block", "angular_momentum",
          ad::check_input_gradients(
              {uniform(B * K, 1, -2, 2, g), uniform(B * K, 1, -2, 2, g), uniform(B * K, 1, -3, 3, g)},
              loss),
          kOpTol);
  }
}

void model_rows(Suite& s) {
  boid::SimConfig sim;
  sim.K = 3;
  sim.T = 5;
  sim.T_b = 3;
  sim.ti_first = 3;
  sim.ti_last = 4;
  std::vector<boid::TrajectorySample> eps{boid::simulate(sim, 11, 3), boid::simulate(sim, 12, {})};
  const model::Batch batch = model::Batch::from_episodes(eps);
  for (model::Variant v : model::all_variants()) {
    model::ModelConfig mc;
    mc.variant = v;
    mc.hidden = 4;
    mc.latent = 2;
    mc.mlp_hidden = 6;
    mc.edge_hidden = 5;
    mc.message = 5;
    mc.rnn_hidden = 6;
    // Finite differences cannot see a reversed gradient; the reversal rule
    // has its own row.
    mc.use_grl = false;
    model::Model m(mc, sim, 5);
    const train::LossWeights w{0.3, 0.5, 0.7};
    auto loss = [&](Tape& tape) {
      Rng noise(99);
      const auto r = m.rollout(tape, batch, {model::Mode::Train, false}, noise);
      return train::loss_total(tape, m, r, batch, w).total;
    };
    s.add("model", "end_to_end " + model::variant_name(v),
          ad::check_param_gradients(m.params(), loss), kModelTol);
  }
}

}  // namespace

bool GradcheckReport::all_pass() const {
  for (const auto& r : rows) {
    if (!r.pass) return false;
  }
  return !rows.empty() && ops_covered == ops_total;
}

std::optional<ad::Op> parse_op(const std::string& name) {
  for (Op o : ad::differentiable_ops()) {
    if (ad::op_name(o) == name) return o;
  }
  return std::nullopt;
}

GradcheckReport run_gradcheck_suite(std::uint64_t seed, std::optional<ad::Op> corrupt) {
  struct FaultGuard {
    explicit FaultGuard(std::optional<Op> op) { Tape::set_backward_fault(op); }
    ~FaultGuard() { Tape::set_backward_fault(std::nullopt); }
  } guard(corrupt);
  Suite s(seed);
  op_rows(s);
  block_rows(s);
  model_rows(s);
  s.report.ops_total = static_cast<int>(ad::differentiable_ops().size());
  for (Op o : ad::differentiable_ops()) s.report.ops_covered += s.seen.count(o) ? 1 : 0;
  return s.report;
}

void print_gradcheck_table(std::ostream& out, const GradcheckReport& r) {
  out << std::left << std::setw(7) << "kind" << std::setw(28) << "name" << std::setw(14)
      << "max_rel" << std::setw(9) << "entries" << std::setw(10) << "tol" << "result\n";
  for (const auto& row : r.rows) {
    std::ostringstream rel;
    rel << std::scientific << std::setprecision(3) << row.max_rel;
    std::ostringstream tol;
    tol << std::scientific << std::setprecision(0) << row.threshold;
    out << std::left << std::setw(7) << row.kind << std::setw(28) << row.name << std::setw(14)
        << rel.str() << std::setw(9) << row.entries << std::setw(10) << tol.str()
        << (row.pass ? "PASS" : "FAIL") << "\n";
  }
  out << "op coverage " << r.ops_covered << "/" << r.ops_total << "\n";
}

void write_gradcheck_csv(const std::string& path, const GradcheckReport& r) {
  std::ostringstream o;
  o << "kind,name,max_rel,entries,threshold,pass\n";
  for (const auto& row : r.rows) {
    o << row.kind << ',' << row.name << ',' << io::format_double(row.max_rel) << ','
      << row.entries << ',' << io::format_double(row.threshold) << ',' << (row.pass ? 1 : 0)
      << '\n';
  }
  io::write_text(path, o.str());
}

}  // namespace tgvcrn::cli

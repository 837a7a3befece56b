#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "tgvcrn/ad/gradcheck.hpp"
#include "tgvcrn/ad/params.hpp"
#include "tgvcrn/ad/tape.hpp"
#include "tgvcrn/common/errors.hpp"

using namespace tgvcrn;
using namespace tgvcrn::ad;

namespace {

Tensor rand_tensor(int r, int c, Rng& g, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (int i = 0; i < t.size(); ++i) t[i] = g.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("matmul against a triple loop") {
  Rng g(1);
  Tape tape;
  const Tensor A = rand_tensor(3, 4, g), B = rand_tensor(4, 5, g);
  const Tensor C = matmul(tape.constant(A), tape.constant(B)).value();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += A(i, k) * B(k, j);
      CHECK(C(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  }
}

TEST_CASE("elementwise ops match the scalar library") {
  Rng g(2);
  Tape tape;
  const Tensor x = rand_tensor(4, 3, g, 0.2, 2.0);
  Var v = tape.constant(x);
  struct Case {
    Var out;
    double (*f)(double);
  };
  const Case cases[] = {
      {ad::tanh(v), [](double a) { return std::tanh(a); }},
      {ad::sigmoid(v), [](double a) { return 1.0 / (1.0 + std::exp(-a)); }},
      {ad::softplus(v), [](double a) { return std::log1p(std::exp(a)); }},
      {ad::exp(v), [](double a) { return std::exp(a); }},
      {ad::log(v), [](double a) { return std::log(a); }},
      {ad::sqrt(v), [](double a) { return std::sqrt(a); }},
      {ad::sin(v), [](double a) { return std::sin(a); }},
      {ad::cos(v), [](double a) { return std::cos(a); }},
      {ad::square(v), [](double a) { return a * a; }},
      {ad::abs(-v), [](double a) { return a; }},
  };
  for (const auto& c : cases) {
    for (int i = 0; i < x.size(); ++i) CHECK(c.out.value()[i] == doctest::Approx(c.f(x[i])).epsilon(1e-14));
  }
}

TEST_CASE("tanh stays accurate and saturates cleanly") {
  Tape tape;
  Tensor x(1, 7);
  const double vals[] = {-40.0, -5.0, -1e-9, 0.0, 1e-9, 0.7, 800.0};
  for (int i = 0; i < 7; ++i) x[i] = vals[i];
  const Tensor y = ad::tanh(tape.constant(x)).value();
  for (int i = 0; i < 7; ++i) CHECK(std::abs(y[i] - std::tanh(vals[i])) < 1e-15);
}

TEST_CASE("segment and pair ops against explicit loops") {
  Rng g(3);
  Tape tape;
  const int B = 2, K = 3;
  const Tensor x = rand_tensor(B * K, 2, g);
  const Tensor m = segment_mean(tape.constant(x), K).value();
  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < 2; ++c) {
      const double s = (x(b * K, c) + x(b * K + 1, c) + x(b * K + 2, c)) / 3.0;
      CHECK(m(b, c) == doctest::Approx(s).epsilon(1e-14));
    }
  }
  const Tensor rep = segment_repeat(tape.constant(m), K).value();
  for (int r = 0; r < B * K; ++r) CHECK(rep(r, 1) == m(r / K, 1));

  auto blocks = std::make_shared<std::vector<double>>(B * K * K);
  for (auto& v : *blocks) v = g.uniform(-1, 1);
  const Tensor sm = segment_matmul(blocks, tape.constant(x), K).value();
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < K; ++i) {
      double s = 0.0;
      for (int j = 0; j < K; ++j) s += (*blocks)[(b * K + i) * K + j] * x(b * K + j, 0);
      CHECK(sm(b * K + i, 0) == doctest::Approx(s).epsilon(1e-13));
    }
  }

  const Tensor recv = rand_tensor(B * K, 4, g), send = rand_tensor(B * K, 4, g);
  const Tensor p = pair_tanh_sum(tape.constant(recv), tape.constant(send), K).value();
  for (int b = 0; b < B; ++b) {
    for (int k = 0; k < K; ++k) {
      for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int j = 0; j < K; ++j) {
          if (j != k) s += std::tanh(recv(b * K + k, c) + send(b * K + j, c));
        }
        CHECK(p(b * K + k, c) == doctest::Approx(s).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("fused losses against closed forms") {
  Tape tape;
  // KL(N(0,1) || N(1,2)) = log 2 + (1 + 1) / 8 - 1/2
  const double kl = kl_diag_gauss(tape.constant(Tensor::scalar(0.0)), tape.constant(Tensor::scalar(1.0)),
                                  tape.constant(Tensor::scalar(1.0)), tape.constant(Tensor::scalar(2.0)))
                        .value()
                        .item();
  CHECK(kl == doctest::Approx(std::log(2.0) + 0.25 - 0.5).epsilon(1e-14));
  // BCE at logit 0 is log 2 whatever the label.
  Tensor zeros(1, 3), labels = Tensor::from_rows({{0.0, 1.0, 0.3}});
  CHECK(bce_with_logits(tape.constant(zeros), tape.constant(labels)).value().item() ==
        doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-14));
  // Large logits do not overflow.
  const double big = bce_with_logits(tape.constant(Tensor::scalar(800.0)),
                                     tape.constant(Tensor::scalar(0.0))).value().item();
  CHECK(big == doctest::Approx(800.0));
  // -log N(1; 0, 2) = 1/8 + log 2 + log(2 pi)/2
  const double nll = gaussian_nll(tape.constant(Tensor::scalar(1.0)), tape.constant(Tensor::scalar(0.0)),
                                  tape.constant(Tensor::scalar(2.0))).value().item();
  CHECK(nll == doctest::Approx(0.125 + std::log(2.0) + 0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("reparameterized sample is mu + sigma * eps with the rng's normals") {
  Rng g(4), replay(4);
  Tape tape;
  const Tensor mu = rand_tensor(2, 3, g), sigma = rand_tensor(2, 3, g, 0.1, 1.0);
  Rng noise(9), noise2(9);
  const Tensor s = gaussian_sample(tape.constant(mu), tape.constant(sigma), noise).value();
  for (int i = 0; i < s.size(); ++i) {
    CHECK(s[i] == doctest::Approx(mu[i] + sigma[i] * noise2.normal()).epsilon(1e-15));
  }
}

TEST_CASE("domain and shape violations are reported") {
  Tape tape;
  Var a = tape.constant(Tensor(2, 3, 1.0));
  Var b = tape.constant(Tensor(3, 2, 1.0));
  CHECK_THROWS_AS(a + b, DimensionError);
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
  CHECK_THROWS_AS(ad::log(tape.constant(Tensor::scalar(0.0))), NumericError);
  CHECK_THROWS_AS(ad::sqrt(tape.constant(Tensor::scalar(-1.0))), NumericError);
  CHECK_THROWS_AS(a / tape.constant(Tensor(2, 3, 0.0)), NumericError);
  CHECK_THROWS_AS(ad::exp(tape.constant(Tensor::scalar(1000.0))), NumericError);
  CHECK_THROWS_AS(grad_reverse(a, 0.0), ContractError);
  Rng r(1);
  CHECK_THROWS_AS(gaussian_sample(a, tape.constant(Tensor(2, 3, 0.0)), r), NumericError);
  tape.allow_degenerate_sigma = true;
  const Var degenerate = gaussian_sample(a, tape.constant(Tensor(2, 3, 0.0)), r);
  CHECK(degenerate.value() == a.value());
  CHECK_THROWS_AS(tape.backward(a), ContractError);
  CHECK_THROWS_AS(slice_cols(a, 2, 2), DimensionError);
  CHECK_THROWS_AS(reshape(a, 4, 2), DimensionError);
  CHECK_THROWS_AS(segment_mean(a, 4), DimensionError);
}

TEST_CASE("mixing tapes is rejected") {
  Tape t1, t2;
  CHECK_THROWS_AS(t1.constant(Tensor::scalar(1.0)) + t2.constant(Tensor::scalar(1.0)), ContractError);
}

TEST_CASE("grad_reverse is the identity forward and negates scaled gradients") {
  ParamStore store;
  store.add("x", Tensor::from_rows({{0.3, -0.2}}));
  Tape tape(&store);
  Var x = tape.param(0);
  Var y = grad_reverse(x, 0.5);
  CHECK(y.value() == x.value());
  tape.backward(sum(y * 3.0));
  CHECK(store.grad(0)[0] == doctest::Approx(-1.5));
  CHECK(store.grad(0)[1] == doctest::Approx(-1.5));
}

TEST_CASE("parameter gradients accumulate across tapes") {
  ParamStore store;
  store.add("w", Tensor::from_rows({{2.0}}));
  for (int i = 0; i < 3; ++i) {
    Tape tape(&store);
    Var w = tape.param("w");
    tape.backward(square(w));
  }
  CHECK(store.grad(0)[0] == doctest::Approx(12.0));
  store.zero_grads();
  CHECK(store.grad(0)[0] == 0.0);
  CHECK_FALSE(store.has_grad(0));
}

TEST_CASE("reused parameter contributes both paths") {
  ParamStore store;
  store.add("w", Tensor::from_rows({{3.0}}));
  Tape tape(&store);
  Var w = tape.param(0);
  Var w2 = tape.param(0);
  CHECK(w.id == w2.id);
  tape.backward(w * w2 + w);  // d/dw (w^2 + w) = 7
  CHECK(store.grad(0)[0] == doctest::Approx(7.0));
}

TEST_CASE("adam step against the textbook update") {
  ParamStore store;
  store.add("p", Tensor::from_rows({{1.0, -2.0}}));
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  double p[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 5; ++t) {
    store.zero_grads();
    const double g[2] = {0.5 * t, -0.25};
    store.accumulate_grad(0, Tensor::from_rows({{g[0], g[1]}}));
    store.adam_step(cfg);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      p[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(store.value(0)[i] == doctest::Approx(p[i]).epsilon(1e-14));
    }
  }
  CHECK(store.step_count() == 5);
  store.zero_grads();
  CHECK_THROWS_AS(store.adam_step(cfg), ContractError);
}

TEST_CASE("gradient clipping helpers") {
  ParamStore store;
  store.add("a", Tensor::from_rows({{0.0, 0.0}}));
  store.add("b", Tensor::scalar(0.0));
  store.accumulate_grad(0, Tensor::from_rows({{3.0, 0.0}}));
  store.accumulate_grad(1, Tensor::scalar(4.0));
  CHECK(store.grad_norm() == doctest::Approx(5.0));
  store.scale_grads(0.5);
  CHECK(store.grad_norm() == doctest::Approx(2.5));
}

TEST_CASE("param store save and load round-trip, including optimizer state") {
  namespace fs = std::filesystem;
  const fs::path d = fs::temp_directory_path() / "tgvcrn_ad_params";
  fs::create_directories(d);
  Rng g(5);
  ParamStore a;
  a.add("x", rand_tensor(2, 3, g));
  a.add("y", rand_tensor(1, 4, g));
  a.mark_all_grads();
  a.accumulate_grad(0, rand_tensor(2, 3, g));
  a.adam_step({});
  a.save(d / "p.txt", d / "p.f64", "tagged");
  ParamStore b;
  b.add("x", Tensor(2, 3));
  b.add("y", Tensor(1, 4));
  CHECK(b.load(d / "p.txt", d / "p.f64") == "tagged");
  CHECK(a == b);
  ParamStore c;
  c.add("x", Tensor(2, 3));
  c.add("z", Tensor(1, 4));
  CHECK_THROWS_AS(c.load(d / "p.txt", d / "p.f64"), ContractError);
}

TEST_CASE("property: random compositions agree with finite differences") {
  Rng g(6);
  for (int trial = 0; trial < 25; ++trial) {
    const int r = 1 + static_cast<int>(g.uniform_index(4));
    const int c = 1 + static_cast<int>(g.uniform_index(4));
    const int k = 1 + static_cast<int>(g.uniform_index(3));
    const Tensor x = rand_tensor(r, c, g), w = rand_tensor(c, k, g), bias = rand_tensor(1, k, g);
    const Tensor s = rand_tensor(r, k, g, 0.5, 1.5);
    const int pick = static_cast<int>(g.uniform_index(3));
    auto loss = [&](Tape&, const std::vector<Var>& in) {
      Var h = add_bias(matmul(in[0], in[1]), in[2]);
      switch (pick) {
        case 0: h = ad::tanh(h) * in[3]; break;
        case 1: h = ad::sigmoid(h) / in[3]; break;
        default: h = ad::softplus(h) + ad::square(in[3]); break;
      }
      return ad::mean(h) + 0.3 * ad::sum(ad::sin(h));
    };
    const auto res = check_input_gradients({x, w, bias, s}, loss);
    CHECK(res.max_rel < 1e-6);
  }
}

TEST_CASE("property: gradcheck detects an injected backward fault") {
  Rng g(7);
  const Tensor x = rand_tensor(3, 3, g);
  auto loss = [](Tape&, const std::vector<Var>& in) { return ad::sum(ad::tanh(in[0])); };
  CHECK(check_input_gradients({x}, loss).max_rel < 1e-6);
  Tape::set_backward_fault(Op::Tanh);
  const double faulty = check_input_gradients({x}, loss).max_rel;
  Tape::set_backward_fault(std::nullopt);
  CHECK(faulty > 0.1);
}

TEST_CASE("every differentiable op has a name and a distinct kind") {
  std::set<std::string> names;
  for (Op o : differentiable_ops()) names.insert(std::string(op_name(o)));
  CHECK(names.size() == differentiable_ops().size());
  CHECK(names.count("unknown") == 0);
}

#include "tgvcrn/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tgvcrn::ad {
namespace {

double eval(ParamStore& store, const LossFn& loss) {
  Tape tape(&store);
  return loss(tape).value().item();
}

}  // namespace

GradcheckResult check_param_gradients(ParamStore& store, const LossFn& loss,
                                      const GradcheckOptions& opt) {
  store.zero_grads();
  {
    Tape tape(&store);
    tape.backward(loss(tape));
  }
  std::vector<Tensor> analytic;
  for (int p = 0; p < store.size(); ++p) analytic.push_back(store.grad(p));
  store.zero_grads();

  GradcheckResult res;
  for (int p = 0; p < store.size(); ++p) {
    Tensor& v = store.value(p);
    const int n = v.size();
    const int stride =
        opt.max_entries_per_param > 0 ? std::max(1, n / opt.max_entries_per_param) : 1;
    for (int i = 0; i < n; i += stride) {
      const double orig = v[i];
      v[i] = orig + opt.h;
      const double up = eval(store, loss);
      v[i] = orig - opt.h;
      const double down = eval(store, loss);
      v[i] = orig;
      const double num = (up - down) / (2.0 * opt.h);
      const double a = analytic[p][i];
      const double err = std::abs(a - num);
      res.max_abs = std::max(res.max_abs, err);
      res.max_rel =
          std::max(res.max_rel, err / std::max({std::abs(a), std::abs(num), opt.floor}));
      ++res.entries;
    }
  }
  return res;
}

GradcheckResult check_input_gradients(const std::vector<Tensor>& inputs, const InputLossFn& loss,
                                      const GradcheckOptions& opt) {
  ParamStore store;
  for (std::size_t i = 0; i < inputs.size(); ++i) store.add("in" + std::to_string(i), inputs[i]);
  const int count = store.size();
  return check_param_gradients(
      store,
      [&](Tape& tape) {
        std::vector<Var> leaves;
        for (int i = 0; i < count; ++i) leaves.push_back(tape.param(i));
        return loss(tape, leaves);
      },
      opt);
}

}  // namespace tgvcrn::ad

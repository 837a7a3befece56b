#pragma once

#include <functional>
#include <vector>

#include "tgvcrn/ad/params.hpp"
#include "tgvcrn/ad/tape.hpp"

namespace tgvcrn::ad {

struct GradcheckResult {
  double max_rel = 0.0;  // max over entries of |a - n| / max(|a|, |n|, floor)
  double max_abs = 0.0;
  int entries = 0;
};

struct GradcheckOptions {
  double h = 1e-5;
  double floor = 1e-6;
  // Check at most this many entries per parameter (evenly strided); <= 0 = all.
  int max_entries_per_param = 0;
};

// Builds a scalar loss on the given tape. Called once for the analytic pass
// and twice per checked entry; must be deterministic.
using LossFn = std::function<Var(Tape&)>;

// Compares backward() against central differences for every parameter in the
// store. Parameter values are restored afterwards; gradients are cleared.
GradcheckResult check_param_gradients(ParamStore& store, const LossFn& loss,
                                      const GradcheckOptions& opt = {});

// Convenience for free-standing inputs: each tensor becomes a leaf that the
// builder receives in order.
using InputLossFn = std::function<Var(Tape&, const std::vector<Var>&)>;
GradcheckResult check_input_gradients(const std::vector<Tensor>& inputs, const InputLossFn& loss,
                                      const GradcheckOptions& opt = {});

}  // namespace tgvcrn::ad

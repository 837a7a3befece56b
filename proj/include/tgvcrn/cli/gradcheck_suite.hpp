#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tgvcrn/ad/tape.hpp"

namespace tgvcrn::cli {

struct GradcheckRow {
  std::string kind;  // "op", "block" or "model"
  std::string name;
  double max_rel = 0.0;
  int entries = 0;
  double threshold = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  int ops_covered = 0;
  int ops_total = 0;
  bool all_pass() const;
};

// Finite-difference checks of every differentiable tape operation, every
// network block and a tiny end-to-end model (K=3, T=5) of each variant.
// `corrupt` scales the backward rule of one operation kind for the run.
GradcheckReport run_gradcheck_suite(std::uint64_t seed, std::optional<ad::Op> corrupt = {});

void print_gradcheck_table(std::ostream& out, const GradcheckReport& r);
void write_gradcheck_csv(const std::string& path, const GradcheckReport& r);

std::optional<ad::Op> parse_op(const std::string& name);

}  // namespace tgvcrn::cli

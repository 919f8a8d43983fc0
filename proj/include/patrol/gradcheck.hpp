#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "patrol/tensor.hpp"

namespace patrol::ad {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  int checked = 0;
  bool passed(double tol = 1e-4) const { return max_rel_error < tol; }
};

// Compares analytic gradients against central finite differences
// (loss(p+h) - loss(p-h)) / 2h. `sample` > 0 limits the check to that many
// randomly chosen coordinates per parameter tensor; 0 checks all.
// Relative error uses max(|analytic|, |numeric|, 1e-6) as the denominator.
GradCheckResult finite_diff_check(const std::string& name,
                                  const std::function<Tensor()>& loss_fn,
                                  std::vector<Tensor> params, double h = 1e-4,
                                  int sample = 0, uint64_t seed = 0);

// The full suite guarding the differentiable core: every layer kind alone and
// the actor/critic stacks at a reduced spatial size, `seeds` times each.
// Writes one line per check; returns the worst result set.
std::vector<GradCheckResult> run_gradcheck_suite(std::ostream& out, int seeds = 20);

}  // namespace patrol::ad

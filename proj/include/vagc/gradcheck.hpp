#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vagc/graph.hpp"
#include "vagc/rng.hpp"

namespace vagc {

// Central differences (L(p+eps e_i) - L(p-eps e_i)) / (2 eps) for every
// parameter coordinate. The loss must be deterministic.
std::vector<Tensor> finite_diff(
    const std::function<double(const ParamPack&)>& loss, const ParamPack& params,
    double eps);

// max_i |a_i - b_i| / max(1, |a_i|, |b_i|) over all coordinates.
double max_rel_error(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

struct GradCheckCase {
  std::string name;
  double rel_error = 0.0;
  int param_count = 0;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  double max_error = 0.0;
  bool pass(double tol = 1e-6) const { return max_error < tol; }
};

// Compares reverse-mode gradients against central differences (eps=1e-5) on
// randomly built networks covering every primitive, on loss heads seeded
// through softmax / value-pick paths, and on full H-step unfolded rollout
// losses. `nets` is the total number of cases.
GradCheckReport run_gradcheck(uint64_t seed, int nets = 20);

}  // namespace vagc

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vagc/graph.hpp"

namespace vagc {

// Adam with bias correction. Defaults: beta1=0.9, beta2=0.999, eps=1e-8.
struct AdamState {
  std::vector<Tensor> m;  // first moments, shapes match the parameters
  std::vector<Tensor> v;  // second moments
  uint64_t step = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const ParamPack& params, double lr);
};

// One Adam update in place; increments state.step by exactly 1 and bumps the
// parameter version.
void adam_apply(ParamPack& params, std::span<const Tensor> grads, AdamState& state);

}  // namespace vagc

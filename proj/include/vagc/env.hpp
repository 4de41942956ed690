#pragma once

#include <vector>

#include "vagc/rng.hpp"
#include "vagc/tensor.hpp"

namespace vagc {

// The environment: additive deterministic dynamics x_{h+1} = x_h + alpha_h y_h
// over H steps, with a Gaussian terminal emission of variance sigma2 around
// x_H + alpha_H y_H. The emission enters through the terminal loss; rollouts
// carry the mean. Step indices are 1-based at this boundary.
struct EnvConfig {
  int H = 16;                   // horizon
  int A = 16;                   // selections per step
  int d = 2;                    // state/action dimension
  std::vector<double> alphas;   // H rates, alphas[h-1] is the rate at step h
  double sigma2 = 0.5;          // terminal variance; 0.5 makes the terminal
                                // loss the plain squared distance
  Tensor x1;                    // fixed initial state, shape [d]

  static EnvConfig make(int H, int A, int d);
  void validate() const;
};

struct Goal {
  Tensor value;  // an element of the training set, shape [d]
};

// (1/1, 1/2, ..., 1/H).
std::vector<double> default_rates(int H);

// x + alpha_h * y. Requires 1 <= h <= H.
Tensor transition(const Tensor& x, const Tensor& y, int h, const EnvConfig& cfg);

// 0 for h < H; ||x + alpha_H y - goal||^2 / (2 sigma2) at h = H.
double step_loss(const Tensor& x, const Tensor& y, int h, const Goal& goal,
                 const EnvConfig& cfg);

// Terminal emission with the Gaussian noise actually applied. Off the main
// rollout path; generated samples are the mean.
Tensor sample_terminal(const Tensor& x, const Tensor& y, const EnvConfig& cfg,
                       CounterRng& rng);

}  // namespace vagc

#include "vagc/env.hpp"

#include <cmath>

#include "vagc/errors.hpp"

namespace vagc {

std::vector<double> default_rates(int H) {
  if (H < 1) throw ConfigError("default_rates: horizon must be >= 1");
  std::vector<double> a(size_t(H));
  for (int h = 1; h <= H; ++h) a[size_t(h - 1)] = 1.0 / double(h);
  return a;
}

EnvConfig EnvConfig::make(int H, int A, int d) {
  EnvConfig cfg;
  cfg.H = H;
  cfg.A = A;
  cfg.d = d;
  cfg.alphas = default_rates(H);
  cfg.x1 = Tensor({d});
  cfg.validate();
  return cfg;
}

void EnvConfig::validate() const {
  if (H < 1) throw ConfigError("EnvConfig: H must be >= 1");
  if (A < 1) throw ConfigError("EnvConfig: A must be >= 1");
  if (d < 1) throw ConfigError("EnvConfig: d must be >= 1");
  if (int(alphas.size()) != H)
    throw ConfigError("EnvConfig: need exactly H rates, got " +
                      std::to_string(alphas.size()));
  for (double a : alphas)
    if (!(a > 0.0)) throw ConfigError("EnvConfig: rates must be positive");
  if (!(sigma2 > 0.0)) throw ConfigError("EnvConfig: sigma2 must be positive");
  if (x1.size() != d) throw ConfigError("EnvConfig: x1 must have shape [d]");
}

namespace {
double rate_at(const EnvConfig& cfg, int h) {
  if (h < 1 || h > cfg.H)
    throw IndexError("step " + std::to_string(h) + " outside [1," +
                     std::to_string(cfg.H) + "]");
  return cfg.alphas[size_t(h - 1)];
}
}  // namespace

Tensor transition(const Tensor& x, const Tensor& y, int h, const EnvConfig& cfg) {
  if (x.size() != cfg.d || y.size() != cfg.d)
    throw ConfigError("transition: state/action must have shape [d]");
  double a = rate_at(cfg, h);
  Tensor out = x;
  for (int i = 0; i < out.size(); ++i) out[i] += a * y[i];
  return out;
}

double step_loss(const Tensor& x, const Tensor& y, int h, const Goal& goal,
                 const EnvConfig& cfg) {
  rate_at(cfg, h);
  if (h < cfg.H) return 0.0;
  double aH = cfg.alphas[size_t(cfg.H - 1)];
  double s = 0.0;
  for (int i = 0; i < cfg.d; ++i) {
    double diff = x[i] + aH * y[i] - goal.value[i];
    s += diff * diff;
  }
  return s / (2.0 * cfg.sigma2);
}

Tensor sample_terminal(const Tensor& x, const Tensor& y, const EnvConfig& cfg,
                       CounterRng& rng) {
  Tensor out = transition(x, y, cfg.H, cfg);
  double sd = std::sqrt(cfg.sigma2);
  for (int i = 0; i < out.size(); ++i) out[i] += sd * rng.normal();
  return out;
}

}  // namespace vagc

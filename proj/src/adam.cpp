#include "vagc/adam.hpp"

#include <cmath>

namespace vagc {

AdamState AdamState::init(const ParamPack& params, double lr) {
  AdamState st;
  st.lr = lr;
  st.m.reserve(params.tensors.size());
  st.v.reserve(params.tensors.size());
  for (const Tensor& p : params.tensors) {
    st.m.emplace_back(p.shape());
    st.v.emplace_back(p.shape());
  }
  return st;
}

void adam_apply(ParamPack& params, std::span<const Tensor> grads, AdamState& st) {
  if (grads.size() != params.tensors.size() || st.m.size() != params.tensors.size())
    throw ConfigError("adam_apply: parameter/gradient/state count mismatch");
  st.step += 1;
  const double c1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (size_t k = 0; k < params.tensors.size(); ++k) {
    Tensor& p = params.tensors[k];
    const Tensor& g = grads[k];
    if (!p.same_shape(g))
      throw ConfigError("adam_apply: gradient " + std::to_string(k) + " shape mismatch");
    Tensor& m = st.m[k];
    Tensor& v = st.v[k];
    for (int i = 0; i < p.size(); ++i) {
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
      double mhat = m[i] / c1;
      double vhat = v[i] / c2;
      p[i] -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
    }
  }
  params.bump();
}

}  // namespace vagc

#include "subseg/optim.hpp"

#include <cmath>

#include "subseg/kern/kernels.hpp"

namespace subseg {

TrainState TrainState::for_model(const Model<float>& model, double base_lr, uint64_t warmup) {
  TrainState s;
  s.base_lr = base_lr;
  s.warmup_steps = warmup;
  s.m = model.zero_grads();
  s.v = model.zero_grads();
  return s;
}

double lr_schedule(double base_lr, uint64_t warmup_steps, uint64_t step) {
  if (warmup_steps == 0) warmup_steps = 1;
  double s = static_cast<double>(step);
  double w = static_cast<double>(warmup_steps);
  if (step <= warmup_steps) return base_lr * s / w;
  return base_lr * std::sqrt(w / s);
}

double clip_gradients(Parameters<float>& grads, double clip_norm) {
  double sq = 0.0;
  auto tensors = named_tensors(grads);
  for (auto& [name, t] : tensors)
    for (float g : t->v) sq += static_cast<double>(g) * static_cast<double>(g);
  double norm = std::sqrt(sq);
  if (clip_norm > 0.0 && norm > clip_norm && norm > 0.0) {
    float scale = static_cast<float>(clip_norm / norm);
    for (auto& [name, t] : tensors) kern::backend<float>().scale(t->data(), t->numel(), scale);
  }
  return norm;
}

double adam_step(Model<float>& model, TrainState& state, Parameters<float>& grads) {
  ++state.step;
  const double lr = lr_schedule(state);
  clip_gradients(grads, state.clip_norm);

  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  auto p = named_tensors(model.params());
  auto m = named_tensors(state.m);
  auto v = named_tensors(state.v);
  auto g = named_tensors(grads);
  for (size_t i = 0; i < p.size(); ++i) {
    float* pw = p[i].second->data();
    float* mw = m[i].second->data();
    float* vw = v[i].second->data();
    const float* gw = g[i].second->data();
    const size_t n = p[i].second->numel();
    for (size_t j = 0; j < n; ++j) {
      double grad = gw[j];
      double mj = b1 * mw[j] + (1.0 - b1) * grad;
      double vj = b2 * vw[j] + (1.0 - b2) * grad * grad;
      mw[j] = static_cast<float>(mj);
      vw[j] = static_cast<float>(vj);
      double mhat = mj / bc1;
      double vhat = vj / bc2;
      pw[j] = static_cast<float>(pw[j] - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
  return lr;
}

}  // namespace subseg

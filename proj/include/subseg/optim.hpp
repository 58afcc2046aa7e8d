#pragma once

#include <cstdint>

#include "subseg/model.hpp"

namespace subseg {

// Adam with inverse square-root learning-rate schedule.
struct TrainState {
  uint64_t step = 0;  // completed updates
  double base_lr = 1e-3;
  uint64_t warmup_steps = 4000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double clip_norm = 0.0;  // 0 disables clipping

  Parameters<float> m, v;  // first/second moments, shaped like the params

  static TrainState for_model(const Model<float>& model, double base_lr, uint64_t warmup);
};

// lr at `step` (1-based): linear warmup to base_lr, then base_lr*sqrt(w/step).
double lr_schedule(double base_lr, uint64_t warmup_steps, uint64_t step);
inline double lr_schedule(const TrainState& s) {
  return lr_schedule(s.base_lr, s.warmup_steps, s.step);
}

// Global gradient norm; clips in place when clip_norm > 0. Returns the norm.
double clip_gradients(Parameters<float>& grads, double clip_norm);

// One update: increments step, applies bias-corrected Adam at the scheduled
// rate. Returns the lr used.
double adam_step(Model<float>& model, TrainState& state, Parameters<float>& grads);

}  // namespace subseg

#pragma once

#include <vector>

#include "subseg/tensor.hpp"

namespace subseg {

// Negative log marginal over all blank-augmented alignments, forward
// algorithm in log space. log_probs rows must be normalized. Throws
// TargetTooLong when frames cannot carry the target.
template <class T>
T ctc_loss(const Tensor<T>& log_probs, const std::vector<int>& target, int blank);

// Same loss computed from raw logits (log-softmax applied internally) with
// the gradient w.r.t. the logits written to dlogits (overwritten, then
// scaled by grad_scale).
template <class T>
T ctc_loss_and_grad(const Tensor<T>& logits, const std::vector<int>& target, int blank,
                    Tensor<T>& dlogits, T grad_scale);

}  // namespace subseg

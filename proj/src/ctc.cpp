#include "subseg/ctc.hpp"

#include <cmath>
#include <limits>

#include "subseg/error.hpp"
#include "subseg/linalg.hpp"

namespace subseg {

namespace {

template <class T>
constexpr T kNegInf = -std::numeric_limits<T>::infinity();

template <class T>
inline T log_add(T a, T b) {
  if (a == kNegInf<T>) return b;
  if (b == kNegInf<T>) return a;
  T m = a > b ? a : b;
  return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

inline int prime_label(const std::vector<int>& target, size_t s, int blank) {
  return (s % 2 == 0) ? blank : target[s / 2];
}

template <class T>
void check_feasible(const Tensor<T>& lp, const std::vector<int>& target, int blank) {
  if (target.empty()) fail(Err::ShapeMismatch, "empty CTC target");
  size_t required = target.size();
  for (size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++required;
  if (lp.rows() < required)
    fail(Err::TargetTooLong, "target needs " + std::to_string(required) + " frames, only " +
                                 std::to_string(lp.rows()) + " available");
  for (int t : target)
    if (t < 0 || static_cast<size_t>(t) >= lp.cols() || t == blank)
      fail(Err::ShapeMismatch, "CTC target label out of range or blank");
}

// alpha[t][s]: log prob of consuming frames 0..t and sitting at l' state s.
template <class T>
std::vector<std::vector<T>> ctc_alpha(const Tensor<T>& lp, const std::vector<int>& target,
                                      int blank) {
  const size_t frames = lp.rows(), S = 2 * target.size() + 1;
  std::vector<std::vector<T>> alpha(frames, std::vector<T>(S, kNegInf<T>));
  alpha[0][0] = lp.at(0, static_cast<size_t>(blank));
  alpha[0][1] = lp.at(0, static_cast<size_t>(target[0]));
  for (size_t t = 1; t < frames; ++t) {
    for (size_t s = 0; s < S; ++s) {
      int lab = prime_label(target, s, blank);
      T acc = alpha[t - 1][s];
      if (s >= 1) acc = log_add(acc, alpha[t - 1][s - 1]);
      if (s >= 2 && lab != blank && lab != prime_label(target, s - 2, blank))
        acc = log_add(acc, alpha[t - 1][s - 2]);
      alpha[t][s] = acc == kNegInf<T> ? kNegInf<T> : acc + lp.at(t, static_cast<size_t>(lab));
    }
  }
  return alpha;
}

}  // namespace

template <class T>
T ctc_loss(const Tensor<T>& log_probs, const std::vector<int>& target, int blank) {
  check_feasible(log_probs, target, blank);
  auto alpha = ctc_alpha(log_probs, target, blank);
  const size_t S = 2 * target.size() + 1;
  T total = log_add(alpha.back()[S - 1], alpha.back()[S - 2]);
  return -total;
}

template <class T>
T ctc_loss_and_grad(const Tensor<T>& logits, const std::vector<int>& target, int blank,
                    Tensor<T>& dlogits, T grad_scale) {
  Tensor<T> lp = logits;
  for (size_t r = 0; r < lp.rows(); ++r) log_softmax_row(lp.row(r), lp.cols());
  check_feasible(lp, target, blank);

  const size_t frames = lp.rows(), S = 2 * target.size() + 1;
  auto alpha = ctc_alpha(lp, target, blank);

  // beta[t][s]: log prob of emitting frames t+1..end from state s (frame t
  // itself already emitted by alpha).
  std::vector<std::vector<T>> beta(frames, std::vector<T>(S, kNegInf<T>));
  beta[frames - 1][S - 1] = T(0);
  beta[frames - 1][S - 2] = T(0);
  for (size_t t = frames - 1; t-- > 0;) {
    for (size_t s = 0; s < S; ++s) {
      T acc = beta[t + 1][s] == kNegInf<T>
                  ? kNegInf<T>
                  : beta[t + 1][s] + lp.at(t + 1, static_cast<size_t>(prime_label(target, s, blank)));
      if (s + 1 < S && beta[t + 1][s + 1] != kNegInf<T>)
        acc = log_add(acc, beta[t + 1][s + 1] +
                               lp.at(t + 1, static_cast<size_t>(prime_label(target, s + 1, blank))));
      if (s + 2 < S) {
        int lab = prime_label(target, s + 2, blank);
        if (lab != blank && lab != prime_label(target, s, blank) &&
            beta[t + 1][s + 2] != kNegInf<T>)
          acc = log_add(acc, beta[t + 1][s + 2] + lp.at(t + 1, static_cast<size_t>(lab)));
      }
      beta[t][s] = acc;
    }
  }

  T log_total = log_add(alpha.back()[S - 1], alpha.back()[S - 2]);

  // dLoss/dlogits[t][k] = softmax[t][k] - sum_{s: l'_s = k} posterior_t(s)
  dlogits.shape = logits.shape;
  dlogits.v.assign(logits.numel(), T(0));
  for (size_t t = 0; t < frames; ++t) {
    T* drow = dlogits.row(t);
    const T* lprow = lp.row(t);
    for (size_t k = 0; k < lp.cols(); ++k) drow[k] = std::exp(lprow[k]);
    for (size_t s = 0; s < S; ++s) {
      T post = alpha[t][s] + beta[t][s] - log_total;
      if (post == kNegInf<T>) continue;
      drow[static_cast<size_t>(prime_label(target, s, blank))] -= std::exp(post);
    }
    kern::backend<T>().scale(drow, lp.cols(), grad_scale);
  }
  return -log_total;
}

template float ctc_loss(const Tensor<float>&, const std::vector<int>&, int);
template double ctc_loss(const Tensor<double>&, const std::vector<int>&, int);
template float ctc_loss_and_grad(const Tensor<float>&, const std::vector<int>&, int,
                                 Tensor<float>&, float);
template double ctc_loss_and_grad(const Tensor<double>&, const std::vector<int>&, int,
                                  Tensor<double>&, double);

}  // namespace subseg

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "subseg/ctc.hpp"
#include "subseg/error.hpp"
#include "subseg/rng.hpp"

using namespace subseg;

namespace {

// Random row-normalized log-probabilities.
Tensor<double> random_log_probs(Rng& rng, size_t frames, size_t vocab) {
  Tensor<double> lp({frames, vocab});
  for (size_t t = 0; t < frames; ++t) {
    double z = 0;
    std::vector<double> raw(vocab);
    for (auto& x : raw) {
      x = std::exp(rng.next_uniform(-2, 2));
      z += x;
    }
    for (size_t k = 0; k < vocab; ++k) lp.at(t, k) = std::log(raw[k] / z);
  }
  return lp;
}

// Brute-force marginal: enumerate every frame label sequence, collapse it
// (dedupe runs, drop blanks) and sum the probabilities matching the target.
double enumeration_loss(const Tensor<double>& lp, const std::vector<int>& target, int blank) {
  const size_t frames = lp.rows(), vocab = lp.cols();
  double total = 0.0;
  std::vector<size_t> path(frames, 0);
  while (true) {
    std::vector<int> collapsed;
    for (size_t t = 0; t < frames; ++t) {
      int lab = static_cast<int>(path[t]);
      if (t > 0 && path[t] == path[t - 1]) continue;
      if (lab != blank) collapsed.push_back(lab);
    }
    if (collapsed == target) {
      double p = 0;
      for (size_t t = 0; t < frames; ++t) p += lp.at(t, path[t]);
      total += std::exp(p);
    }
    size_t i = 0;
    while (i < frames && path[i] == vocab - 1) path[i++] = 0;
    if (i == frames) break;
    ++path[i];
  }
  return -std::log(total);
}

}  // namespace

TEST_CASE("one frame, one label") {
  Rng rng(1);
  Tensor<double> lp = random_log_probs(rng, 1, 4);
  const int blank = 0;
  double loss = ctc_loss(lp, {2}, blank);
  CHECK(loss == doctest::Approx(-lp.at(0, 2)).epsilon(1e-12));
}

TEST_CASE("two frames, one label: all three paths") {
  Rng rng(2);
  Tensor<double> lp = random_log_probs(rng, 2, 4);
  const int blank = 0, a = 1;
  double expect = -std::log(std::exp(lp.at(0, a) + lp.at(1, a)) +
                            std::exp(lp.at(0, a) + lp.at(1, blank)) +
                            std::exp(lp.at(0, blank) + lp.at(1, a)));
  CHECK(ctc_loss(lp, {a}, blank) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("uniform distribution gives positive loss") {
  Tensor<double> lp({3, 5});
  lp.fill(std::log(0.2));
  CHECK(ctc_loss(lp, {1, 2}, 0) > 0.0);
}

TEST_CASE("matches exhaustive enumeration on all small cases") {
  Rng rng(1234);
  const int blank = 0;
  const size_t vocab = 4;  // blank + 3 labels
  for (size_t frames = 1; frames <= 4; ++frames) {
    std::vector<std::vector<int>> targets{{1}, {2}, {1, 2}, {2, 1}, {1, 1}, {3, 3}};
    for (const auto& tgt : targets) {
      size_t required = tgt.size();
      for (size_t i = 1; i < tgt.size(); ++i) required += tgt[i] == tgt[i - 1];
      Tensor<double> lp = random_log_probs(rng, frames, vocab);
      if (frames < required) {
        CHECK_THROWS_AS(ctc_loss(lp, tgt, blank), Error);
        continue;
      }
      double mine = ctc_loss(lp, tgt, blank);
      double brute = enumeration_loss(lp, tgt, blank);
      CHECK(mine == doctest::Approx(brute).epsilon(1e-9));
    }
  }
}

TEST_CASE("loss from logits equals loss from normalized log-probs") {
  Rng rng(77);
  Tensor<double> logits({5, 6});
  for (auto& v : logits.v) v = rng.next_uniform(-3, 3);
  Tensor<double> lp = logits;
  for (size_t t = 0; t < lp.rows(); ++t) {
    double mx = lp.at(t, 0);
    for (size_t k = 0; k < lp.cols(); ++k) mx = std::max(mx, lp.at(t, k));
    double z = 0;
    for (size_t k = 0; k < lp.cols(); ++k) z += std::exp(lp.at(t, k) - mx);
    for (size_t k = 0; k < lp.cols(); ++k) lp.at(t, k) = lp.at(t, k) - mx - std::log(z);
  }
  Tensor<double> grad;
  double from_logits = ctc_loss_and_grad(logits, {1, 3}, 0, grad, 1.0);
  double from_lp = ctc_loss(lp, {1, 3}, 0);
  CHECK(from_logits == doctest::Approx(from_lp).epsilon(1e-12));
}

TEST_CASE("gradient matches finite differences") {
  Rng rng(31);
  Tensor<double> logits({4, 5});
  for (auto& v : logits.v) v = rng.next_uniform(-2, 2);
  std::vector<int> tgt{2, 4};
  Tensor<double> grad;
  ctc_loss_and_grad(logits, tgt, 0, grad, 1.0);
  const double h = 1e-6;
  for (size_t i = 0; i < logits.numel(); ++i) {
    Tensor<double> dummy;
    double orig = logits.v[i];
    logits.v[i] = orig + h;
    double up = ctc_loss_and_grad(logits, tgt, 0, dummy, 1.0);
    logits.v[i] = orig - h;
    double dn = ctc_loss_and_grad(logits, tgt, 0, dummy, 1.0);
    logits.v[i] = orig;
    double numeric = (up - dn) / (2 * h);
    CHECK(std::fabs(grad.v[i] - numeric) < 1e-7);
  }
}

TEST_CASE("infeasible targets are typed errors") {
  Tensor<double> lp({1, 4});
  lp.fill(std::log(0.25));
  try {
    ctc_loss(lp, {1, 1}, 0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::TargetTooLong);
  }
  CHECK_THROWS_AS(ctc_loss(lp, {0}, 0), Error);   // blank in target
  CHECK_THROWS_AS(ctc_loss(lp, {9}, 0), Error);   // out of range
  CHECK_THROWS_AS(ctc_loss(lp, {}, 0), Error);    // empty
}

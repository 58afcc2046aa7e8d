#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "subseg/bleu.hpp"
#include "subseg/tok13a.hpp"
#include "testutil.hpp"

using namespace subseg;

namespace {

// Independent oracle: plain n-gram counting, no shared code with bleu.cpp.
double oracle_bleu(const std::vector<std::vector<std::string>>& hyps,
                   const std::vector<std::vector<std::string>>& refs) {
  double matches[4] = {0, 0, 0, 0}, totals[4] = {0, 0, 0, 0};
  size_t hyp_len = 0, ref_len = 0;
  for (size_t s = 0; s < hyps.size(); ++s) {
    hyp_len += hyps[s].size();
    ref_len += refs[s].size();
    for (int n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, int> h, r;
      for (size_t i = 0; i + n <= hyps[s].size(); ++i)
        ++h[std::vector<std::string>(hyps[s].begin() + i, hyps[s].begin() + i + n)];
      for (size_t i = 0; i + n <= refs[s].size(); ++i)
        ++r[std::vector<std::string>(refs[s].begin() + i, refs[s].begin() + i + n)];
      for (auto& [ng, c] : h) {
        totals[n - 1] += c;
        auto it = r.find(ng);
        if (it != r.end()) matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;
  double log_sum = 0;
  int orders = 0;
  double smooth = 1.0;
  for (int n = 0; n < 4; ++n) {
    if (totals[n] == 0) continue;
    double p = matches[n] / totals[n];
    if (matches[n] == 0) {
      smooth *= 2;
      p = 1.0 / (smooth * totals[n]);
    }
    log_sum += std::log(p);
    ++orders;
  }
  double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - double(ref_len) / double(hyp_len));
  return orders ? 100.0 * bp * std::exp(log_sum / orders) : 0.0;
}

}  // namespace

TEST_CASE("identity corpus scores exactly 100") {
  Rng rng(5);
  std::vector<std::string> sents;
  for (int i = 0; i < 40; ++i) {
    std::string s;
    for (auto& w : testutil::random_words(rng, 3 + rng.next_below(10))) s += w + " ";
    sents.push_back(s);
  }
  BleuScore b = bleu(sents, sents);
  CHECK(b.score == doctest::Approx(100.0).epsilon(1e-12));
  for (double p : b.precisions) CHECK(p == 1.0);
  CHECK(b.brevity_penalty == 1.0);
}

TEST_CASE("four-token hand case matches the manual oracle") {
  std::vector<std::string> hyp{"a b c d"}, ref{"a b c e"};
  BleuScore b = bleu(hyp, ref);
  CHECK(b.precisions[0] == doctest::Approx(3.0 / 4.0).epsilon(1e-12));
  CHECK(b.precisions[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(b.precisions[2] == doctest::Approx(1.0 / 2.0).epsilon(1e-12));
  CHECK(b.precisions[3] == doctest::Approx(1.0 / 2.0).epsilon(1e-12));  // s=2, 1/(2*1)
  CHECK(b.brevity_penalty == 1.0);
  double expected = 100.0 * std::exp((std::log(0.75) + std::log(2.0 / 3.0) + std::log(0.5) +
                                      std::log(0.5)) / 4.0);
  CHECK(b.score == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::fabs(b.score - oracle_bleu({tokenize_13a(hyp[0])}, {tokenize_13a(ref[0])})) < 1e-9);
}

TEST_CASE("empty hypothesis scores zero") {
  BleuScore b = bleu({""}, {"a"});
  CHECK(b.score == 0.0);
  CHECK(b.brevity_penalty == 0.0);
}

TEST_CASE("permutation invariance over sentence order") {
  Rng rng(123);
  std::vector<std::string> hyps, refs;
  for (int i = 0; i < 25; ++i) {
    auto w = testutil::random_words(rng, 4 + rng.next_below(8));
    std::string h, r;
    for (auto& x : w) {
      h += x + " ";
      r += x + " ";
    }
    if (rng.next_double() < 0.5) h += "extra ";
    hyps.push_back(h);
    refs.push_back(r);
  }
  double base = bleu(hyps, refs).score;
  std::vector<size_t> perm(hyps.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (size_t k = 0; k + 1 < perm.size(); ++k)
    std::swap(perm[k], perm[k + rng.next_below(perm.size() - k)]);
  std::vector<std::string> h2, r2;
  for (size_t i : perm) {
    h2.push_back(hyps[i]);
    r2.push_back(refs[i]);
  }
  CHECK(bleu(h2, r2).score == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("agrees with the oracle on random corpora") {
  Rng rng(777);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<std::string>> hyps, refs;
    size_t n = 1 + rng.next_below(8);
    for (size_t i = 0; i < n; ++i) {
      auto r = testutil::random_words(rng, 1 + rng.next_below(10), 1, 3);
      auto h = r;
      // corrupt a little
      for (auto& w : h)
        if (rng.next_double() < 0.3) w = testutil::random_word(rng, 1, 3);
      if (rng.next_double() < 0.2) h.resize(1 + rng.next_below(h.size()));
      hyps.push_back(h);
      refs.push_back(r);
    }
    double mine = bleu_tokens(hyps, refs).score;
    double oracle = oracle_bleu(hyps, refs);
    CHECK(mine == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("smoothing none yields zero when an order has no matches") {
  BleuScore b = bleu({"a b c d"}, {"x y z w"}, Smoothing::None);
  CHECK(b.score == 0.0);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(bleu({}, {}), Error);
  CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}), Error);
}

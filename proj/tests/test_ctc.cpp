// Copyright 2026 The nuqta authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nuqta/ctc.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nuqta;

namespace {

// Random normalized log-prob matrix [T, K1].
std::vector<double> random_logp(size_t T, size_t K1, Rng& rng) {
  std::vector<double> lp(T * K1);
  for (size_t t = 0; t < T; ++t) {
    double mx = -1e9;
    for (size_t k = 0; k < K1; ++k) {
      lp[t * K1 + k] = rng.uniform(-3.0, 3.0);
      mx = std::max(mx, lp[t * K1 + k]);
    }
    double acc = 0;
    for (size_t k = 0; k < K1; ++k) acc += std::exp(lp[t * K1 + k] - mx);
    const double lse = mx + std::log(acc);
    for (size_t k = 0; k < K1; ++k) lp[t * K1 + k] -= lse;
  }
  return lp;
}

}  // namespace

TEST_CASE("single-timestep single-label lattice") {
  Rng rng(1);
  auto lp = random_logp(1, 4, rng);
  CtcResult r = ctc_loss(lp.data(), 1, 4, {2});
  CHECK(r.feasible);
  CHECK(r.loss == doctest::Approx(-lp[2]).epsilon(1e-12));
}

TEST_CASE("empty target is the all-blank path") {
  Rng rng(2);
  const size_t T = 5, K1 = 3;
  auto lp = random_logp(T, K1, rng);
  CtcResult r = ctc_loss(lp.data(), T, K1, {});
  double want = 0;
  for (size_t t = 0; t < T; ++t) want -= lp[t * K1 + K1 - 1];
  CHECK(r.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("T=4 K=3 matches exhaustive path enumeration") {
  Rng rng(3);
  auto lp = random_logp(4, 4, rng);
  const std::vector<int> target{1, 0};
  CtcResult r = ctc_loss(lp.data(), 4, 4, target);
  const double want = oracles::ctc_nll_bruteforce(lp, 4, 4, target);
  CHECK(r.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("oracle equivalence over the small instance family") {
  // T <= 6, L <= 3, K <= 4; forward-backward vs brute force within 1e-8.
  double max_err = 0;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const size_t T = 1 + rng.below(6);
    const size_t K = 1 + rng.below(4);
    const size_t K1 = K + 1;
    const size_t L = rng.below(std::min<size_t>(T, 3) + 1);
    std::vector<int> target(L);
    for (auto& c : target) c = static_cast<int>(rng.below(K));
    auto lp = random_logp(T, K1, rng);
    CtcResult r = ctc_loss(lp.data(), T, K1, target);
    const double want = oracles::ctc_nll_bruteforce(lp, T, K1, target);
    if (!std::isfinite(want)) {
      CHECK_FALSE(r.feasible);
      continue;
    }
    CHECK(r.feasible);
    max_err = std::max(max_err, std::abs(r.loss - want));
  }
  CHECK(max_err < 1e-8);
}

TEST_CASE("infeasible targets signal +infinity") {
  Rng rng(4);
  auto lp = random_logp(2, 3, rng);
  CtcResult r = ctc_loss(lp.data(), 2, 3, {0, 0, 1});
  CHECK_FALSE(r.feasible);
  CHECK(std::isinf(r.loss));
  // Repeated label needs a separating blank: [0,0] in 2 frames is infeasible.
  CtcResult r2 = ctc_loss(lp.data(), 2, 3, {0, 0});
  CHECK_FALSE(r2.feasible);
}

TEST_CASE("gradient: single-path case") {
  Rng rng(5);
  auto lp = random_logp(1, 4, rng);
  std::vector<double> d(4);
  ctc_grad(lp.data(), 1, 4, {2}, d.data());
  CHECK(d[2] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);
  CHECK(d[3] == 0.0);
}

TEST_CASE("gradient: symmetric timesteps get equal mass") {
  // Uniform rows make t=0 and t=1 interchangeable.
  const size_t T = 2, K1 = 2;
  std::vector<double> lp(T * K1, std::log(0.5));
  std::vector<double> d(T * K1);
  ctc_grad(lp.data(), T, K1, {0}, d.data());
  CHECK(d[0] == doctest::Approx(d[2]).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(d[3]).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    const size_t T = 5, K1 = 4;
    auto lp = random_logp(T, K1, rng);
    const std::vector<int> target{static_cast<int>(rng.below(3)),
                                  static_cast<int>(rng.below(3))};
    std::vector<double> d(T * K1);
    ctc_grad(lp.data(), T, K1, target, d.data());
    const double h = 1e-6;
    for (size_t i = 0; i < lp.size(); ++i) {
      const double orig = lp[i];
      lp[i] = orig + h;
      const double fp = ctc_loss(lp.data(), T, K1, target).loss;
      lp[i] = orig - h;
      const double fm = ctc_loss(lp.data(), T, K1, target).loss;
      lp[i] = orig;
      const double num = (fp - fm) / (2 * h);
      CHECK(std::abs(d[i] - num) / std::max(1.0, std::abs(d[i])) < 1e-6);
    }
  }
}

TEST_CASE("loss is sensitive to target order") {
  Rng rng(6);
  auto lp = random_logp(5, 4, rng);
  const double l01 = ctc_loss(lp.data(), 5, 4, {0, 1}).loss;
  const double l10 = ctc_loss(lp.data(), 5, 4, {1, 0}).loss;
  CHECK(l01 != l10);
  // Palindromes are invariant under reversal by construction.
  const double pal = ctc_loss(lp.data(), 5, 4, {0, 1, 0}).loss;
  const double lap = ctc_loss(lp.data(), 5, 4, {0, 1, 0}).loss;
  CHECK(pal == lap);
}

TEST_CASE("greedy decoding collapse rules") {
  const size_t K1 = 3;  // classes {0, 1}, blank = 2
  auto mat = [&](std::vector<int> arg) {
    std::vector<double> lp(arg.size() * K1, std::log(0.1));
    for (size_t t = 0; t < arg.size(); ++t)
      lp[t * K1 + arg[t]] = std::log(0.8);
    return lp;
  };
  {
    auto lp = mat({0, 0, 2, 1});
    CHECK(greedy_decode(lp.data(), 4, K1) == std::vector<int>{0, 1});
  }
  {
    auto lp = mat({0, 2, 0});
    CHECK(greedy_decode(lp.data(), 3, K1) == std::vector<int>{0, 0});
  }
  {
    auto lp = mat({2, 2, 2});
    CHECK(greedy_decode(lp.data(), 3, K1).empty());
  }
}

TEST_CASE("greedy recovers a blank-padded perfect encoding") {
  const std::vector<int> target{0, 2, 2, 1};
  const size_t K1 = 4;
  const size_t T = 2 * target.size() + 1;
  std::vector<double> lp(T * K1, std::log(1e-6));
  for (size_t t = 0; t < T; ++t) {
    const int cls = (t % 2 == 1) ? target[t / 2] : static_cast<int>(K1) - 1;
    lp[t * K1 + cls] = std::log(0.99);
  }
  CHECK(greedy_decode(lp.data(), T, K1) == target);
}

TEST_CASE("beam decoding") {
  SUBCASE("T=1 matches exhaustive search") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(200 + seed);
      auto lp = random_logp(1, 3, rng);
      CHECK(beam_decode(lp.data(), 1, 3, 100) ==
            oracles::ctc_best_transcript_bruteforce(lp, 1, 3));
    }
  }
  SUBCASE("tiny instances with a huge beam match brute force") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(300 + seed);
      auto lp = random_logp(3, 3, rng);
      CHECK(beam_decode(lp.data(), 3, 3, 1000) ==
            oracles::ctc_best_transcript_bruteforce(lp, 3, 3));
    }
  }
  SUBCASE("wider beams never return a less probable transcript") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(400 + seed);
      auto lp = random_logp(4, 4, rng);
      double prev = -std::numeric_limits<double>::infinity();
      for (size_t width : {1u, 2u, 4u, 8u, 64u, 1024u}) {
        auto tr = beam_decode(lp.data(), 4, 4, width);
        // Transcript probability is exactly the CTC likelihood of that
        // transcript as a target.
        CtcResult r = ctc_loss(lp.data(), 4, 4, tr);
        const double score = r.feasible ? -r.loss : -1e300;
        CHECK(score >= prev - 1e-12);
        prev = std::max(prev, score);
      }
    }
  }
}

TEST_CASE("ctc_loss_op integrates with the tape") {
  Rng rng(7);
  const size_t T = 6, K1 = 4;
  auto lpv = random_logp(T, K1, rng);
  Tensor<double> lp({T, K1}, lpv);
  lp.set_requires_grad(true);
  const std::vector<int> target{1, 2};

  SUBCASE("forward equals the raw loss and backprop matches ctc_grad") {
    Tape<double> tape;
    Tensor<double> loss = ctc_loss_op(lp, target, T);
    CHECK(loss.item() ==
          doctest::Approx(ctc_loss(lpv.data(), T, K1, target).loss));
    tape.backward(loss);
    std::vector<double> want(T * K1);
    ctc_grad(lpv.data(), T, K1, target, want.data());
    for (size_t i = 0; i < want.size(); ++i)
      CHECK(lp.grad()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  SUBCASE("valid_T masks trailing timesteps") {
    Tape<double> tape;
    Tensor<double> loss = ctc_loss_op(lp, target, 4);
    CHECK(loss.item() ==
          doctest::Approx(ctc_loss(lpv.data(), 4, K1, target).loss));
    tape.backward(loss);
    for (size_t i = 4 * K1; i < T * K1; ++i) CHECK(lp.grad()[i] == 0.0);
  }
  SUBCASE("infeasible alignment raises a numeric error") {
    const std::vector<int> too_long{0, 0, 0, 0};
    CHECK_THROWS_AS((void)ctc_loss_op(lp, too_long, 2), numeric_error);
  }
}

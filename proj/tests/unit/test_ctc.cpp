// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "ssir/ctc.hpp"
#include "ssir/errors.hpp"

using namespace ssir;
using namespace ssir::ctc;

namespace {

LogProbLattice random_lattice(std::size_t T, std::size_t classes, std::mt19937_64& rng, double spread = 1.5) {
  std::normal_distribution<double> g(0.0, spread);
  std::vector<double> logits(T * classes);
  for (auto& v : logits) v = g(rng);
  return LogProbLattice::from_logits(T, classes, logits);
}

LogProbLattice uniform(std::size_t T, std::size_t classes) {
  return LogProbLattice::from_logits(T, classes, std::vector<double>(T * classes, 0.0));
}

// Lattice whose per-frame argmax follows `path`.
LogProbLattice peaked(const std::vector<int>& path, std::size_t classes) {
  std::vector<double> logits(path.size() * classes, 0.0);
  for (std::size_t t = 0; t < path.size(); ++t) logits[t * classes + path[t]] = 3.0;
  return LogProbLattice::from_logits(path.size(), classes, logits);
}

std::vector<int> random_target(std::size_t max_len, int V, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> tok(1, V);
  std::vector<int> t(len(rng));
  for (auto& v : t) v = tok(rng);
  return t;
}

// Exhaustive map from collapsed sequence to total probability.
std::map<std::vector<int>, double> sequence_masses(const LogProbLattice& lat) {
  std::map<std::vector<int>, double> out;
  std::vector<int> path(lat.steps, 0);
  while (true) {
    double lp = 0.0;
    for (std::size_t t = 0; t < lat.steps; ++t) lp += lat.at(t, path[t]);
    out[collapse(path)] += std::exp(lp);
    std::size_t t = 0;
    while (t < lat.steps && ++path[t] == static_cast<int>(lat.classes)) path[t++] = 0;
    if (t == lat.steps) break;
  }
  return out;
}

double log_sum_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

TEST_CASE("uniform single-token cases") {
  CHECK(ctc_loss(uniform(1, 2), std::vector<int>{1}).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ctc_loss(uniform(2, 2), std::vector<int>{1}).loss == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK(ctc_brute_force(uniform(1, 2), std::vector<int>{1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(ctc_loss(uniform(2, 2), std::vector<int>{1, 1}), InfeasibleTarget);
  CHECK(std::isinf(ctc_brute_force(uniform(2, 2), std::vector<int>{1, 1})));
  CHECK_NOTHROW(ctc_loss(uniform(3, 2), std::vector<int>{1, 1}));
}

TEST_CASE("min frames and collapse") {
  CHECK(min_frames(std::vector<int>{1, 1}) == 3);
  CHECK(min_frames(std::vector<int>{1, 2, 2, 2}) == 6);
  CHECK(min_frames(std::vector<int>{3}) == 1);
  CHECK(extend_with_blanks(std::vector<int>{4, 5}) == std::vector<int>{0, 4, 0, 5, 0});
  CHECK(collapse(std::vector<int>{0, 1, 1, 0, 2}) == std::vector<int>{1, 2});
  CHECK(collapse(std::vector<int>{1, 1, 0, 1}) == std::vector<int>{1, 1});
  CHECK(collapse(std::vector<int>{0, 0, 0}).empty());
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 3);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> p(8);
    for (auto& v : p) v = d(rng);
    // A second collapse is a no-op unless blanks separated equal tokens, which
    // the first collapse turns into adjacent repeats.
    const auto c = collapse(p);
    bool adjacent_repeat = false;
    for (std::size_t k = 1; k < c.size(); ++k) adjacent_repeat = adjacent_repeat || c[k] == c[k - 1];
    CHECK((collapse(c) == c) == !adjacent_repeat);
    CHECK(collapse(collapse(c)) == collapse(c));
  }
}

TEST_CASE("lattice validation") {
  CHECK_THROWS_AS(LogProbLattice::from_log_probs(1, 2, {std::log(0.5), std::log(0.6)}), InvalidParameter);
  CHECK_NOTHROW(LogProbLattice::from_log_probs(1, 2, {std::log(0.5), std::log(0.5)}));
  CHECK_THROWS_AS(LogProbLattice::from_logits(0, 2, std::vector<double>{}), InvalidParameter);
}

TEST_CASE("forward-backward loss equals exhaustive enumeration") {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const std::size_t T = 1 + rng() % 6;
    const int V = 1 + static_cast<int>(rng() % 4);
    const auto lat = random_lattice(T, V + 1, rng);
    const auto target = random_target(3, V, rng);
    const double brute = ctc_brute_force(lat, target);
    if (T < min_frames(target)) {
      CHECK(std::isinf(brute));
      CHECK_THROWS_AS(ctc_loss(lat, target), InfeasibleTarget);
      continue;
    }
    worst = std::max(worst, std::abs(ctc_loss(lat, target).loss - brute));
    ++checked;
  }
  CHECK(checked >= 200);
  CHECK(worst <= 1e-9);
}

TEST_CASE("alpha-beta mass is constant across frames") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const std::size_t T = 4 + rng() % 20;
    const auto lat = random_lattice(T, 5, rng, 2.0);
    const auto target = random_target(3, 4, rng);
    if (T < min_frames(target)) continue;
    const auto fb = forward_backward(lat, target);
    for (std::size_t t = 0; t < T; ++t) {
      double acc = -INFINITY;
      for (std::size_t s = 0; s < fb.states; ++s)
        acc = log_sum_exp(acc, fb.log_alpha[t * fb.states + s] + fb.log_beta[t * fb.states + s]);
      CHECK(std::abs(acc - fb.log_likelihood) <= 1e-9 * std::max(1.0, std::abs(fb.log_likelihood)));
    }
  }
}

TEST_CASE("long lattices stay finite") {
  std::mt19937_64 rng(8);
  const auto lat = random_lattice(180, 25, rng, 3.0);
  const std::vector<int> target{3, 9, 9, 14, 2, 7};
  const auto r = ctc_loss(lat, target);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss > 0.0);
  for (double g : r.grad_logits) CHECK(std::isfinite(g));
}

TEST_CASE("gradient with respect to logits matches central differences") {
  std::mt19937_64 rng(23);
  int checked = 0;
  double worst = 0.0;
  while (checked < 60) {
    const std::size_t T = 1 + rng() % 8;
    const int V = 1 + static_cast<int>(rng() % 5);
    const std::size_t C = V + 1;
    std::normal_distribution<double> g(0.0, 1.5);
    std::vector<double> logits(T * C);
    for (auto& v : logits) v = g(rng);
    const auto target = random_target(3, V, rng);
    if (T < min_frames(target)) continue;
    const auto r = ctc_loss(LogProbLattice::from_logits(T, C, logits), target);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      auto up = logits, down = logits;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      const double numeric = (ctc_loss(LogProbLattice::from_logits(T, C, up), target).loss -
                              ctc_loss(LogProbLattice::from_logits(T, C, down), target).loss) /
                             2e-6;
      const double denom = std::max({1.0, std::abs(numeric), std::abs(r.grad_logits[i])});
      worst = std::max(worst, std::abs(numeric - r.grad_logits[i]) / denom);
    }
    ++checked;
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("greedy decoding") {
  // Class 0 is the blank; a=1, b=2.
  CHECK(greedy_decode(peaked({0, 1, 1, 0, 2}, 3)).ids == std::vector<int>{1, 2});
  CHECK(greedy_decode(peaked({1, 1, 0, 1}, 3)).ids == std::vector<int>{1, 1});
  CHECK(greedy_decode(peaked({0, 0, 0}, 3)).ids.empty());
  const auto lat = peaked({0, 1, 2}, 3);
  const auto r = greedy_decode(lat);
  CHECK(r.frame_alignment == std::vector<int>{0, 1, 2});
  CHECK(r.log_prob == doctest::Approx(lat.at(0, 0) + lat.at(1, 1) + lat.at(2, 2)));
}

TEST_CASE("beam decoding") {
  SUBCASE("single frame picks the most likely class") {
    const auto lat = LogProbLattice::from_logits(1, 3, std::vector<double>{0.1, 2.0, 0.5});
    CHECK(beam_decode(lat, 4).ids == std::vector<int>{1});
    const auto blank = LogProbLattice::from_logits(1, 3, std::vector<double>{3.0, 2.0, 0.5});
    CHECK(beam_decode(blank, 4).ids.empty());
  }
  SUBCASE("wide beams find the exact most probable sequence") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 100; ++i) {
      const std::size_t T = 1 + rng() % 5;
      const std::size_t C = 2 + rng() % 3;
      const auto lat = random_lattice(T, C, rng);
      const auto masses = sequence_masses(lat);
      double best = -1.0;
      std::vector<int> argmax;
      for (const auto& [seq, m] : masses)
        if (m > best + 1e-15) {
          best = m;
          argmax = seq;
        }
      const int width = static_cast<int>(std::pow(C, T));
      const auto r = beam_decode(lat, width);
      CHECK(r.ids == argmax);
      CHECK(std::exp(r.log_prob) == doctest::Approx(best).epsilon(1e-9));
    }
  }
  SUBCASE("never worse than greedy, and no worse with a wider beam") {
    std::mt19937_64 rng(37);
    int violations = 0;
    for (int i = 0; i < 300; ++i) {
      const std::size_t T = 2 + rng() % 10;
      const std::size_t C = 2 + rng() % 4;
      const auto lat = random_lattice(T, C, rng, 1.0);
      const auto g = greedy_decode(lat);
      const double greedy_lp = sequence_log_prob(lat, g.ids);
      double previous = -INFINITY;
      for (int w : {1, 2, 4, 8}) {
        const auto r = beam_decode(lat, w);
        CHECK(r.log_prob == doctest::Approx(sequence_log_prob(lat, r.ids)).epsilon(1e-12));
        CHECK(r.log_prob >= greedy_lp - 1e-9);
        if (r.log_prob < previous - 1e-9) ++violations;
        previous = r.log_prob;
      }
    }
    CHECK(violations == 0);
  }
  CHECK_THROWS_AS(beam_decode(uniform(2, 3), 0), InvalidParameter);
}

TEST_CASE("sequence log probability agrees with the loss") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 50; ++i) {
    const auto lat = random_lattice(6, 4, rng);
    const auto target = random_target(3, 3, rng);
    if (6 < min_frames(target)) {
      CHECK(sequence_log_prob(lat, target) == -INFINITY);
      continue;
    }
    CHECK(sequence_log_prob(lat, target) == doctest::Approx(-ctc_loss(lat, target).loss).epsilon(1e-12));
  }
  const auto lat = uniform(3, 2);
  CHECK(sequence_log_prob(lat, std::vector<int>{}) == doctest::Approx(3 * std::log(0.5)));
}

TEST_CASE("batched loss averages per-sequence losses and back-propagates") {
  std::mt19937_64 rng(43);
  const ad::Segments seg{{4, 6}};
  std::normal_distribution<double> g;
  std::vector<double> logits(10 * 4);
  for (auto& v : logits) v = g(rng);
  const std::vector<std::vector<int>> targets{{1, 2}, {3, 3}};
  const auto x = ad::Tensor::constant({10, 4}, logits);
  const auto loss = ctc_loss_batch(x, seg, targets);
  const double l0 = ctc_loss(LogProbLattice::from_logits(4, 4, std::span(logits).subspan(0, 16)), targets[0]).loss;
  const double l1 = ctc_loss(LogProbLattice::from_logits(6, 4, std::span(logits).subspan(16, 24)), targets[1]).loss;
  CHECK(loss.item() == doctest::Approx((l0 + l1) / 2).epsilon(1e-12));
  CHECK(ad::grad_check([&](const ad::Tensor& t) { return ctc_loss_batch(t, seg, targets); }, x, 1e-6) < 1e-6);
  const std::vector<std::vector<int>> bad{{1, 2}, {1, 1, 1, 1}};
  CHECK_THROWS_AS(ctc_loss_batch(x, seg, bad), InfeasibleTarget);
}

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "ssir/errors.hpp"
#include "ssir/signal.hpp"

using namespace ssir;
using namespace ssir::signal;

namespace {

constexpr double kPi = std::numbers::pi;

// |H(e^jw)| of the cascade, evaluated directly from the coefficients.
double cascade_gain(const std::vector<BiquadSection>& sections, double f_hz, double fs_hz) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * kPi * f_hz / fs_hz);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

// Analog Butterworth magnitude after bilinear prewarping.
double prototype_gain(double f_hz, double fc_hz, double fs_hz, int order) {
  const double r = std::tan(kPi * fc_hz / fs_hz) / std::tan(kPi * f_hz / fs_hz);
  return 1.0 / std::sqrt(1.0 + std::pow(r, 2 * order));
}

double steady_state_amplitude(double f_hz, double fs_hz, std::size_t n, std::size_t tail) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * kPi * f_hz * static_cast<double>(i) / fs_hz);
  const auto y = butterworth_highpass(x, 2.0, fs_hz, 4);
  // Project the tail (a whole number of periods) onto sin and cos.
  double s = 0.0, c = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) {
    const double ph = 2.0 * kPi * f_hz * static_cast<double>(i) / fs_hz;
    s += y[i] * std::sin(ph);
    c += y[i] * std::cos(ph);
  }
  return 2.0 * std::hypot(s, c) / static_cast<double>(tail);
}

RawWindow random_window(std::size_t t, std::uint64_t seed) {
  RawWindow w(t, 6, 6);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (auto& v : w.values) v = g(rng);
  return w;
}

}  // namespace

TEST_CASE("moving average uses a clipped window at the edges") {
  const std::vector<double> x{1, 2, 3, 4};
  const auto y = moving_average(x, 3);
  REQUIRE(y.size() == 4);
  CHECK(y[0] == doctest::Approx(1.5));
  CHECK(y[1] == doctest::Approx(2.0));
  CHECK(y[2] == doctest::Approx(3.0));
  CHECK(y[3] == doctest::Approx(3.5));
  const std::vector<double> c{5, 5, 5};
  CHECK(moving_average(c, 3) == c);
}

TEST_CASE("moving average matches direct summation") {
  const std::vector<double> x{0, 3, 0, 3, 0, 3};
  for (int k : {1, 3, 5}) {
    const auto y = moving_average(x, k);
    for (int i = 0; i < 6; ++i) {
      double sum = 0.0;
      int count = 0;
      for (int j = 0; j < 6; ++j)
        if (std::abs(j - i) <= (k - 1) / 2) {
          sum += x[j];
          ++count;
        }
      CHECK(y[i] == doctest::Approx(sum / count).epsilon(1e-15));
    }
  }
}

TEST_CASE("moving average rejects even or non-positive windows") {
  const std::vector<double> x{1, 2, 3};
  CHECK_THROWS_AS(moving_average(x, 2), InvalidParameter);
  CHECK_THROWS_AS(moving_average(x, 0), InvalidParameter);
  CHECK_THROWS_AS(moving_average(x, -3), InvalidParameter);
}

TEST_CASE("moving average is linear") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> x(50), y(50), mix(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = g(rng);
    y[i] = g(rng);
    mix[i] = 2.5 * x[i] - 0.75 * y[i];
  }
  const auto mx = moving_average(x, 3), my = moving_average(y, 3), mm = moving_average(mix, 3);
  for (int i = 0; i < 50; ++i) CHECK(std::abs(mm[i] - (2.5 * mx[i] - 0.75 * my[i])) < 1e-12);
}

TEST_CASE("designed high-pass matches the prewarped analog prototype") {
  const auto sections = design_butterworth_highpass(2.0, 50.0, 4);
  REQUIRE(sections.size() == 2);
  for (double f : {0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 24.0})
    CHECK(cascade_gain(sections, f, 50.0) == doctest::Approx(prototype_gain(f, 2.0, 50.0, 4)).epsilon(1e-9));
  CHECK(cascade_gain(sections, 2.0, 50.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(cascade_gain(sections, 1e-9, 50.0) < 1e-12);
}

TEST_CASE("high-pass steady-state gain at the cutoff and in the pass band") {
  const auto sections = design_butterworth_highpass(2.0, 50.0, 4);
  const double g2 = steady_state_amplitude(2.0, 50.0, 2000, 100);
  const double g10 = steady_state_amplitude(10.0, 50.0, 2000, 100);
  CHECK(std::abs(g2 / 0.7071 - 1.0) <= 0.02);
  CHECK(std::abs(g10 - 1.0) <= 0.01);
  CHECK(g2 == doctest::Approx(cascade_gain(sections, 2.0, 50.0)).epsilon(1e-6));
  CHECK(g10 == doctest::Approx(cascade_gain(sections, 10.0, 50.0)).epsilon(1e-6));
}

TEST_CASE("high-pass removes a constant input") {
  for (double c : {1.0, -3.5, 1e4}) {
    const std::vector<double> x(400, c);
    const auto y = butterworth_highpass(x, 2.0, 50.0, 4);
    for (std::size_t i = 350; i < 400; ++i) CHECK(std::abs(y[i]) < 1e-6 * std::abs(c));
  }
}

TEST_CASE("high-pass is shift invariant after the transient") {
  const std::size_t n = 600, s = 7;
  std::vector<double> x(n), xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::sin(2 * kPi * 6.0 * i / 50.0) + 0.3 * std::sin(2 * kPi * 11.0 * i / 50.0);
    xs[i] = std::sin(2 * kPi * 6.0 * (double(i) - s) / 50.0) + 0.3 * std::sin(2 * kPi * 11.0 * (double(i) - s) / 50.0);
  }
  const auto y = butterworth_highpass(x, 2.0, 50.0);
  const auto ys = butterworth_highpass(xs, 2.0, 50.0);
  for (std::size_t i = 300; i < n; ++i) CHECK(std::abs(ys[i] - y[i - s]) < 1e-6);
}

TEST_CASE("high-pass validates its parameters") {
  const std::vector<double> x(100, 1.0);
  CHECK_THROWS_AS(butterworth_highpass(x, 25.0, 50.0), InvalidParameter);
  CHECK_THROWS_AS(butterworth_highpass(x, 30.0, 50.0), InvalidParameter);
  CHECK_THROWS_AS(butterworth_highpass(x, 0.0, 50.0), InvalidParameter);
  CHECK_THROWS_AS(butterworth_highpass(x, 2.0, 50.0, 3), InvalidParameter);
  CHECK_THROWS_AS(butterworth_highpass(std::vector<double>(7, 1.0), 2.0, 50.0), InvalidParameter);
}

TEST_CASE("z-score") {
  const auto y = zscore(std::vector<double>{1, 2, 3});
  CHECK(y[0] == doctest::Approx(-1.224745).epsilon(1e-6));
  CHECK(y[1] == doctest::Approx(0.0));
  CHECK(y[2] == doctest::Approx(1.224745).epsilon(1e-6));
  CHECK(zscore(std::vector<double>{7, 7, 7}) == std::vector<double>{0, 0, 0});

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-4, 9);
  std::vector<double> x(100);
  for (auto& v : x) v = u(rng);
  const auto z = zscore(x);
  double m = 0, ss = 0;
  for (double v : z) m += v;
  m /= 100;
  for (double v : z) ss += (v - m) * (v - m);
  CHECK(std::abs(m) < 1e-9);
  CHECK(std::abs(std::sqrt(ss / 100) - 1.0) < 1e-6);
}

TEST_CASE("preprocess shapes follow the window") {
  const auto word = preprocess(random_window(80, 1));
  CHECK(word.steps == 80);
  CHECK(word.dims == 36);
  const auto sentence = preprocess(random_window(180, 2));
  CHECK(sentence.steps == 180);
  CHECK(sentence.dims == 36);
}

TEST_CASE("preprocess output columns are z-scored") {
  const auto f = preprocess(random_window(120, 4));
  for (std::size_t d = 0; d < f.dims; ++d) {
    double m = 0, ss = 0;
    for (std::size_t t = 0; t < f.steps; ++t) m += f.values[t * f.dims + d];
    m /= f.steps;
    for (std::size_t t = 0; t < f.steps; ++t) ss += std::pow(f.values[t * f.dims + d] - m, 2);
    CHECK(std::abs(m) < 1e-6);
    CHECK(std::abs(std::sqrt(ss / f.steps) - 1.0) < 1e-3);
  }
}

TEST_CASE("preprocess maps a constant window to zeros") {
  RawWindow w(80, 6, 6);
  for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] = static_cast<float>(3.0 + (i % 36));
  const auto f = preprocess(w);
  for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("preprocess is deterministic and flattens channel-major") {
  auto w = random_window(64, 5);
  const auto a = preprocess(w);
  const auto b = preprocess(w);
  CHECK(a.values == b.values);

  // A feature column depends only on its own series, at index c * axes + a.
  auto w2 = w;
  for (std::size_t t = 0; t < w2.steps; ++t) w2.at(t, 2, 4) += static_cast<float>(std::sin(0.9 * t));
  const auto c = preprocess(w2);
  for (std::size_t d = 0; d < 36; ++d) {
    bool same = true;
    for (std::size_t t = 0; t < 64; ++t) same = same && a.values[t * 36 + d] == c.values[t * 36 + d];
    CHECK(same == (d != 2 * 6 + 4));
  }
}

TEST_CASE("raw window validation") {
  RawWindow w(7, 6, 6);
  CHECK_THROWS_AS(preprocess(w), InvalidParameter);
  RawWindow nan(10, 1, 1);
  nan.values[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(preprocess(nan), InvalidParameter);
}

TEST_CASE("input selection keeps listed channels and axes") {
  const auto w = random_window(20, 6);
  const std::vector<int> ch{4, 1};
  const std::vector<int> ax{0, 5};
  const auto s = select_inputs(w, ch, ax);
  CHECK(s.channels == 2);
  CHECK(s.axes == 2);
  CHECK(s.at(3, 0, 1) == w.at(3, 4, 5));
  CHECK(s.at(7, 1, 0) == w.at(7, 1, 0));
  CHECK(InputSelection{ch, ax}.feature_dim() == 4);
  CHECK(extract_features(w, InputSelection{ch, ax}).dims == 4);
  CHECK_THROWS_AS(select_inputs(w, std::vector<int>{6}, ax), InvalidParameter);
  CHECK_THROWS_AS(select_inputs(w, std::vector<int>{}, ax), InvalidParameter);
}

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ssir/errors.hpp"

namespace ssir::signal {

RawWindow::RawWindow(std::size_t t, std::size_t c, std::size_t a, double fs)
    : steps(t), channels(c), axes(a), sample_rate_hz(fs), values(t * c * a, 0.0f) {}

std::vector<double> RawWindow::series(std::size_t c, std::size_t a) const {
  std::vector<double> out(steps);
  for (std::size_t t = 0; t < steps; ++t) out[t] = at(t, c, a);
  return out;
}

void RawWindow::set_series(std::size_t c, std::size_t a, std::span<const double> x) {
  for (std::size_t t = 0; t < steps; ++t) at(t, c, a) = static_cast<float>(x[t]);
}

void RawWindow::validate() const {
  if (steps < 8) throw InvalidParameter("raw window needs at least 8 time steps, got " + std::to_string(steps));
  if (channels < 1 || axes < 1) throw InvalidParameter("raw window needs at least one channel and one axis");
  if (values.size() != steps * channels * axes)
    throw InvalidParameter("raw window payload size does not match its shape");
  if (!(sample_rate_hz > 0.0)) throw InvalidParameter("sample rate must be positive");
  for (float v : values)
    if (!std::isfinite(v)) throw InvalidParameter("raw window contains a non-finite value");
}

std::vector<double> moving_average(std::span<const double> x, int k) {
  if (k < 1 || k % 2 == 0) throw InvalidParameter("moving average window must be odd and >= 1, got " + std::to_string(k));
  if (x.empty()) throw InvalidParameter("moving average of an empty sequence");
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t half = (k - 1) / 2;
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double sum = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) sum += x[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::vector<BiquadSection> design_butterworth_highpass(double cutoff_hz, double fs_hz, int order) {
  if (!(fs_hz > 0.0)) throw InvalidParameter("sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs_hz / 2.0))
    throw InvalidParameter("high-pass cutoff must lie in (0, fs/2), got " + std::to_string(cutoff_hz) + " Hz");
  if (order < 2 || order % 2 != 0) throw InvalidParameter("Butterworth order must be even and >= 2");

  // s -> (1/K)(1 - z^-1)/(1 + z^-1) maps the normalized analog cutoff onto cutoff_hz.
  const double K = std::tan(std::numbers::pi * cutoff_hz / fs_hz);
  const double K2 = K * K;
  std::vector<BiquadSection> sections;
  for (int k = 0; k < order / 2; ++k) {
    // Damping of the k-th conjugate pole pair of the analog prototype.
    const double d = 2.0 * std::sin((2.0 * k + 1.0) * std::numbers::pi / (2.0 * order));
    const double a0 = 1.0 + d * K + K2;
    BiquadSection s;
    s.b0 = 1.0 / a0;
    s.b1 = -2.0 / a0;
    s.b2 = 1.0 / a0;
    s.a1 = (2.0 * K2 - 2.0) / a0;
    s.a2 = (1.0 - d * K + K2) / a0;
    sections.push_back(s);
  }
  return sections;
}

std::vector<double> apply_sections(std::span<const BiquadSection> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : sections) {
    // Transposed direct form II.
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> butterworth_highpass(std::span<const double> x, double cutoff_hz, double fs_hz, int order) {
  const auto sections = design_butterworth_highpass(cutoff_hz, fs_hz, order);
  if (x.size() < 8) throw InvalidParameter("high-pass filtering needs at least 8 samples");
  return apply_sections(sections, x);
}

std::vector<double> zscore(std::span<const double> x) {
  if (x.empty()) throw InvalidParameter("z-score of an empty sequence");
  constexpr double kEps = 1e-8;
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(ss / n), kEps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
  return out;
}

FeatureSequence preprocess(const RawWindow& w, const PreprocessConfig& cfg) {
  w.validate();
  const auto sections = design_butterworth_highpass(cfg.cutoff_hz, w.sample_rate_hz, cfg.filter_order);
  FeatureSequence out;
  out.steps = w.steps;
  out.dims = w.channels * w.axes;
  out.values.assign(out.steps * out.dims, 0.0);
  for (std::size_t c = 0; c < w.channels; ++c) {
    for (std::size_t a = 0; a < w.axes; ++a) {
      auto smoothed = moving_average(w.series(c, a), cfg.smoothing_window);
      // Removing the initial level is the steady-state start for a DC input;
      // the filter would otherwise ring on the recording's offset.
      const double level = smoothed.front();
      for (double& v : smoothed) v -= level;
      const auto filtered = apply_sections(sections, smoothed);
      const auto normalized = zscore(filtered);
      const std::size_t d = c * w.axes + a;
      for (std::size_t t = 0; t < w.steps; ++t) out.values[t * out.dims + d] = normalized[t];
    }
  }
  return out;
}

RawWindow select_inputs(const RawWindow& w, std::span<const int> channels, std::span<const int> axes) {
  if (channels.empty() || axes.empty()) throw InvalidParameter("input selection needs at least one channel and one axis");
  for (int c : channels)
    if (c < 0 || static_cast<std::size_t>(c) >= w.channels) throw InvalidParameter("channel index out of range: " + std::to_string(c));
  for (int a : axes)
    if (a < 0 || static_cast<std::size_t>(a) >= w.axes) throw InvalidParameter("axis index out of range: " + std::to_string(a));
  RawWindow out(w.steps, channels.size(), axes.size(), w.sample_rate_hz);
  for (std::size_t t = 0; t < w.steps; ++t)
    for (std::size_t ci = 0; ci < channels.size(); ++ci)
      for (std::size_t ai = 0; ai < axes.size(); ++ai)
        out.at(t, ci, ai) = w.at(t, static_cast<std::size_t>(channels[ci]), static_cast<std::size_t>(axes[ai]));
  return out;
}

InputSelection InputSelection::all(std::size_t channels, std::size_t axes) {
  InputSelection s;
  for (std::size_t c = 0; c < channels; ++c) s.channels.push_back(static_cast<int>(c));
  for (std::size_t a = 0; a < axes; ++a) s.axes.push_back(static_cast<int>(a));
  return s;
}

FeatureSequence extract_features(const RawWindow& w, const InputSelection& sel, const PreprocessConfig& cfg) {
  if (sel == InputSelection::all(w.channels, w.axes)) return preprocess(w, cfg);
  return preprocess(select_inputs(w, sel.channels, sel.axes), cfg);
}

}  // namespace ssir::signal

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ssir::signal {

inline constexpr double kDefaultSampleRateHz = 50.0;

// One inertial recording, stored time-major: values[(t * channels + c) * axes + a].
// Payload is float32, matching the on-disk format.
struct RawWindow {
  std::size_t steps = 0;
  std::size_t channels = 0;
  std::size_t axes = 0;
  double sample_rate_hz = kDefaultSampleRateHz;
  std::vector<float> values;

  RawWindow() = default;
  RawWindow(std::size_t t, std::size_t c, std::size_t a, double fs = kDefaultSampleRateHz);

  float& at(std::size_t t, std::size_t c, std::size_t a) { return values[(t * channels + c) * axes + a]; }
  float at(std::size_t t, std::size_t c, std::size_t a) const {
    return values[(t * channels + c) * axes + a];
  }
  std::size_t series_count() const { return channels * axes; }
  std::vector<double> series(std::size_t c, std::size_t a) const;
  void set_series(std::size_t c, std::size_t a, std::span<const double> x);

  // Throws InvalidParameter when the window violates T >= 8, C, A >= 1 or holds non-finite values.
  void validate() const;
};

// Flattened, normalized features: values[t * dims + d], d = c * axes + a.
struct FeatureSequence {
  std::size_t steps = 0;
  std::size_t dims = 0;
  std::vector<double> values;
  std::string source;

  std::span<const double> row(std::size_t t) const { return {values.data() + t * dims, dims}; }
};

// Direct-form coefficients of one second-order section, a0 normalized to 1.
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

std::vector<double> moving_average(std::span<const double> x, int k);

// Even-order Butterworth high-pass as a cascade of order/2 biquads, bilinear
// transform prewarped at the cutoff.
std::vector<BiquadSection> design_butterworth_highpass(double cutoff_hz, double fs_hz, int order = 4);

// Causal single pass through the cascade, zero initial state.
std::vector<double> apply_sections(std::span<const BiquadSection> sections, std::span<const double> x);

std::vector<double> butterworth_highpass(std::span<const double> x, double cutoff_hz, double fs_hz,
                                         int order = 4);

// Population z-score with a 1e-8 floor on the standard deviation.
std::vector<double> zscore(std::span<const double> x);

struct PreprocessConfig {
  int smoothing_window = 3;
  double cutoff_hz = 2.0;
  int filter_order = 4;
};

// smoothing -> high-pass -> flatten (channel-major, axis-minor) -> per-feature z-score.
FeatureSequence preprocess(const RawWindow& w, const PreprocessConfig& cfg = {});

// Keeps only the listed channels and axes, in the listed order.
RawWindow select_inputs(const RawWindow& w, std::span<const int> channels, std::span<const int> axes);

// Which sensor channels and axes feed the model.
struct InputSelection {
  std::vector<int> channels;
  std::vector<int> axes;

  static InputSelection all(std::size_t channels = 6, std::size_t axes = 6);
  std::size_t feature_dim() const { return channels.size() * axes.size(); }
  bool operator==(const InputSelection&) const = default;
};

// select_inputs (skipped when the selection is the whole window) then preprocess.
FeatureSequence extract_features(const RawWindow& w, const InputSelection& sel, const PreprocessConfig& cfg = {});

}  // namespace ssir::signal

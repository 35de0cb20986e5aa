// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ssir/signal.hpp"
#include "ssir/vocabulary.hpp"

namespace ssir::data {

enum class SampleKind { word, phrase, sentence, augmented };

std::string to_string(SampleKind kind);
SampleKind parse_sample_kind(std::string_view s);

// How an augmented sample is rebuilt from training originals.
struct AugmentRecipe {
  enum class Op { concat, noise };
  Op op = Op::concat;
  std::vector<std::uint64_t> sources;
  std::uint64_t seed = 0;

  bool operator==(const AugmentRecipe&) const = default;
};

struct LabeledSample {
  std::uint64_t id = 0;
  std::variant<signal::RawWindow, signal::FeatureSequence> data;
  std::vector<int> labels;
  int participant = 0;
  SampleKind kind = SampleKind::word;
  std::optional<AugmentRecipe> recipe;

  bool is_raw() const { return std::holds_alternative<signal::RawWindow>(data); }
  const signal::RawWindow& raw() const;
  // False for recipe-only augmented samples whose payload has not been built yet.
  bool materialized() const;
  std::string provenance() const;
};

struct DatasetSplit {
  Vocabulary vocabulary;
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> validation;
  std::vector<LabeledSample> test;
  std::uint64_t seed = 0;
};

// ---- synthetic recordings ----

struct SynthesisConfig {
  std::uint64_t world_seed = 0x55495253ULL;
  std::size_t channels = 6;
  std::size_t axes = 6;
  double sample_rate_hz = signal::kDefaultSampleRateHz;
  double jitter_std = 0.15;
  // Scales every participant-specific distortion; 0 makes participants identical.
  double participant_shift = 1.0;
  double max_template_correlation = 0.9;
};

// Token templates: bursts of sinusoids whose timing and 1-12 Hz frequencies are
// keyed by token, distorted per participant, with per-recording jitter.
class SignalSynthesizer {
 public:
  SignalSynthesizer(int vocab_size, SynthesisConfig cfg = {});

  int vocab_size() const { return static_cast<int>(templates_.size()); }
  const SynthesisConfig& config() const { return cfg_; }

  signal::RawWindow token_window(int token_id, int participant, std::size_t t_len, std::uint64_t seed) const;

  // Several tokens squeezed into one window of t_len steps; each token occupies
  // word_len steps, overlapping neighbours when they do not fit.
  signal::RawWindow sequence_window(std::span<const int> tokens, int participant, std::size_t t_len,
                                    std::size_t word_len, std::uint64_t seed) const;

  // Noise-free template, double precision, [t][c][a] flattened.
  std::vector<double> clean_template(int token_id, int participant, std::size_t t_len) const;

  // Max over channel-axis series of |Pearson correlation| between two clean templates.
  double template_correlation(int token_a, int token_b, int participant, std::size_t t_len) const;

 private:
  struct Burst {
    double center = 0.5;
    double width = 0.1;
    double freq_hz = 5.0;
  };
  struct TokenTemplate {
    std::vector<Burst> bursts;
    std::vector<double> amplitude;  // [series][burst]
    std::vector<double> phase;      // [series][burst]
  };
  struct ParticipantStyle {
    double freq_scale = 1.0;
    double time_shift = 0.0;
    std::vector<double> gain;   // [series]
    std::vector<double> phase;  // [series]
  };

  TokenTemplate draw_template(int token_id, int attempt) const;
  ParticipantStyle style_for(int participant) const;
  void render(const TokenTemplate& tpl, const ParticipantStyle& style, std::size_t t_len, std::size_t offset,
              double time_jitter, double amp_jitter, std::span<double> out, std::size_t out_len) const;

  SynthesisConfig cfg_;
  std::vector<TokenTemplate> templates_;
};

signal::RawWindow synthesize_token_signal(const Vocabulary& vocab, int token_id, int participant,
                                          std::size_t t_len, std::uint64_t seed);

// Which recordings to synthesize.
struct CorpusSpec {
  std::vector<int> word_ids;
  std::vector<int> phrase_ids;
  std::vector<std::vector<int>> sentences;
  int participants = 4;
  int samples_per_word = 100;
  int repeats_per_phrase = 30;
  std::size_t word_len = 80;
  std::size_t sentence_len = 180;

  static CorpusSpec standard(const Vocabulary& vocab);
};

std::vector<LabeledSample> generate_corpus(const Vocabulary& vocab, const CorpusSpec& spec, std::uint64_t seed,
                                           const SynthesisConfig& synth = {});

// ---- augmentation and splitting ----

LabeledSample concat_augment(std::span<const LabeledSample> samples, int n_words, std::uint64_t seed);
LabeledSample noise_augment(const LabeledSample& s, std::uint64_t seed);

inline constexpr int kDefaultAugmentFactor = 10;

DatasetSplit build_splits(const Vocabulary& vocab, std::vector<LabeledSample> samples, std::uint64_t seed,
                          int augment_factor = kDefaultAugmentFactor);

// Rebuilds recipe-only augmented samples from the training originals.
class SampleResolver {
 public:
  explicit SampleResolver(const DatasetSplit& split);
  LabeledSample materialize(const LabeledSample& s) const;
  bool is_train_original(std::uint64_t id) const { return train_originals_.contains(id); }

 private:
  std::unordered_map<std::uint64_t, const LabeledSample*> train_originals_;
};

// Throws InvalidParameter if any augmented training sample draws on a
// validation or test recording, or the splits share an id.
void check_no_leakage(const DatasetSplit& split);

}  // namespace ssir::data

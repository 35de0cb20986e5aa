// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ssir/dataset.hpp"
#include "ssir/errors.hpp"
#include "ssir/random.hpp"

namespace ssir::data {

namespace {

constexpr std::uint64_t kTemplateKey = 0x54504c;
constexpr std::uint64_t kStyleKey = 0x50415254;
constexpr std::uint64_t kRecordingKey = 0x52454331;
constexpr std::size_t kReferenceLength = 80;

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

SignalSynthesizer::SignalSynthesizer(int vocab_size, SynthesisConfig cfg) : cfg_(cfg) {
  if (vocab_size < 1) throw InvalidParameter("synthesizer needs a non-empty vocabulary");
  if (cfg_.channels < 1 || cfg_.axes < 1) throw InvalidParameter("synthesizer needs at least one channel and axis");
  templates_.reserve(static_cast<std::size_t>(vocab_size));
  const std::size_t S = cfg_.channels * cfg_.axes;
  std::vector<std::vector<double>> rendered;
  const ParticipantStyle neutral{1.0, 0.0, std::vector<double>(S, 1.0), std::vector<double>(S, 0.0)};
  // Redraw until every pair sits comfortably below the correlation ceiling.
  const double ceiling = 0.8 * cfg_.max_template_correlation;
  for (int token = 1; token <= vocab_size; ++token) {
    for (int attempt = 0;; ++attempt) {
      TokenTemplate tpl = draw_template(token, attempt);
      std::vector<double> buf(kReferenceLength * S, 0.0);
      render(tpl, neutral, kReferenceLength, 0, 0.0, 0.0, buf, kReferenceLength);
      double worst = 0.0;
      for (const auto& other : rendered) {
        for (std::size_t s = 0; s < S; ++s) {
          std::vector<double> x(kReferenceLength), y(kReferenceLength);
          for (std::size_t t = 0; t < kReferenceLength; ++t) {
            x[t] = buf[t * S + s];
            y[t] = other[t * S + s];
          }
          worst = std::max(worst, std::abs(pearson(x, y)));
        }
      }
      if (worst < ceiling || attempt >= 64) {
        templates_.push_back(std::move(tpl));
        rendered.push_back(std::move(buf));
        break;
      }
    }
  }
}

SignalSynthesizer::TokenTemplate SignalSynthesizer::draw_template(int token_id, int attempt) const {
  std::mt19937_64 rng(mix_seed({cfg_.world_seed, kTemplateKey, static_cast<std::uint64_t>(token_id),
                                static_cast<std::uint64_t>(attempt)}));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  TokenTemplate tpl;
  const int n_bursts = 2 + static_cast<int>(rng() % 3);
  for (int j = 0; j < n_bursts; ++j) {
    Burst b;
    b.center = 0.2 + 0.6 * u01(rng);
    b.width = 0.07 + 0.08 * u01(rng);
    b.freq_hz = 2.0 + 10.0 * u01(rng);
    tpl.bursts.push_back(b);
  }
  const std::size_t S = cfg_.channels * cfg_.axes;
  tpl.amplitude.resize(S * tpl.bursts.size());
  tpl.phase.resize(S * tpl.bursts.size());
  for (std::size_t i = 0; i < tpl.amplitude.size(); ++i) {
    const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
    tpl.amplitude[i] = sign * (0.4 + 0.6 * u01(rng));
    tpl.phase[i] = 2.0 * std::numbers::pi * u01(rng);
  }
  return tpl;
}

SignalSynthesizer::ParticipantStyle SignalSynthesizer::style_for(int participant) const {
  std::mt19937_64 rng(mix_seed({cfg_.world_seed, kStyleKey, static_cast<std::uint64_t>(participant)}));
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const double k = cfg_.participant_shift;
  const std::size_t S = cfg_.channels * cfg_.axes;
  ParticipantStyle st;
  st.freq_scale = 1.0 + k * 0.12 * sym(rng);
  st.time_shift = k * 0.06 * sym(rng);
  st.gain.resize(S);
  st.phase.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    st.gain[s] = std::exp(k * 0.4 * sym(rng));
    st.phase[s] = k * 1.0 * sym(rng);
  }
  return st;
}

void SignalSynthesizer::render(const TokenTemplate& tpl, const ParticipantStyle& style, std::size_t t_len,
                               std::size_t offset, double time_jitter, double amp_jitter, std::span<double> out,
                               std::size_t out_len) const {
  const std::size_t S = cfg_.channels * cfg_.axes;
  const std::size_t B = tpl.bursts.size();
  for (std::size_t t = 0; t < t_len && offset + t < out_len; ++t) {
    const double u = (static_cast<double>(t) + 0.5) / static_cast<double>(t_len);
    const double sec = static_cast<double>(t) / cfg_.sample_rate_hz;
    for (std::size_t j = 0; j < B; ++j) {
      const auto& b = tpl.bursts[j];
      const double z = (u - b.center - style.time_shift - time_jitter) / b.width;
      const double env = std::exp(-0.5 * z * z) * (1.0 + amp_jitter);
      if (env < 1e-12) continue;
      const double w = 2.0 * std::numbers::pi * b.freq_hz * style.freq_scale * sec;
      for (std::size_t s = 0; s < S; ++s) {
        const double v = style.gain[s] * tpl.amplitude[s * B + j] * env * std::sin(w + tpl.phase[s * B + j] + style.phase[s]);
        out[(offset + t) * S + s] += v;
      }
    }
  }
}

std::vector<double> SignalSynthesizer::clean_template(int token_id, int participant, std::size_t t_len) const {
  if (token_id < 1 || token_id > vocab_size()) throw InvalidParameter("token id out of range: " + std::to_string(token_id));
  const std::size_t S = cfg_.channels * cfg_.axes;
  std::vector<double> buf(t_len * S, 0.0);
  render(templates_[static_cast<std::size_t>(token_id - 1)], style_for(participant), t_len, 0, 0.0, 0.0, buf, t_len);
  return buf;
}

double SignalSynthesizer::template_correlation(int token_a, int token_b, int participant, std::size_t t_len) const {
  const auto a = clean_template(token_a, participant, t_len);
  const auto b = clean_template(token_b, participant, t_len);
  const std::size_t S = cfg_.channels * cfg_.axes;
  double worst = 0.0;
  std::vector<double> x(t_len), y(t_len);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t t = 0; t < t_len; ++t) {
      x[t] = a[t * S + s];
      y[t] = b[t * S + s];
    }
    worst = std::max(worst, std::abs(pearson(x, y)));
  }
  return worst;
}

signal::RawWindow SignalSynthesizer::sequence_window(std::span<const int> tokens, int participant, std::size_t t_len,
                                                     std::size_t word_len, std::uint64_t seed) const {
  if (tokens.empty()) throw InvalidParameter("sequence window needs at least one token");
  if (t_len < 16) throw InvalidParameter("synthetic windows need at least 16 steps");
  if (word_len < 1 || word_len > t_len) throw InvalidParameter("word length must lie in [1, window length]");
  for (int tok : tokens)
    if (tok < 1 || tok > vocab_size()) throw InvalidParameter("token id out of range: " + std::to_string(tok));

  std::vector<std::uint64_t> key = {cfg_.world_seed, kRecordingKey, static_cast<std::uint64_t>(participant), seed,
                                    t_len, word_len};
  std::uint64_t mixed = 0;
  for (auto k : key) mixed = splitmix64(mixed ^ splitmix64(k));
  for (int tok : tokens) mixed = splitmix64(mixed ^ static_cast<std::uint64_t>(tok));
  std::mt19937_64 rng(mixed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const std::size_t S = cfg_.channels * cfg_.axes;
  const std::size_t n = tokens.size();
  std::vector<std::size_t> starts(n, 0);
  if (n * word_len <= t_len) {
    const std::size_t pad = (t_len - n * word_len) / 2;
    for (std::size_t i = 0; i < n; ++i) starts[i] = pad + i * word_len;
  } else {
    const std::size_t stride = (t_len - word_len) / (n - 1);
    for (std::size_t i = 0; i < n; ++i) starts[i] = i * stride;
  }

  const auto style = style_for(participant);
  std::vector<double> buf(t_len * S, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double time_jitter = 0.02 * gauss(rng);
    const double amp_jitter = 0.1 * gauss(rng);
    render(templates_[static_cast<std::size_t>(tokens[i] - 1)], style, word_len, starts[i], time_jitter, amp_jitter,
           buf, t_len);
  }

  // Sensor offset and slow motion drift per series, then white jitter.
  for (std::size_t s = 0; s < S; ++s) {
    const double level = gauss(rng);
    const double drift_amp = 0.5 * u01(rng);
    const double drift_hz = 0.1 + 0.4 * u01(rng);
    const double drift_phase = 2.0 * std::numbers::pi * u01(rng);
    for (std::size_t t = 0; t < t_len; ++t) {
      const double sec = static_cast<double>(t) / cfg_.sample_rate_hz;
      buf[t * S + s] += level + drift_amp * std::sin(2.0 * std::numbers::pi * drift_hz * sec + drift_phase);
    }
  }
  for (double& v : buf) v += cfg_.jitter_std * gauss(rng);

  signal::RawWindow w(t_len, cfg_.channels, cfg_.axes, cfg_.sample_rate_hz);
  for (std::size_t i = 0; i < buf.size(); ++i) w.values[i] = static_cast<float>(buf[i]);
  return w;
}

signal::RawWindow SignalSynthesizer::token_window(int token_id, int participant, std::size_t t_len,
                                                  std::uint64_t seed) const {
  const int tokens[1] = {token_id};
  return sequence_window(tokens, participant, t_len, t_len, seed);
}

signal::RawWindow synthesize_token_signal(const Vocabulary& vocab, int token_id, int participant, std::size_t t_len,
                                          std::uint64_t seed) {
  const SignalSynthesizer synth(vocab.size());
  return synth.token_window(token_id, participant, t_len, seed);
}

CorpusSpec CorpusSpec::standard(const Vocabulary& vocab) {
  CorpusSpec spec;
  for (const auto& w : Vocabulary::standard_words()) spec.word_ids.push_back(vocab.id(w));
  for (const auto& p : Vocabulary::standard_phrases()) spec.phrase_ids.push_back(vocab.id(p));
  for (const auto& s : Vocabulary::standard_sentences()) spec.sentences.push_back(vocab.encode(s));
  return spec;
}

std::vector<LabeledSample> generate_corpus(const Vocabulary& vocab, const CorpusSpec& spec, std::uint64_t seed,
                                           const SynthesisConfig& synth_cfg) {
  if (spec.participants < 1) throw InvalidParameter("corpus needs at least one participant");
  if (spec.samples_per_word < 0 || spec.repeats_per_phrase < 0) throw InvalidParameter("repetition counts must be >= 0");
  const SignalSynthesizer synth(vocab.size(), synth_cfg);
  std::vector<LabeledSample> out;
  std::uint64_t next_id = 1;
  auto recording_seed = [&](std::uint64_t kind, std::uint64_t p, std::uint64_t item, std::uint64_t rep) {
    return mix_seed({seed, kind, p, item, rep});
  };
  for (int p = 0; p < spec.participants; ++p) {
    const auto up = static_cast<std::uint64_t>(p);
    for (int w : spec.word_ids) {
      for (int r = 0; r < spec.samples_per_word; ++r) {
        LabeledSample s;
        s.id = next_id++;
        s.data = synth.token_window(w, p, spec.word_len, recording_seed(1, up, static_cast<std::uint64_t>(w), r));
        s.labels = {w};
        s.participant = p;
        s.kind = SampleKind::word;
        out.push_back(std::move(s));
      }
    }
    for (int ph : spec.phrase_ids) {
      for (int r = 0; r < spec.repeats_per_phrase; ++r) {
        LabeledSample s;
        s.id = next_id++;
        s.data = synth.token_window(ph, p, spec.sentence_len, recording_seed(2, up, static_cast<std::uint64_t>(ph), r));
        s.labels = {ph};
        s.participant = p;
        s.kind = SampleKind::phrase;
        out.push_back(std::move(s));
      }
    }
    for (std::size_t si = 0; si < spec.sentences.size(); ++si) {
      for (int r = 0; r < spec.repeats_per_phrase; ++r) {
        LabeledSample s;
        s.id = next_id++;
        s.data = synth.sequence_window(spec.sentences[si], p, spec.sentence_len, spec.word_len,
                                       recording_seed(3, up, si, r));
        s.labels = spec.sentences[si];
        s.participant = p;
        s.kind = SampleKind::sentence;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace ssir::data

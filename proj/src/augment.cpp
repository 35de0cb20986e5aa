// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "ssir/dataset.hpp"
#include "ssir/errors.hpp"
#include "ssir/random.hpp"

namespace ssir::data {

namespace {

constexpr int kMinConcatWords = 2;
constexpr int kMaxConcatWords = 6;
constexpr int kMinPerClass = 10;

std::vector<std::size_t> choose_concat_sources(std::size_t pool, int n_words, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n_words));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

signal::RawWindow concat_windows(const std::vector<const LabeledSample*>& parts) {
  const auto& first = parts.front()->raw();
  std::size_t total = 0;
  for (const auto* p : parts) {
    const auto& w = p->raw();
    if (w.channels != first.channels || w.axes != first.axes)
      throw InvalidParameter("concatenated windows must share channel and axis counts");
    total += w.steps;
  }
  signal::RawWindow out(total, first.channels, first.axes, first.sample_rate_hz);
  auto it = out.values.begin();
  for (const auto* p : parts) it = std::copy(p->raw().values.begin(), p->raw().values.end(), it);
  return out;
}

}  // namespace

std::string to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::word: return "word";
    case SampleKind::phrase: return "phrase";
    case SampleKind::sentence: return "sentence";
    case SampleKind::augmented: return "augmented";
  }
  return "unknown";
}

SampleKind parse_sample_kind(std::string_view s) {
  if (s == "word") return SampleKind::word;
  if (s == "phrase") return SampleKind::phrase;
  if (s == "sentence") return SampleKind::sentence;
  if (s == "augmented") return SampleKind::augmented;
  throw InvalidParameter("unknown sample kind: " + std::string(s));
}

const signal::RawWindow& LabeledSample::raw() const {
  const auto* w = std::get_if<signal::RawWindow>(&data);
  if (w == nullptr) throw InvalidParameter("sample " + provenance() + " holds features, not a raw window");
  return *w;
}

bool LabeledSample::materialized() const {
  if (const auto* w = std::get_if<signal::RawWindow>(&data)) return w->steps > 0;
  return std::get<signal::FeatureSequence>(data).steps > 0;
}

std::string LabeledSample::provenance() const {
  std::string p = "id=" + std::to_string(id) + " participant=" + std::to_string(participant) + " kind=" + to_string(kind);
  if (recipe) {
    p += recipe->op == AugmentRecipe::Op::concat ? " concat[" : " noise[";
    for (std::size_t i = 0; i < recipe->sources.size(); ++i) p += (i ? "," : "") + std::to_string(recipe->sources[i]);
    p += "]";
  }
  return p;
}

LabeledSample concat_augment(std::span<const LabeledSample> samples, int n_words, std::uint64_t seed) {
  if (n_words < kMinConcatWords || n_words > kMaxConcatWords)
    throw InvalidParameter("concatenation takes between 2 and 6 words, got " + std::to_string(n_words));
  if (samples.empty()) throw InvalidParameter("concatenation needs at least one source word");
  for (const auto& s : samples) {
    if (!s.is_raw()) throw InvalidParameter("concatenation sources must all be raw windows");
    if (s.kind != SampleKind::word || s.labels.size() != 1)
      throw InvalidParameter("concatenation sources must be single-word recordings");
    if (!s.materialized()) throw InvalidParameter("concatenation source " + s.provenance() + " is not materialized");
  }
  const auto idx = choose_concat_sources(samples.size(), n_words, seed);
  std::vector<const LabeledSample*> parts;
  LabeledSample out;
  AugmentRecipe recipe{AugmentRecipe::Op::concat, {}, seed};
  for (auto i : idx) {
    parts.push_back(&samples[i]);
    out.labels.push_back(samples[i].labels.front());
    recipe.sources.push_back(samples[i].id);
  }
  out.data = concat_windows(parts);
  out.participant = parts.front()->participant;
  out.kind = SampleKind::augmented;
  out.recipe = std::move(recipe);
  return out;
}

LabeledSample noise_augment(const LabeledSample& s, std::uint64_t seed) {
  const auto& w = s.raw();
  if (!s.materialized()) throw InvalidParameter("noise source " + s.provenance() + " is not materialized");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  signal::RawWindow out = w;
  for (std::size_t c = 0; c < w.channels; ++c) {
    for (std::size_t a = 0; a < w.axes; ++a) {
      auto x = w.series(c, a);
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(x.size());
      double ss = 0.0;
      for (double v : x) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(x.size())) / 3.0;
      for (double& v : x) v += sd * gauss(rng);
      out.set_series(c, a, x);
    }
  }
  LabeledSample result;
  result.data = std::move(out);
  result.labels = s.labels;
  result.participant = s.participant;
  result.kind = SampleKind::augmented;
  result.recipe = AugmentRecipe{AugmentRecipe::Op::noise, {s.id}, seed};
  return result;
}

DatasetSplit build_splits(const Vocabulary& vocab, std::vector<LabeledSample> samples, std::uint64_t seed,
                          int augment_factor) {
  if (augment_factor < 1) throw InvalidParameter("augment factor must be >= 1");
  if (samples.empty()) throw InsufficientData("no samples to split");

  std::set<std::uint64_t> ids;
  std::uint64_t max_id = 0;
  for (const auto& s : samples) {
    if (s.kind == SampleKind::augmented) throw InvalidParameter("splits are built from original recordings only");
    if (s.labels.empty()) throw InvalidParameter("sample " + s.provenance() + " has no labels");
    for (int l : s.labels)
      if (l < 1 || l > vocab.size()) throw InvalidParameter("sample " + s.provenance() + " has a label outside the vocabulary");
    if (!ids.insert(s.id).second) throw InvalidParameter("duplicate sample id " + std::to_string(s.id));
    max_id = std::max(max_id, s.id);
  }

  // Stratify by the full label sequence, so each sentence is its own class.
  std::map<std::vector<int>, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < samples.size(); ++i) classes[samples[i].labels].push_back(i);

  DatasetSplit split;
  split.vocabulary = vocab;
  split.seed = seed;
  std::uint64_t class_index = 0;
  for (auto& [labels, members] : classes) {
    if (static_cast<int>(members.size()) < kMinPerClass) {
      std::string name;
      for (int l : labels) name += (name.empty() ? "" : " ") + vocab.token(l);
      throw InsufficientData("class '" + name + "' has " + std::to_string(members.size()) +
                             " samples; at least 10 are required");
    }
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });
    std::mt19937_64 rng(mix_seed({seed, 0x53504c54, class_index++}));
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n = members.size();
    const auto n_train = static_cast<std::size_t>(std::lround(0.70 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::lround(0.15 * static_cast<double>(n)));
    for (std::size_t k = 0; k < n; ++k) {
      auto& dst = k < n_train ? split.train : (k < n_train + n_val ? split.validation : split.test);
      dst.push_back(std::move(samples[members[k]]));
    }
  }
  auto by_id = [](const LabeledSample& a, const LabeledSample& b) { return a.id < b.id; };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.validation.begin(), split.validation.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);

  const std::size_t n_orig = split.train.size();
  const std::size_t n_aug = static_cast<std::size_t>(augment_factor - 1) * n_orig;
  std::vector<std::size_t> word_pool;
  for (std::size_t i = 0; i < n_orig; ++i)
    if (split.train[i].kind == SampleKind::word) word_pool.push_back(i);

  std::mt19937_64 rng(mix_seed({seed, 0x41554721}));
  std::uniform_int_distribution<int> n_words_dist(kMinConcatWords, kMaxConcatWords);
  std::uniform_int_distribution<std::size_t> any_source(0, n_orig - 1);
  split.train.reserve(n_orig + n_aug);
  for (std::size_t i = 0; i < n_aug; ++i) {
    const std::uint64_t aug_seed = rng();
    const bool concat = !word_pool.empty() && (rng() & 1ULL) == 0;
    LabeledSample s;
    s.id = max_id + 1 + i;
    s.kind = SampleKind::augmented;
    if (concat) {
      const int n_words = n_words_dist(rng);
      const auto idx = choose_concat_sources(word_pool.size(), n_words, aug_seed);
      AugmentRecipe recipe{AugmentRecipe::Op::concat, {}, aug_seed};
      for (auto k : idx) {
        const auto& src = split.train[word_pool[k]];
        recipe.sources.push_back(src.id);
        s.labels.push_back(src.labels.front());
      }
      s.participant = split.train[word_pool[idx.front()]].participant;
      s.recipe = std::move(recipe);
    } else {
      const auto& src = split.train[any_source(rng)];
      s.labels = src.labels;
      s.participant = src.participant;
      s.recipe = AugmentRecipe{AugmentRecipe::Op::noise, {src.id}, aug_seed};
    }
    split.train.push_back(std::move(s));
  }
  return split;
}

SampleResolver::SampleResolver(const DatasetSplit& split) {
  for (const auto& s : split.train)
    if (s.kind != SampleKind::augmented) train_originals_.emplace(s.id, &s);
}

LabeledSample SampleResolver::materialize(const LabeledSample& s) const {
  if (s.materialized()) return s;
  if (!s.recipe) throw InvalidParameter("sample " + s.provenance() + " has neither payload nor recipe");
  std::vector<const LabeledSample*> parts;
  for (auto src : s.recipe->sources) {
    const auto it = train_originals_.find(src);
    if (it == train_originals_.end())
      throw InvalidParameter("augmented sample " + s.provenance() + " references non-training recording " +
                             std::to_string(src));
    parts.push_back(it->second);
  }
  LabeledSample out;
  if (s.recipe->op == AugmentRecipe::Op::noise) {
    if (parts.size() != 1) throw InvalidParameter("noise recipe must have exactly one source");
    out = noise_augment(*parts.front(), s.recipe->seed);
  } else {
    if (parts.empty()) throw InvalidParameter("concat recipe has no sources");
    out.data = concat_windows(parts);
    out.recipe = s.recipe;
  }
  out.id = s.id;
  out.labels = s.labels;
  out.participant = s.participant;
  out.kind = SampleKind::augmented;
  return out;
}

void check_no_leakage(const DatasetSplit& split) {
  std::set<std::uint64_t> seen;
  std::set<std::uint64_t> originals;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& s : *part) {
      if (!seen.insert(s.id).second) throw InvalidParameter("sample id " + std::to_string(s.id) + " appears twice");
      if (part != &split.train && s.kind == SampleKind::augmented)
        throw InvalidParameter("augmented sample " + s.provenance() + " outside the training split");
    }
  }
  for (const auto& s : split.train)
    if (s.kind != SampleKind::augmented) originals.insert(s.id);
  for (const auto& s : split.train) {
    if (!s.recipe) continue;
    for (auto src : s.recipe->sources)
      if (!originals.contains(src))
        throw InvalidParameter("augmented sample " + s.provenance() + " draws on non-training recording " +
                               std::to_string(src));
  }
}

}  // namespace ssir::data

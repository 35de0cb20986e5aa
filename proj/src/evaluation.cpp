// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ssir/errors.hpp"
#include "ssir/random.hpp"

namespace ssir::eval {

using nlohmann::json;

Alignment align(std::span<const int> ref, std::span<const int> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  struct Cell {
    std::size_t cost = 0;
    std::size_t hits = 0;
    char move = 0;  // 'm' diagonal, 'd' deletion, 'i' insertion
  };
  std::vector<Cell> dp((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cell& { return dp[i * (m + 1) + j]; };
  auto better = [](std::size_t cost, std::size_t hits, const Cell& c) {
    return cost < c.cost || (cost == c.cost && hits > c.hits);
  };
  for (std::size_t i = 1; i <= n; ++i) at(i, 0) = {i, 0, 'd'};
  for (std::size_t j = 1; j <= m; ++j) at(0, j) = {j, 0, 'i'};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      const Cell& diag = at(i - 1, j - 1);
      Cell best{diag.cost + (same ? 0 : 1), diag.hits + (same ? 1 : 0), 'm'};
      const Cell& up = at(i - 1, j);
      if (better(up.cost + 1, up.hits, best)) best = {up.cost + 1, up.hits, 'd'};
      const Cell& left = at(i, j - 1);
      if (better(left.cost + 1, left.hits, best)) best = {left.cost + 1, left.hits, 'i'};
      at(i, j) = best;
    }
  }
  Alignment a;
  a.ref_length = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const char move = at(i, j).move;
    if (move == 'm') {
      if (ref[i - 1] == hyp[j - 1]) ++a.hits;
      else ++a.substitutions;
      --i;
      --j;
    } else if (move == 'd') {
      ++a.deletions;
      --i;
    } else {
      ++a.insertions;
      --j;
    }
  }
  return a;
}

namespace {

void check_pairs(std::size_t refs, std::size_t hyps) {
  if (refs == 0) throw InvalidParameter("word accuracy needs at least one reference");
  if (refs != hyps) throw InvalidParameter("reference and hypothesis lists differ in length");
}

std::vector<std::vector<int>> ids_of(const std::vector<ctc::DecodeResult>& hyps) {
  std::vector<std::vector<int>> out;
  out.reserve(hyps.size());
  for (const auto& h : hyps) out.push_back(h.ids);
  return out;
}

std::string decoder_name(int beam_width) {
  return beam_width <= 1 ? "greedy" : "beam(width=" + std::to_string(beam_width) + ")";
}

}  // namespace

double word_accuracy(const std::vector<std::vector<int>>& refs, const std::vector<std::vector<int>>& hyps) {
  check_pairs(refs.size(), hyps.size());
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto a = align(refs[i], hyps[i]);
    hits += a.hits;
    total += a.ref_length;
  }
  if (total == 0) throw InvalidParameter("references contain no words");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double word_accuracy(const std::vector<std::vector<int>>& refs, const std::vector<ctc::DecodeResult>& hyps) {
  return word_accuracy(refs, ids_of(hyps));
}

double insertion_rate(const std::vector<std::vector<int>>& refs, const std::vector<std::vector<int>>& hyps) {
  check_pairs(refs.size(), hyps.size());
  std::size_t ins = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto a = align(refs[i], hyps[i]);
    ins += a.insertions;
    total += a.ref_length;
  }
  if (total == 0) throw InvalidParameter("references contain no words");
  return static_cast<double>(ins) / static_cast<double>(total);
}

std::vector<ctc::DecodeResult> decode(model::ModelParams& params,
                                      std::span<const signal::FeatureSequence* const> inputs, int beam_width,
                                      std::size_t batch_size) {
  if (batch_size == 0) throw InvalidParameter("batch_size must be >= 1");
  ad::NoGradGuard no_grad;
  const std::size_t classes = params.config.output_dim();
  std::vector<ctc::DecodeResult> out;
  out.reserve(inputs.size());
  for (std::size_t begin = 0; begin < inputs.size(); begin += batch_size) {
    const auto chunk = inputs.subspan(begin, std::min(batch_size, inputs.size() - begin));
    const auto fwd = model::forward(params, chunk, model::ForwardOptions{});
    const auto offsets = fwd.frames.offsets();
    const auto logits = fwd.ctc_logits.values();
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const std::size_t steps = fwd.frames.lengths[i];
      const auto lattice =
          ctc::LogProbLattice::from_logits(steps, classes, logits.subspan(offsets[i] * classes, steps * classes));
      out.push_back(beam_width <= 1 ? ctc::greedy_decode(lattice) : ctc::beam_decode(lattice, beam_width));
    }
  }
  return out;
}

std::vector<ctc::DecodeResult> decode_samples(model::ModelParams& params, std::span<const data::LabeledSample> samples,
                                              const signal::InputSelection& inputs, int beam_width) {
  std::vector<signal::FeatureSequence> features;
  features.reserve(samples.size());
  for (const auto& s : samples) features.push_back(train::sample_features(s, inputs));
  std::vector<const signal::FeatureSequence*> ptrs;
  for (const auto& f : features) ptrs.push_back(&f);
  return decode(params, ptrs, beam_width);
}

std::map<std::size_t, GroupStat> eval_by_length(const std::vector<std::vector<int>>& refs,
                                                const std::vector<std::vector<int>>& hyps) {
  check_pairs(refs.size(), hyps.size());
  std::map<std::size_t, std::vector<double>> groups;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].empty()) throw InvalidParameter("reference " + std::to_string(i) + " is empty");
    const auto a = align(refs[i], hyps[i]);
    groups[refs[i].size()].push_back(static_cast<double>(a.hits) / static_cast<double>(a.ref_length));
  }
  std::map<std::size_t, GroupStat> out;
  for (const auto& [len, acc] : groups) {
    GroupStat g;
    g.count = acc.size();
    g.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(g.count);
    double ss = 0.0;
    for (double a : acc) ss += (a - g.mean) * (a - g.mean);
    g.std = std::sqrt(ss / static_cast<double>(g.count));
    out.emplace(len, g);
  }
  return out;
}

std::map<std::size_t, GroupStat> eval_by_length(model::ModelParams& params,
                                                std::span<const data::LabeledSample> test,
                                                const signal::InputSelection& inputs, int beam_width) {
  std::vector<std::vector<int>> refs;
  for (const auto& s : test) refs.push_back(s.labels);
  return eval_by_length(refs, ids_of(decode_samples(params, test, inputs, beam_width)));
}

EvalReport evaluate(model::ModelParams& params, std::span<const data::LabeledSample> samples,
                    const signal::InputSelection& inputs, int beam_width) {
  std::vector<std::vector<int>> refs;
  for (const auto& s : samples) refs.push_back(s.labels);
  const auto hyps = ids_of(decode_samples(params, samples, inputs, beam_width));
  EvalReport r;
  r.samples = samples.size();
  r.decoder = decoder_name(beam_width);
  r.word_accuracy = word_accuracy(refs, hyps);
  r.insertion_rate = insertion_rate(refs, hyps);
  r.per_length = eval_by_length(refs, hyps);
  return r;
}

std::string AblationRow::key() const {
  std::string k = mode + ":";
  for (std::size_t i = 0; i < indices.size(); ++i) k += (i ? "," : "") + std::to_string(indices[i]);
  return k;
}

json to_json(const EvalReport& r) {
  json j;
  j["word_accuracy"] = r.word_accuracy;
  j["insertion_rate"] = r.insertion_rate;
  j["samples"] = r.samples;
  j["decoder"] = r.decoder;
  json lengths = json::object();
  for (const auto& [len, g] : r.per_length)
    lengths[std::to_string(len)] = {{"mean", g.mean}, {"std", g.std}, {"count", g.count}};
  j["per_length"] = std::move(lengths);
  json parts = json::object();
  for (const auto& [p, a] : r.per_participant)
    parts[std::to_string(p)] = {{"standard", a.standard}, {"blind", a.blind}, {"few_shot", a.few_shot}};
  j["per_participant"] = std::move(parts);
  json abl = json::array();
  for (const auto& row : r.ablation)
    abl.push_back({{"key", row.key()},
                   {"mode", row.mode},
                   {"group", row.group},
                   {"indices", row.indices},
                   {"accuracy", row.accuracy}});
  j["ablation"] = std::move(abl);
  return j;
}

// ---- cross-participant ----

std::map<int, ParticipantAccuracy> eval_cross_participant(const data::Vocabulary& vocab,
                                                          std::span<const data::LabeledSample> corpus,
                                                          const train::TrainConfig& cfg,
                                                          const model::ModelConfig& model_cfg,
                                                          const CrossParticipantOptions& opts) {
  std::set<int> present;
  for (const auto& s : corpus) {
    if (s.kind == data::SampleKind::augmented) throw InvalidParameter("cross-participant runs take original recordings");
    present.insert(s.participant);
  }
  if (present.size() < 2) throw InsufficientData("cross-participant evaluation needs at least two participants");
  std::vector<int> targets = opts.participants.empty() ? std::vector<int>(present.begin(), present.end())
                                                       : opts.participants;
  for (int p : targets)
    if (!present.contains(p)) throw InvalidParameter("participant " + std::to_string(p) + " has no recordings");

  // Few-shot draws k recordings from every label sequence of the held-out participant.
  for (int p : targets) {
    std::map<std::vector<int>, std::size_t> counts;
    for (const auto& s : corpus)
      if (s.participant == p) ++counts[s.labels];
    for (const auto& [labels, count] : counts)
      if (count < opts.few_shot_k)
        throw InvalidParameter("few_shot_k=" + std::to_string(opts.few_shot_k) + " exceeds the " +
                               std::to_string(count) + " recordings of a class for participant " + std::to_string(p));
  }

  train::TrainOptions base;
  base.inputs = opts.inputs;
  std::map<int, ParticipantAccuracy> out;
  for (int p : targets) {
    std::vector<data::LabeledSample> own;
    std::vector<data::LabeledSample> others;
    for (const auto& s : corpus) (s.participant == p ? own : others).push_back(s);
    const auto up = static_cast<std::uint64_t>(p);
    ParticipantAccuracy acc;

    {
      const auto split = data::build_splits(vocab, own, mix_seed({cfg.seed, 0x5354440aULL, up}), opts.augment_factor);
      auto r = train::train(split, cfg, model_cfg, base);
      acc.standard = evaluate(r.params, split.test, opts.inputs, cfg.beam_width).word_accuracy;
    }

    const auto blind_split =
        data::build_splits(vocab, others, mix_seed({cfg.seed, 0x424c4e44ULL, up}), opts.augment_factor);
    auto blind = train::train(blind_split, cfg, model_cfg, base);

    std::map<std::vector<int>, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < own.size(); ++i) classes[own[i].labels].push_back(i);
    std::vector<data::LabeledSample> shots;
    std::vector<data::LabeledSample> rest;
    std::vector<bool> is_shot(own.size(), false);
    std::uint64_t class_index = 0;
    for (auto& [labels, members] : classes) {
      std::mt19937_64 rng(mix_seed({cfg.seed, 0x46455753ULL, up, class_index++}));
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t k = 0; k < opts.few_shot_k; ++k) is_shot[members[k]] = true;
    }
    for (std::size_t i = 0; i < own.size(); ++i) (is_shot[i] ? shots : rest).push_back(own[i]);
    if (rest.empty()) throw InvalidParameter("few-shot selection leaves no recordings to evaluate");

    acc.blind = evaluate(blind.params, rest, opts.inputs, cfg.beam_width).word_accuracy;
    if (shots.empty()) {
      acc.few_shot = acc.blind;
    } else {
      data::DatasetSplit ft;
      ft.vocabulary = vocab;
      ft.seed = cfg.seed;
      ft.train = std::move(shots);
      train::TrainOptions tune = base;
      tune.init = &blind.params;
      tune.lr = cfg.few_shot_lr;
      tune.epochs = cfg.few_shot_epochs;
      auto tuned = train::train(ft, cfg, model_cfg, tune);
      acc.few_shot = evaluate(tuned.params, rest, opts.inputs, cfg.beam_width).word_accuracy;
    }
    out.emplace(p, acc);
  }
  return out;
}

// ---- ablation ----

AblationMode parse_ablation_mode(std::string_view s) {
  if (s == "channels") return AblationMode::channels;
  if (s == "axes") return AblationMode::axes;
  throw InvalidParameter("ablation mode must be 'channels' or 'axes', got '" + std::string(s) + "'");
}

std::string to_string(AblationMode m) { return m == AblationMode::channels ? "channels" : "axes"; }

signal::InputSelection selection_for(AblationMode mode, std::span<const int> indices) {
  auto sel = signal::InputSelection::all();
  (mode == AblationMode::channels ? sel.channels : sel.axes).assign(indices.begin(), indices.end());
  return sel;
}

std::vector<double> ablate(const data::DatasetSplit& split, const train::TrainConfig& cfg,
                           const model::ModelConfig& model_cfg, std::span<const signal::InputSelection> subsets) {
  if (subsets.empty()) throw InvalidParameter("ablation needs at least one subset");
  for (const auto& sel : subsets) {
    if (sel.channels.empty() || sel.axes.empty()) throw InvalidParameter("ablation subsets must be non-empty");
    for (int c : sel.channels)
      if (c < 0 || c > 5) throw InvalidParameter("channel index " + std::to_string(c) + " outside 0..5");
    for (int a : sel.axes)
      if (a < 0 || a > 5) throw InvalidParameter("axis index " + std::to_string(a) + " outside 0..5");
  }
  std::vector<double> out;
  for (const auto& sel : subsets) {
    model::ModelConfig mcfg = model_cfg;
    mcfg.input_dim = sel.feature_dim();
    train::TrainOptions opts;
    opts.inputs = sel;
    auto r = train::train(split, cfg, mcfg, opts);
    out.push_back(evaluate(r.params, split.test, sel, cfg.beam_width).word_accuracy);
  }
  return out;
}

std::vector<std::vector<int>> cumulative_subsets(std::span<const double> single_accuracy) {
  std::vector<int> rank(single_accuracy.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](int a, int b) { return single_accuracy[a] > single_accuracy[b]; });
  std::vector<std::vector<int>> out;
  for (std::size_t size = 2; size <= rank.size(); ++size) {
    std::vector<int> subset(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(size));
    std::sort(subset.begin(), subset.end());
    out.push_back(std::move(subset));
  }
  return out;
}

std::vector<AblationRow> ablate_mode(const data::DatasetSplit& split, const train::TrainConfig& cfg,
                                     const model::ModelConfig& model_cfg, AblationMode mode) {
  constexpr int kIndices = 6;
  std::vector<signal::InputSelection> singles;
  for (int i = 0; i < kIndices; ++i) singles.push_back(selection_for(mode, std::vector<int>{i}));
  const auto single_acc = ablate(split, cfg, model_cfg, singles);

  std::vector<AblationRow> rows;
  for (int i = 0; i < kIndices; ++i) rows.push_back({to_string(mode), "single", {i}, single_acc[i]});
  const auto cumulative = cumulative_subsets(single_acc);
  std::vector<signal::InputSelection> sels;
  for (const auto& idx : cumulative) sels.push_back(selection_for(mode, idx));
  const auto cum_acc = ablate(split, cfg, model_cfg, sels);
  for (std::size_t i = 0; i < cumulative.size(); ++i)
    rows.push_back({to_string(mode), "cumulative", cumulative[i], cum_acc[i]});
  return rows;
}

}  // namespace ssir::eval

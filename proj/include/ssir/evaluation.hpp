// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssir/ctc.hpp"
#include "ssir/dataset.hpp"
#include "ssir/model.hpp"
#include "ssir/trainer.hpp"

namespace ssir::eval {

// Levenshtein alignment of a hypothesis against a reference. Among
// minimum-cost alignments the one with the most hits is chosen.
struct Alignment {
  std::size_t hits = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_length = 0;

  std::size_t edits() const { return substitutions + deletions + insertions; }
};

Alignment align(std::span<const int> ref, std::span<const int> hyp);

// Sum of hits over sum of reference lengths. Throws InvalidParameter on empty
// or mismatched lists.
double word_accuracy(const std::vector<std::vector<int>>& refs, const std::vector<std::vector<int>>& hyps);
double word_accuracy(const std::vector<std::vector<int>>& refs, const std::vector<ctc::DecodeResult>& hyps);
// Insertions over reference words.
double insertion_rate(const std::vector<std::vector<int>>& refs, const std::vector<std::vector<int>>& hyps);

// Decodes feature sequences in inference mode; beam_width <= 1 is greedy.
std::vector<ctc::DecodeResult> decode(model::ModelParams& params,
                                      std::span<const signal::FeatureSequence* const> inputs, int beam_width,
                                      std::size_t batch_size = 32);

std::vector<ctc::DecodeResult> decode_samples(model::ModelParams& params, std::span<const data::LabeledSample> samples,
                                              const signal::InputSelection& inputs, int beam_width);

struct GroupStat {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

struct ParticipantAccuracy {
  double standard = 0.0;
  double blind = 0.0;
  double few_shot = 0.0;
};

struct AblationRow {
  std::string mode;   // "channels" or "axes"
  std::string group;  // "single" or "cumulative"
  std::vector<int> indices;
  double accuracy = 0.0;

  std::string key() const;
};

struct EvalReport {
  double word_accuracy = 0.0;
  double insertion_rate = 0.0;
  std::size_t samples = 0;
  std::string decoder;
  std::map<std::size_t, GroupStat> per_length;
  std::map<int, ParticipantAccuracy> per_participant;
  std::vector<AblationRow> ablation;
};

nlohmann::json to_json(const EvalReport& r);

// Word accuracy, insertion rate and per-length groups over `samples`.
EvalReport evaluate(model::ModelParams& params, std::span<const data::LabeledSample> samples,
                    const signal::InputSelection& inputs, int beam_width);

// Groups samples by label length; per group, mean and population std of the
// per-sample word accuracy.
std::map<std::size_t, GroupStat> eval_by_length(const std::vector<std::vector<int>>& refs,
                                                const std::vector<std::vector<int>>& hyps);
std::map<std::size_t, GroupStat> eval_by_length(model::ModelParams& params,
                                                std::span<const data::LabeledSample> test,
                                                const signal::InputSelection& inputs, int beam_width);

struct CrossParticipantOptions {
  std::size_t few_shot_k = 5;
  int augment_factor = data::kDefaultAugmentFactor;
  signal::InputSelection inputs = signal::InputSelection::all();
  // Restricts the run to these participants; empty means all.
  std::vector<int> participants;
};

// standard: train and test within the participant. blind: train on every other
// participant, test on the held-out one. few_shot: the blind model fine-tuned on
// k recordings per label sequence of the held-out participant. blind and
// few_shot are both scored on the held-out recordings not used for fine-tuning.
std::map<int, ParticipantAccuracy> eval_cross_participant(const data::Vocabulary& vocab,
                                                          std::span<const data::LabeledSample> corpus,
                                                          const train::TrainConfig& cfg,
                                                          const model::ModelConfig& model_cfg,
                                                          const CrossParticipantOptions& opts);

// Retrains on each subset and reports test word accuracy. Each selection must
// be non-empty with channel and axis indices in 0..5.
std::vector<double> ablate(const data::DatasetSplit& split, const train::TrainConfig& cfg,
                           const model::ModelConfig& model_cfg, std::span<const signal::InputSelection> subsets);

enum class AblationMode { channels, axes };
AblationMode parse_ablation_mode(std::string_view s);
std::string to_string(AblationMode m);

signal::InputSelection selection_for(AblationMode mode, std::span<const int> indices);

// Six single-index runs, then cumulative sets of size 2..6 that add indices in
// order of decreasing single-index accuracy (ties by index).
std::vector<AblationRow> ablate_mode(const data::DatasetSplit& split, const train::TrainConfig& cfg,
                                     const model::ModelConfig& model_cfg, AblationMode mode);

// Cumulative index sets given single-index accuracies.
std::vector<std::vector<int>> cumulative_subsets(std::span<const double> single_accuracy);

}  // namespace ssir::eval

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ssir/dataset.hpp"
#include "ssir/model.hpp"
#include "ssir/signal.hpp"

namespace ssir::train {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  double ce_weight = 1.0;
  std::uint64_t seed = 0;
  int beam_width = 8;
  // Caps the batches drawn from each shuffled epoch; 0 uses the whole training split.
  std::size_t max_batches_per_epoch = 0;
  std::size_t few_shot_epochs = 5;
  double few_shot_lr = 5e-4;

  // Throws InvalidParameter.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// ---- optimizer ----

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t t = 0;

  static AdamState for_params(const model::ModelParams& params);
};

// One Adam update of a flat buffer at step t (1-based). With `decay`, theta
// also shrinks by lr * weight_decay * theta, independent of the gradient.
void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::int64_t t, double lr, double weight_decay, bool decay);

// Applies the gradients accumulated on every trainable tensor; missing grads count as zero.
void adam_step(model::ModelParams& params, AdamState& state, const TrainConfig& cfg);
void adam_step(model::ModelParams& params, AdamState& state, double lr, double weight_decay);

// ---- features ----

// Features for the samples of one split. Originals are computed once and
// cached; augmented samples are rebuilt from their recipe on every request.
class FeatureStore {
 public:
  FeatureStore(const data::DatasetSplit& split, signal::InputSelection inputs,
               signal::PreprocessConfig preprocess = {});
  FeatureStore(const FeatureStore&) = delete;
  FeatureStore& operator=(const FeatureStore&) = delete;

  std::shared_ptr<const signal::FeatureSequence> features(const data::LabeledSample& s) const;
  // Raw steps, known without materializing recipes.
  std::size_t steps(const data::LabeledSample& s) const;
  const signal::InputSelection& inputs() const { return inputs_; }
  const data::DatasetSplit& split() const { return *split_; }

 private:
  const data::DatasetSplit* split_;
  data::SampleResolver resolver_;
  signal::InputSelection inputs_;
  signal::PreprocessConfig preprocess_;
  std::unordered_map<std::uint64_t, std::size_t> original_steps_;
  mutable std::unordered_map<std::uint64_t, std::shared_ptr<const signal::FeatureSequence>> cache_;
};

signal::FeatureSequence sample_features(const data::LabeledSample& s, const signal::InputSelection& inputs,
                                        const signal::PreprocessConfig& preprocess = {});

// ---- training ----

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_word_accuracy = 0.0;
  double wall_time_s = 0.0;
};

void to_json(nlohmann::json& j, const EpochRecord& r);

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;  // 0 when the starting parameters were kept
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainOptions {
  signal::InputSelection inputs = signal::InputSelection::all();
  // Fine-tunes these parameters instead of initializing fresh ones.
  const model::ModelParams* init = nullptr;
  // Overrides cfg.lr / cfg.epochs when non-zero.
  double lr = 0.0;
  std::size_t epochs = 0;
  EpochCallback on_epoch;
};

// Loss per batch: mean CTC over the batch plus ce_weight times mean
// cross-entropy of the classification head over samples with one label.
// Returns the parameters of the epoch with the best validation word accuracy
// (greedy decoding; earliest epoch wins ties). With an empty validation split
// the final parameters are returned.
TrainResult train(const data::DatasetSplit& split, const TrainConfig& cfg, const model::ModelConfig& model_cfg,
                  const TrainOptions& opts = {});

// Batch loss as used by train(); exposed for gradient checks.
ad::Tensor batch_loss(model::ModelParams& params, std::span<const signal::FeatureSequence* const> batch,
                      const std::vector<std::vector<int>>& targets, double ce_weight,
                      const model::ForwardOptions& fwd);

// Throws InfeasibleTarget naming the first training sample whose label
// sequence cannot fit in its down-sampled frame count.
void check_feasible(const FeatureStore& store, const model::ModelConfig& model_cfg);

}  // namespace ssir::train

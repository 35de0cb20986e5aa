// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "ssir/ctc.hpp"
#include "ssir/errors.hpp"
#include "ssir/evaluation.hpp"
#include "ssir/random.hpp"

namespace ssir::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidParameter("lr must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw InvalidParameter("weight_decay must be >= 0");
  if (batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
  if (epochs < 1) throw InvalidParameter("epochs must be >= 1");
  if (!(ce_weight >= 0.0) || !std::isfinite(ce_weight)) throw InvalidParameter("ce_weight must be >= 0");
  if (beam_width < 1) throw InvalidParameter("beam_width must be >= 1");
  if (!(few_shot_lr > 0.0)) throw InvalidParameter("few_shot_lr must be positive");
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"lr", c.lr},
       {"weight_decay", c.weight_decay},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"ce_weight", c.ce_weight},
       {"seed", c.seed},
       {"beam_width", c.beam_width},
       {"max_batches_per_epoch", c.max_batches_per_epoch},
       {"few_shot_epochs", c.few_shot_epochs},
       {"few_shot_lr", c.few_shot_lr}};
}

void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d;
  c.lr = j.value("lr", d.lr);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.epochs = j.value("epochs", d.epochs);
  c.ce_weight = j.value("ce_weight", d.ce_weight);
  c.seed = j.value("seed", d.seed);
  c.beam_width = j.value("beam_width", d.beam_width);
  c.max_batches_per_epoch = j.value("max_batches_per_epoch", d.max_batches_per_epoch);
  c.few_shot_epochs = j.value("few_shot_epochs", d.few_shot_epochs);
  c.few_shot_lr = j.value("few_shot_lr", d.few_shot_lr);
}

void to_json(json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch},
       {"train_loss", r.train_loss},
       {"val_word_accuracy", r.val_word_accuracy},
       {"wall_time_s", r.wall_time_s}};
}

// ---- optimizer ----

AdamState AdamState::for_params(const model::ModelParams& params) {
  AdamState s;
  for (const auto& e : params.entries()) {
    const std::size_t n = e.trainable ? e.tensor.size() : 0;
    s.m.emplace_back(n, 0.0);
    s.v.emplace_back(n, 0.0);
  }
  return s;
}

void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::int64_t t, double lr, double weight_decay, bool decay) {
  if (t < 1) throw InvalidParameter("adam step count starts at 1");
  if (grad.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size())
    throw ShapeError("adam buffers differ in size");
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    double step = lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    if (decay) step += lr * weight_decay * theta[i];
    theta[i] -= step;
  }
}

void adam_step(model::ModelParams& params, AdamState& state, double lr, double weight_decay) {
  auto& entries = params.entries();
  if (state.m.size() != entries.size()) throw ShapeError("adam state does not match the parameter list");
  ++state.t;
  std::vector<double> zeros;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    if (!e.trainable) continue;
    auto theta = e.tensor.mutable_values();
    std::span<const double> g = e.tensor.grad();
    if (g.empty()) {
      zeros.assign(theta.size(), 0.0);
      g = zeros;
    }
    adam_update(theta, g, state.m[i], state.v[i], state.t, lr, weight_decay, e.decay);
  }
}

void adam_step(model::ModelParams& params, AdamState& state, const TrainConfig& cfg) {
  adam_step(params, state, cfg.lr, cfg.weight_decay);
}

// ---- features ----

signal::FeatureSequence sample_features(const data::LabeledSample& s, const signal::InputSelection& inputs,
                                        const signal::PreprocessConfig& preprocess) {
  if (!s.is_raw()) {
    const auto& f = std::get<signal::FeatureSequence>(s.data);
    if (f.dims != inputs.feature_dim())
      throw ShapeError("sample " + s.provenance() + " stores " + std::to_string(f.dims) + " features, model expects " +
                       std::to_string(inputs.feature_dim()));
    return f;
  }
  auto f = signal::extract_features(s.raw(), inputs, preprocess);
  f.source = s.provenance();
  return f;
}

FeatureStore::FeatureStore(const data::DatasetSplit& split, signal::InputSelection inputs,
                           signal::PreprocessConfig preprocess)
    : split_(&split), resolver_(split), inputs_(std::move(inputs)), preprocess_(preprocess) {
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& s : *part) {
      if (!s.materialized()) continue;
      original_steps_[s.id] = s.is_raw() ? s.raw().steps : std::get<signal::FeatureSequence>(s.data).steps;
    }
  }
}

std::size_t FeatureStore::steps(const data::LabeledSample& s) const {
  if (s.materialized()) return s.is_raw() ? s.raw().steps : std::get<signal::FeatureSequence>(s.data).steps;
  if (!s.recipe) throw InvalidParameter("sample " + s.provenance() + " has neither payload nor recipe");
  if (s.recipe->op == data::AugmentRecipe::Op::noise) {
    if (s.recipe->sources.size() != 1) throw InvalidParameter("noise recipe must have exactly one source");
  }
  std::size_t total = 0;
  for (auto src : s.recipe->sources) {
    const auto it = original_steps_.find(src);
    if (it == original_steps_.end())
      throw InvalidParameter("sample " + s.provenance() + " references unknown recording " + std::to_string(src));
    total += it->second;
  }
  return total;
}

std::shared_ptr<const signal::FeatureSequence> FeatureStore::features(const data::LabeledSample& s) const {
  if (s.materialized()) {
    if (const auto it = cache_.find(s.id); it != cache_.end()) return it->second;
    auto f = std::make_shared<const signal::FeatureSequence>(sample_features(s, inputs_, preprocess_));
    cache_.emplace(s.id, f);
    return f;
  }
  const auto built = resolver_.materialize(s);
  return std::make_shared<const signal::FeatureSequence>(sample_features(built, inputs_, preprocess_));
}

void check_feasible(const FeatureStore& store, const model::ModelConfig& model_cfg) {
  for (const auto& s : store.split().train) {
    const std::size_t frames = model_cfg.output_length(store.steps(s));
    const std::size_t need = ctc::min_frames(s.labels);
    if (frames < need)
      throw InfeasibleTarget("label sequence of length " + std::to_string(s.labels.size()) + " needs " +
                                 std::to_string(need) + " frames but the model emits " + std::to_string(frames),
                             s.provenance());
  }
}

// ---- training ----

ad::Tensor batch_loss(model::ModelParams& params, std::span<const signal::FeatureSequence* const> batch,
                      const std::vector<std::vector<int>>& targets, double ce_weight,
                      const model::ForwardOptions& fwd) {
  if (batch.size() != targets.size()) throw InvalidParameter("batch and targets differ in length");
  auto out = model::forward(params, batch, fwd);
  ad::Tensor loss = ctc::ctc_loss_batch(out.ctc_logits, out.frames, targets);
  if (ce_weight <= 0.0) return loss;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> classes;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].size() != 1) continue;
    rows.push_back(i);
    classes.push_back(static_cast<std::size_t>(targets[i].front() - 1));
  }
  if (rows.empty()) return loss;
  const auto logp = ad::log_softmax(ad::select_rows(out.cls_logits, rows));
  const auto ce = ad::scale(ad::mean(ad::pick(logp, classes)), -ce_weight);
  return ad::add(loss, ce);
}

namespace {

double validation_accuracy(model::ModelParams& params, const std::vector<const signal::FeatureSequence*>& inputs,
                           const std::vector<std::vector<int>>& refs) {
  if (inputs.empty()) return 0.0;
  return eval::word_accuracy(refs, eval::decode(params, inputs, 1));
}

}  // namespace

TrainResult train(const data::DatasetSplit& split, const TrainConfig& cfg, const model::ModelConfig& model_cfg,
                  const TrainOptions& opts) {
  cfg.validate();
  const model::ModelConfig mcfg = opts.init ? opts.init->config : model_cfg;
  mcfg.validate();
  if (mcfg.input_dim != opts.inputs.feature_dim())
    throw InvalidParameter("model input_dim " + std::to_string(mcfg.input_dim) + " does not match the " +
                           std::to_string(opts.inputs.feature_dim()) + " selected features");
  if (static_cast<int>(mcfg.vocab_size) != split.vocabulary.size())
    throw InvalidParameter("model vocab_size does not match the dataset vocabulary");
  const double lr = opts.lr > 0.0 ? opts.lr : cfg.lr;
  const std::size_t epochs = opts.epochs > 0 ? opts.epochs : cfg.epochs;

  TrainResult result;
  result.params = opts.init ? opts.init->clone() : model::init_params(mcfg, mix_seed({cfg.seed, 0x494e4954ULL}));
  if (split.train.empty()) {
    if (opts.init) return result;
    throw InsufficientData("training split is empty");
  }
  data::check_no_leakage(split);
  FeatureStore store(split, opts.inputs);
  check_feasible(store, mcfg);

  std::vector<std::shared_ptr<const signal::FeatureSequence>> val_owned;
  std::vector<const signal::FeatureSequence*> val_inputs;
  std::vector<std::vector<int>> val_refs;
  for (const auto& s : split.validation) {
    val_owned.push_back(store.features(s));
    val_inputs.push_back(val_owned.back().get());
    val_refs.push_back(s.labels);
  }

  auto& params = result.params;
  model::ModelParams best = params.clone();
  double best_val = -1.0;
  if (opts.init && !val_inputs.empty()) best_val = validation_accuracy(params, val_inputs, val_refs);
  result.best_val_accuracy = std::max(best_val, 0.0);

  AdamState adam = AdamState::for_params(params);
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = split.train.size();
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed({cfg.seed, 0x53485546ULL, epoch}));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    if (cfg.max_batches_per_epoch > 0) n_batches = std::min(n_batches, cfg.max_batches_per_epoch);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      std::vector<std::shared_ptr<const signal::FeatureSequence>> owned;
      std::vector<const signal::FeatureSequence*> inputs;
      std::vector<std::vector<int>> targets;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& s = split.train[order[k]];
        owned.push_back(store.features(s));
        inputs.push_back(owned.back().get());
        targets.push_back(s.labels);
      }
      params.zero_grad();
      model::ForwardOptions fwd;
      fwd.train = true;
      fwd.seed = mix_seed({cfg.seed, 0x44524f50ULL, epoch, b});
      const auto loss = batch_loss(params, inputs, targets, cfg.ce_weight, fwd);
      ad::backward(loss);
      adam_step(params, adam, lr, cfg.weight_decay);
      loss_sum += loss.item();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n_batches);
    rec.val_word_accuracy = validation_accuracy(params, val_inputs, val_refs);
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);
    if (opts.on_epoch) opts.on_epoch(rec);

    if (val_inputs.empty() || rec.val_word_accuracy > best_val) {
      best_val = rec.val_word_accuracy;
      best.assign_from(params);
      result.best_epoch = epoch;
      result.best_val_accuracy = rec.val_word_accuracy;
    }
  }
  params.assign_from(best);
  return result;
}

}  // namespace ssir::train

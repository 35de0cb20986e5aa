// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssir/ops.hpp"
#include "ssir/signal.hpp"

namespace ssir::model {

struct ModelConfig {
  std::size_t input_dim = 36;
  std::size_t hidden_dim = 128;
  std::size_t n_conv_blocks = 3;
  std::size_t n_attn_blocks = 3;
  std::size_t n_heads = 4;
  std::size_t attn_window = 8;
  std::size_t kernel_size = 5;
  std::size_t ffn_mult = 2;
  std::size_t downsample_stride = 2;
  double dropout_p = 0.1;
  std::size_t vocab_size = 24;

  std::size_t output_dim() const { return vocab_size + 1; }
  // Throws InvalidParameter.
  void validate() const;
  // Frames after the down-sampling block.
  std::size_t output_length(std::size_t input_steps) const;
  // Input frames on either side that reach one down-sampled frame through the conv stack.
  std::size_t conv_receptive_radius() const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Named tensors in a fixed creation order. Trainable tensors require grad;
// batch-norm running statistics are stored alongside as plain buffers.
class ModelParams {
 public:
  struct Entry {
    std::string name;
    ad::Tensor tensor;
    bool trainable = true;
    // Decoupled weight decay applies to matrices and kernels only.
    bool decay = false;
  };

  ModelConfig config;

  void add(std::string name, ad::Tensor t, bool trainable, bool decay);
  ad::Tensor& at(const std::string& name);
  const ad::Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  // Deep copy: fresh leaf tensors with the same values.
  ModelParams clone() const;
  // Copies values from `other`, which must have the same layout.
  void assign_from(const ModelParams& other);
  std::size_t parameter_count() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

// Weights/kernels: uniform in +-1/sqrt(fan_in). Biases zero, norm scales one.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// allowed[i * (t_len + 1) + j]; index 0 is the global token.
std::vector<std::uint8_t> band_mask(std::size_t t_len, std::size_t window);

enum class AttentionImpl { banded, dense_masked };

struct ForwardOptions {
  bool train = false;
  std::uint64_t seed = 0;
  AttentionImpl attention = AttentionImpl::banded;
  // Global token attends only to itself, so its state never depends on the input.
  bool isolate_global_token = false;
};

struct ForwardOutput {
  ad::Tensor ctc_logits;  // [sum T'', V+1]
  ad::Segments frames;    // T'' per sequence
  ad::Tensor cls_logits;  // [batch, V]
};

// Batched forward over packed feature sequences.
ForwardOutput forward(ModelParams& params, std::span<const signal::FeatureSequence* const> batch,
                      const ForwardOptions& opts);
ForwardOutput forward(ModelParams& params, const signal::FeatureSequence& x, const ForwardOptions& opts);

}  // namespace ssir::model

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/model.hpp"

#include <cmath>
#include <random>

#include "ssir/errors.hpp"
#include "ssir/random.hpp"

namespace ssir::model {

using ad::Segments;
using ad::Tensor;

void ModelConfig::validate() const {
  if (input_dim < 1) throw InvalidParameter("input_dim must be >= 1");
  if (hidden_dim < 1) throw InvalidParameter("hidden_dim must be >= 1");
  if (n_heads < 1 || hidden_dim % n_heads != 0) throw InvalidParameter("hidden_dim must be divisible by n_heads");
  if (n_conv_blocks < 2) throw InvalidParameter("the conv stack needs a projection block and a down-sampling block");
  if (attn_window < 1) throw InvalidParameter("attn_window must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw InvalidParameter("kernel_size must be odd");
  if (downsample_stride < 1) throw InvalidParameter("downsample_stride must be >= 1");
  if (ffn_mult < 1) throw InvalidParameter("ffn_mult must be >= 1");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw InvalidParameter("dropout_p must lie in [0, 1)");
  if (vocab_size < 1) throw InvalidParameter("vocab_size must be >= 1");
}

std::size_t ModelConfig::output_length(std::size_t input_steps) const {
  return (input_steps + downsample_stride - 1) / downsample_stride;
}

std::size_t ModelConfig::conv_receptive_radius() const {
  const std::size_t in_frames = (kernel_size / 2) * n_conv_blocks;
  return (in_frames + downsample_stride - 1) / downsample_stride;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"input_dim", c.input_dim},     {"hidden_dim", c.hidden_dim},
       {"n_conv_blocks", c.n_conv_blocks}, {"n_attn_blocks", c.n_attn_blocks},
       {"n_heads", c.n_heads},         {"attn_window", c.attn_window},
       {"kernel_size", c.kernel_size}, {"ffn_mult", c.ffn_mult},
       {"downsample_stride", c.downsample_stride}, {"dropout_p", c.dropout_p},
       {"vocab_size", c.vocab_size},   {"output_dim", c.output_dim()}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.input_dim = j.value("input_dim", d.input_dim);
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.n_conv_blocks = j.value("n_conv_blocks", d.n_conv_blocks);
  c.n_attn_blocks = j.value("n_attn_blocks", d.n_attn_blocks);
  c.n_heads = j.value("n_heads", d.n_heads);
  c.attn_window = j.value("attn_window", d.attn_window);
  c.kernel_size = j.value("kernel_size", d.kernel_size);
  c.ffn_mult = j.value("ffn_mult", d.ffn_mult);
  c.downsample_stride = j.value("downsample_stride", d.downsample_stride);
  c.dropout_p = j.value("dropout_p", d.dropout_p);
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  if (j.contains("output_dim") && j.at("output_dim").get<std::size_t>() != c.output_dim())
    throw InvalidParameter("output_dim must equal vocab_size + 1");
}

void ModelParams::add(std::string name, Tensor t, bool trainable, bool decay) {
  if (index_.contains(name)) throw InvalidParameter("duplicate parameter " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(t), trainable, decay});
}

Tensor& ModelParams::at(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw InvalidParameter("unknown parameter " + name);
  return entries_[it->second].tensor;
}

const Tensor& ModelParams::at(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw InvalidParameter("unknown parameter " + name);
  return entries_[it->second].tensor;
}

void ModelParams::zero_grad() {
  for (auto& e : entries_)
    if (e.trainable) e.tensor.zero_grad();
}

ModelParams ModelParams::clone() const {
  ModelParams out;
  out.config = config;
  for (const auto& e : entries_) {
    std::vector<double> v(e.tensor.values().begin(), e.tensor.values().end());
    out.add(e.name, e.trainable ? Tensor::parameter(e.tensor.shape(), std::move(v)) : Tensor::constant(e.tensor.shape(), std::move(v)),
            e.trainable, e.decay);
  }
  return out;
}

void ModelParams::assign_from(const ModelParams& other) {
  if (other.entries_.size() != entries_.size()) throw InvalidParameter("parameter layouts differ");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& dst = entries_[i];
    const auto& src = other.entries_[i];
    if (dst.name != src.name || dst.tensor.shape() != src.tensor.shape())
      throw InvalidParameter("parameter layouts differ at " + dst.name);
    std::copy(src.tensor.values().begin(), src.tensor.values().end(), dst.tensor.mutable_values().begin());
  }
  config = other.config;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.tensor.size();
  return n;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  std::mt19937_64 rng(mix_seed({seed, 0x494e4954}));
  auto uniform = [&](ad::Shape shape, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(ad::element_count(shape));
    for (double& x : v) x = u(rng);
    return Tensor::parameter(std::move(shape), std::move(v));
  };
  auto filled = [](std::size_t n, double value, bool trainable) {
    std::vector<double> v(n, value);
    return trainable ? Tensor::parameter({n}, std::move(v)) : Tensor::constant({n}, std::move(v));
  };
  const std::size_t H = cfg.hidden_dim, K = cfg.kernel_size, F = cfg.hidden_dim * cfg.ffn_mult;
  for (std::size_t b = 1; b <= cfg.n_conv_blocks; ++b) {
    const std::string pre = "conv" + std::to_string(b) + ".";
    const std::size_t cin = b == 1 ? cfg.input_dim : H;
    p.add(pre + "kernel", uniform({H, cin, K}, cin * K), true, true);
    p.add(pre + "bias", filled(H, 0.0, true), true, false);
    p.add(pre + "bn_gamma", filled(H, 1.0, true), true, false);
    p.add(pre + "bn_beta", filled(H, 0.0, true), true, false);
    p.add(pre + "bn_running_mean", filled(H, 0.0, false), false, false);
    p.add(pre + "bn_running_var", filled(H, 1.0, false), false, false);
  }
  p.add("global_token", uniform({H}, H), true, false);
  for (std::size_t b = 1; b <= cfg.n_attn_blocks; ++b) {
    const std::string pre = "attn" + std::to_string(b) + ".";
    p.add(pre + "ln1_gamma", filled(H, 1.0, true), true, false);
    p.add(pre + "ln1_beta", filled(H, 0.0, true), true, false);
    for (const char* m : {"q", "k", "v", "o"}) {
      p.add(pre + "W" + m, uniform({H, H}, H), true, true);
      p.add(pre + "b" + m, filled(H, 0.0, true), true, false);
    }
    p.add(pre + "ln2_gamma", filled(H, 1.0, true), true, false);
    p.add(pre + "ln2_beta", filled(H, 0.0, true), true, false);
    p.add(pre + "ffn_W1", uniform({H, F}, H), true, true);
    p.add(pre + "ffn_b1", filled(F, 0.0, true), true, false);
    p.add(pre + "ffn_W2", uniform({F, H}, F), true, true);
    p.add(pre + "ffn_b2", filled(H, 0.0, true), true, false);
  }
  p.add("final_ln_gamma", filled(H, 1.0, true), true, false);
  p.add("final_ln_beta", filled(H, 0.0, true), true, false);
  p.add("head_ctc.W", uniform({H, cfg.output_dim()}, H), true, true);
  p.add("head_ctc.b", filled(cfg.output_dim(), 0.0, true), true, false);
  p.add("head_cls.W", uniform({H, cfg.vocab_size}, H), true, true);
  p.add("head_cls.b", filled(cfg.vocab_size, 0.0, true), true, false);
  return p;
}

std::vector<std::uint8_t> band_mask(std::size_t t_len, std::size_t window) {
  const std::size_t n = t_len + 1;
  std::vector<std::uint8_t> m(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t d = i > j ? i - j : j - i;
      m[i * n + j] = (i == 0 || j == 0 || d <= window) ? 1 : 0;
    }
  return m;
}

namespace {

Tensor dense_masked_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Segments& seg,
                              std::size_t heads, std::size_t window, bool isolate_global) {
  const std::size_t H = q.dim(1), dh = H / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto off = seg.offsets();
  std::vector<Tensor> per_segment;
  for (std::size_t s = 0; s < seg.count(); ++s) {
    const std::size_t len = seg.lengths[s];
    std::vector<std::size_t> rows(len);
    for (std::size_t i = 0; i < len; ++i) rows[i] = off[s] + i;
    auto mask = band_mask(len - 1, window);
    if (isolate_global)
      for (std::size_t j = 1; j < len; ++j) mask[j] = 0;
    const Tensor qs = ad::select_rows(q, rows), ks = ad::select_rows(k, rows), vs = ad::select_rows(v, rows);
    std::vector<Tensor> head_out;
    for (std::size_t h = 0; h < heads; ++h) {
      const Tensor qh = ad::slice_cols(qs, h * dh, (h + 1) * dh);
      const Tensor kh = ad::slice_cols(ks, h * dh, (h + 1) * dh);
      const Tensor vh = ad::slice_cols(vs, h * dh, (h + 1) * dh);
      const Tensor scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), sc);
      head_out.push_back(ad::matmul(ad::masked_softmax(scores, mask), vh));
    }
    per_segment.push_back(ad::concat_cols(head_out));
  }
  return ad::concat_rows(per_segment);
}

}  // namespace

ForwardOutput forward(ModelParams& params, std::span<const signal::FeatureSequence* const> batch,
                      const ForwardOptions& opts) {
  const ModelConfig& cfg = params.config;
  if (batch.empty()) throw InvalidParameter("forward on an empty batch");
  Segments seg;
  std::vector<double> packed;
  for (const auto* x : batch) {
    if (x->dims != cfg.input_dim)
      throw ShapeError("feature dimension " + std::to_string(x->dims) + " does not match model input_dim " +
                       std::to_string(cfg.input_dim));
    if (x->steps < 1) throw ShapeError("empty feature sequence");
    seg.lengths.push_back(x->steps);
    packed.insert(packed.end(), x->values.begin(), x->values.end());
  }
  Tensor h = Tensor::constant({seg.total(), cfg.input_dim}, std::move(packed));

  std::uint64_t dropout_calls = 0;
  auto drop = [&](const Tensor& t) {
    return ad::dropout(t, cfg.dropout_p, mix_seed({opts.seed, 0x44524f50, dropout_calls++}), opts.train);
  };
  const std::size_t pad = cfg.kernel_size / 2;
  auto conv_block = [&](std::size_t b, const Tensor& x, const Segments& s, std::size_t stride) {
    const std::string pre = "conv" + std::to_string(b) + ".";
    Tensor y = ad::conv1d(x, params.at(pre + "kernel"), params.at(pre + "bias"), s, stride, pad);
    y = ad::batchnorm1d(y, params.at(pre + "bn_gamma"), params.at(pre + "bn_beta"), params.at(pre + "bn_running_mean"),
                        params.at(pre + "bn_running_var"), opts.train);
    return drop(ad::relu(y));
  };

  h = conv_block(1, h, seg, 1);
  for (std::size_t b = 2; b < cfg.n_conv_blocks; ++b) h = ad::add(h, conv_block(b, h, seg, 1));
  const Segments frames = ad::conv1d_output(seg, cfg.kernel_size, cfg.downsample_stride, pad);
  h = conv_block(cfg.n_conv_blocks, h, seg, cfg.downsample_stride);

  Segments with_token;
  for (auto len : frames.lengths) with_token.lengths.push_back(len + 1);
  h = ad::prepend_token(h, frames, params.at("global_token"));

  for (std::size_t b = 1; b <= cfg.n_attn_blocks; ++b) {
    const std::string pre = "attn" + std::to_string(b) + ".";
    const Tensor a = ad::layer_norm(h, params.at(pre + "ln1_gamma"), params.at(pre + "ln1_beta"));
    const Tensor q = ad::linear(a, params.at(pre + "Wq"), params.at(pre + "bq"));
    const Tensor k = ad::linear(a, params.at(pre + "Wk"), params.at(pre + "bk"));
    const Tensor v = ad::linear(a, params.at(pre + "Wv"), params.at(pre + "bv"));
    const Tensor att = opts.attention == AttentionImpl::banded
                           ? ad::local_attention(q, k, v, with_token, cfg.n_heads, cfg.attn_window, opts.isolate_global_token)
                           : dense_masked_attention(q, k, v, with_token, cfg.n_heads, cfg.attn_window,
                                                    opts.isolate_global_token);
    h = ad::add(h, drop(ad::linear(att, params.at(pre + "Wo"), params.at(pre + "bo"))));
    const Tensor f = ad::layer_norm(h, params.at(pre + "ln2_gamma"), params.at(pre + "ln2_beta"));
    const Tensor inner = ad::relu(ad::linear(f, params.at(pre + "ffn_W1"), params.at(pre + "ffn_b1")));
    h = ad::add(h, drop(ad::linear(inner, params.at(pre + "ffn_W2"), params.at(pre + "ffn_b2"))));
  }
  h = ad::layer_norm(h, params.at("final_ln_gamma"), params.at("final_ln_beta"));

  std::vector<std::size_t> frame_rows, token_rows;
  frame_rows.reserve(frames.total());
  const auto off = with_token.offsets();
  for (std::size_t s = 0; s < with_token.count(); ++s) {
    token_rows.push_back(off[s]);
    for (std::size_t i = 1; i < with_token.lengths[s]; ++i) frame_rows.push_back(off[s] + i);
  }
  ForwardOutput out;
  out.frames = frames;
  out.ctc_logits = ad::linear(ad::select_rows(h, frame_rows), params.at("head_ctc.W"), params.at("head_ctc.b"));
  out.cls_logits = ad::linear(ad::select_rows(h, token_rows), params.at("head_cls.W"), params.at("head_cls.b"));
  return out;
}

ForwardOutput forward(ModelParams& params, const signal::FeatureSequence& x, const ForwardOptions& opts) {
  const signal::FeatureSequence* one[1] = {&x};
  return forward(params, one, opts);
}

}  // namespace ssir::model

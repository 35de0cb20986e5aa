// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssir/autodiff.hpp"

namespace ssir::ad {

// Variable-length sequences packed row-wise into one [sum(lengths), features] tensor.
struct Segments {
  std::vector<std::size_t> lengths;

  std::size_t count() const { return lengths.size(); }
  std::size_t total() const;
  std::vector<std::size_t> offsets() const;
};

// ---- dense algebra (2-D unless noted) ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& x, Shape shape);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_bias(const Tensor& x, const Tensor& bias);  // [n, m] + [m]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);  // x[n, in] W[in, out] + b[out]
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// ---- elementwise ----
Tensor relu(const Tensor& x);
// Inverted dropout: kept units scaled by 1/(1-p) in training, identity otherwise.
Tensor dropout(const Tensor& x, double p, std::uint64_t seed, bool train);

// ---- normalizers ----
Tensor softmax(const Tensor& x, int axis = -1);
Tensor log_softmax(const Tensor& x);
// Row softmax where allowed[i] == 0 acts as a -inf logit (probability exactly 0).
// Every row needs at least one allowed entry.
Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> allowed);

// Batch statistics over rows in training (running stats updated in place),
// running statistics otherwise.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                   Tensor& running_var, bool train, double momentum = 0.1, double eps = 1e-5);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// ---- indexing ----
Tensor select_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
// out[i] = x[i, cols[i]]
Tensor pick(const Tensor& x, std::span<const std::size_t> cols);

// ---- sequence ops on packed batches ----

// x[N, in] per segment, weight[out, in, kernel], bias[out]; zero padding at
// segment edges so sequences never see each other.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Segments& seg, std::size_t stride,
              std::size_t padding);
Segments conv1d_output(const Segments& seg, std::size_t kernel, std::size_t stride, std::size_t padding);

// Inserts `token` ([features]) as the first row of every segment.
Tensor prepend_token(const Tensor& x, const Segments& seg, const Tensor& token);

// Multi-head attention inside each segment, row 0 being the global token:
// row 0 sees everything, other rows see row 0 and rows within `window`.
// With isolate_global, row 0 attends only to itself.
Tensor local_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Segments& seg, std::size_t heads,
                       std::size_t window, bool isolate_global = false);

}  // namespace ssir::ad

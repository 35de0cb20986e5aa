// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ssir/errors.hpp"

namespace ssir::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using MapM = Eigen::Map<RowMat>;

MapC view(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MapC(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MapM view(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MapM(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_rank(const Tensor& t, std::size_t r, const char* op) {
  if (t.rank() != r)
    throw ShapeError(std::string(op) + " expects a rank-" + std::to_string(r) + " tensor, got " +
                     shape_string(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

Node& in(Node& out, std::size_t i) { return *out.inputs[i]; }

}  // namespace

std::size_t Segments::total() const { return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}); }

std::vector<std::size_t> Segments::offsets() const {
  std::vector<std::size_t> off(lengths.size() + 1, 0);
  for (std::size_t i = 0; i < lengths.size(); ++i) off[i + 1] = off[i] + lengths[i];
  return off;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  std::vector<double> out(n * m);
  view(out, n, m).noalias() = view(a.node()->value, n, k) * view(b.node()->value, k, m);
  return make_result("matmul", {n, m}, std::move(out), {a, b}, [n, k, m](Node& o) {
    auto g = view(o.grad, n, m);
    Node& A = in(o, 0);
    Node& B = in(o, 1);
    if (A.requires_grad) view(A.grad, n, k).noalias() += g * view(B.value, k, m).transpose();
    if (B.requires_grad) view(B.grad, k, m).noalias() += view(A.value, n, k).transpose() * g;
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  view(out, c, r) = view(a.node()->value, r, c).transpose();
  return make_result("transpose", {c, r}, std::move(out), {a}, [r, c](Node& o) {
    view(in(o, 0).grad, r, c) += view(o.grad, c, r).transpose();
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (element_count(shape) != x.size())
    throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {x}, [](Node& o) {
    auto& g = in(o, 0).grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& o) {
    for (std::size_t j = 0; j < 2; ++j) {
      Node& x = in(o, j);
      if (!x.requires_grad) continue;
      for (std::size_t i = 0; i < o.grad.size(); ++i) x.grad[i] += o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& o) {
    Node& A = in(o, 0);
    Node& B = in(o, 1);
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      if (A.requires_grad) A.grad[i] += o.grad[i] * B.value[i];
      if (B.requires_grad) B.grad[i] += o.grad[i] * A.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * s;
  return make_result("scale", a.shape(), std::move(out), {a}, [s](Node& o) {
    auto& g = in(o, 0).grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * o.grad[i];
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_bias");
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (bias.size() != m)
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match " + shape_string(x.shape()));
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto b = bias.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b[j];
  return make_result("add_bias", x.shape(), std::move(out), {x, bias}, [n, m](Node& o) {
    Node& X = in(o, 0);
    Node& B = in(o, 1);
    if (X.requires_grad)
      for (std::size_t i = 0; i < o.grad.size(); ++i) X.grad[i] += o.grad[i];
    if (B.requires_grad)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) B.grad[j] += o.grad[i * m + j];
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) { return add_bias(matmul(x, weight), bias); }

Tensor sum(const Tensor& x) {
  const auto v = x.values();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  return make_result("sum", {1}, {s}, {x}, [](Node& o) {
    for (double& g : in(o, 0).grad) g += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x.values()[i]);
  return make_result("relu", x.shape(), std::move(out), {x}, [](Node& o) {
    Node& X = in(o, 0);
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      if (X.value[i] > 0.0) X.grad[i] += o.grad[i];
  });
}

Tensor dropout(const Tensor& x, double p, std::uint64_t seed, bool train) {
  if (p < 0.0 || p >= 1.0) throw InvalidParameter("dropout probability must lie in [0, 1)");
  if (!train || p == 0.0) return x;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = keep(rng) ? s : 0.0;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * mask[i];
  return make_result("dropout", x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& o) {
    auto& g = in(o, 0).grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * mask[i];
  });
}

namespace {

// Softmax over `len` elements spaced by `stride`.
void softmax_strided(const double* x, double* y, std::size_t len, std::size_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, x[i * stride]);
  double z = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    y[i * stride] = std::exp(x[i * stride] - mx);
    z += y[i * stride];
  }
  for (std::size_t i = 0; i < len; ++i) y[i * stride] /= z;
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
  if (x.rank() == 1) {
    if (axis != 0 && axis != -1) throw ShapeError("softmax: axis out of range for a vector");
    return reshape(softmax(reshape(x, {1, x.size()}), 1), x.shape());
  }
  require_rank(x, 2, "softmax");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (axis == -1) axis = 1;
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0, 1 or -1");
  std::vector<double> out(x.size());
  const double* src = x.node()->value.data();
  // Along axis 1: r rows of c contiguous values; along axis 0: c columns of r strided values.
  const std::size_t groups = axis == 1 ? r : c, len = axis == 1 ? c : r, stride = axis == 1 ? 1 : c;
  auto base = [=](std::size_t g) { return axis == 1 ? g * c : g; };
  for (std::size_t g = 0; g < groups; ++g) softmax_strided(src + base(g), out.data() + base(g), len, stride);
  return make_result("softmax", x.shape(), std::move(out), {x}, [groups, len, stride, base](Node& o) {
    auto& gx = in(o, 0).grad;
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t b = base(g);
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += o.grad[b + i * stride] * o.value[b + i * stride];
      for (std::size_t i = 0; i < len; ++i)
        gx[b + i * stride] += o.value[b + i * stride] * (o.grad[b + i * stride] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  require_rank(x, 2, "log_softmax");
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.size());
  const auto v = x.values();
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, v[i * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(v[i * c + j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = v[i * c + j] - lse;
  }
  return make_result("log_softmax", x.shape(), std::move(out), {x}, [r, c](Node& o) {
    auto& gx = in(o, 0).grad;
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += o.grad[i * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += o.grad[i * c + j] - std::exp(o.value[i * c + j]) * s;
    }
  });
}

Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> allowed) {
  require_rank(x, 2, "masked_softmax");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (allowed.size() != x.size()) throw ShapeError("masked_softmax: mask size does not match " + shape_string(x.shape()));
  std::vector<double> out(x.size(), 0.0);
  const auto v = x.values();
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (allowed[i * c + j]) mx = std::max(mx, v[i * c + j]);
    if (!std::isfinite(mx)) throw InvalidParameter("masked_softmax: row " + std::to_string(i) + " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (allowed[i * c + j]) z += (out[i * c + j] = std::exp(v[i * c + j] - mx));
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  return make_result("masked_softmax", x.shape(), std::move(out), {x}, [r, c](Node& o) {
    auto& gx = in(o, 0).grad;
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += o.grad[i * c + j] * o.value[i * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += o.value[i * c + j] * (o.grad[i * c + j] - dot);
    }
  });
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                   Tensor& running_var, bool train, double momentum, double eps) {
  require_rank(x, 2, "batchnorm1d");
  const std::size_t n = x.dim(0), c = x.dim(1);
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var})
    if (t->size() != c)
      throw ShapeError("batchnorm1d: parameter " + shape_string(t->shape()) + " does not match " + shape_string(x.shape()));
  if (n == 0) throw ShapeError("batchnorm1d on an empty batch");
  const auto v = x.values();
  std::vector<double> mu(c, 0.0), var(c, 0.0);
  if (train) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) mu[j] += v[i * c + j];
    for (double& m : mu) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) var[j] += (v[i * c + j] - mu[j]) * (v[i * c + j] - mu[j]);
    for (double& s : var) s /= static_cast<double>(n);
    auto rm = running_mean.mutable_values();
    auto rv = running_var.mutable_values();
    const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
    for (std::size_t j = 0; j < c; ++j) {
      rm[j] = (1.0 - momentum) * rm[j] + momentum * mu[j];
      rv[j] = (1.0 - momentum) * rv[j] + momentum * var[j] * unbias;
    }
  } else {
    std::copy(running_mean.values().begin(), running_mean.values().end(), mu.begin());
    std::copy(running_var.values().begin(), running_var.values().end(), var.begin());
  }
  std::vector<double> inv(c), xhat(x.size()), out(x.size());
  for (std::size_t j = 0; j < c; ++j) inv[j] = 1.0 / std::sqrt(var[j] + eps);
  const auto g = gamma.values();
  const auto b = beta.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (v[i * c + j] - mu[j]) * inv[j];
      out[i * c + j] = g[j] * xhat[i * c + j] + b[j];
    }
  return make_result("batchnorm1d", x.shape(), std::move(out), {x, gamma, beta},
                     [n, c, train, inv = std::move(inv), xhat = std::move(xhat)](Node& o) {
                       Node& X = in(o, 0);
                       Node& G = in(o, 1);
                       Node& B = in(o, 2);
                       std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t j = 0; j < c; ++j) {
                           sum_dy[j] += o.grad[i * c + j];
                           sum_dy_xhat[j] += o.grad[i * c + j] * xhat[i * c + j];
                         }
                       if (G.requires_grad)
                         for (std::size_t j = 0; j < c; ++j) G.grad[j] += sum_dy_xhat[j];
                       if (B.requires_grad)
                         for (std::size_t j = 0; j < c; ++j) B.grad[j] += sum_dy[j];
                       if (!X.requires_grad) return;
                       const double nn = static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t j = 0; j < c; ++j) {
                           const double dxhat = o.grad[i * c + j] * G.value[j];
                           if (train)
                             X.grad[i * c + j] += inv[j] / nn *
                                                  (nn * dxhat - sum_dy[j] * G.value[j] -
                                                   xhat[i * c + j] * sum_dy_xhat[j] * G.value[j]);
                           else
                             X.grad[i * c + j] += dxhat * inv[j];
                         }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 2, "layer_norm");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (gamma.size() != c || beta.size() != c)
    throw ShapeError("layer_norm: scale/shift do not match " + shape_string(x.shape()));
  const auto v = x.values();
  const auto g = gamma.values();
  const auto b = beta.values();
  std::vector<double> inv(n), xhat(x.size()), out(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += v[i * c + j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (v[i * c + j] - mu) * (v[i * c + j] - mu);
    var /= static_cast<double>(c);
    inv[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (v[i * c + j] - mu) * inv[i];
      out[i * c + j] = g[j] * xhat[i * c + j] + b[j];
    }
  }
  return make_result("layer_norm", x.shape(), std::move(out), {x, gamma, beta},
                     [n, c, inv = std::move(inv), xhat = std::move(xhat)](Node& o) {
                       Node& X = in(o, 0);
                       Node& G = in(o, 1);
                       Node& B = in(o, 2);
                       const double cc = static_cast<double>(c);
                       for (std::size_t i = 0; i < n; ++i) {
                         double s1 = 0.0, s2 = 0.0;
                         for (std::size_t j = 0; j < c; ++j) {
                           const double dy = o.grad[i * c + j];
                           if (G.requires_grad) G.grad[j] += dy * xhat[i * c + j];
                           if (B.requires_grad) B.grad[j] += dy;
                           const double dxhat = dy * G.value[j];
                           s1 += dxhat;
                           s2 += dxhat * xhat[i * c + j];
                         }
                         if (!X.requires_grad) continue;
                         for (std::size_t j = 0; j < c; ++j) {
                           const double dxhat = o.grad[i * c + j] * G.value[j];
                           X.grad[i * c + j] += inv[i] / cc * (cc * dxhat - s1 - xhat[i * c + j] * s2);
                         }
                       }
                     });
}

Tensor select_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank(x, 2, "select_rows");
  const std::size_t n = x.dim(0), c = x.dim(1);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  std::vector<double> out(idx.size() * c);
  const auto v = x.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) throw ShapeError("select_rows: row " + std::to_string(idx[i]) + " outside " + shape_string(x.shape()));
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(idx[i] * c), c, out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  const std::size_t n_out = idx.size();
  return make_result("select_rows", {n_out, c}, std::move(out), {x}, [c, idx = std::move(idx)](Node& o) {
    auto& g = in(o, 0).grad;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += o.grad[i * c + j];
  });
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) { return select_rows(table, ids); }

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (begin > end || end > c) throw ShapeError("slice_cols: range outside " + shape_string(x.shape()));
  const std::size_t w = end - begin;
  std::vector<double> out(n * w);
  const auto v = x.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = v[i * c + begin + j];
  return make_result("slice_cols", {n, w}, std::move(out), {x}, [n, c, w, begin](Node& o) {
    auto& g = in(o, 0).grad;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * c + begin + j] += o.grad[i * w + j];
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t c = parts[0].dim(1);
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.dim(1) != c)
      throw ShapeError("concat_rows: " + shape_string(p.shape()) + " vs " + shape_string(parts[0].shape()));
    n += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(n * c);
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_result("concat_rows", {n, c}, std::move(out), inputs, [](Node& o) {
    std::size_t pos = 0;
    for (auto& p : o.inputs) {
      if (p->requires_grad)
        for (std::size_t i = 0; i < p->value.size(); ++i) p->grad[i] += o.grad[pos + i];
      pos += p->value.size();
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t n = parts[0].dim(0);
  std::size_t c = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != n)
      throw ShapeError("concat_cols: " + shape_string(p.shape()) + " vs " + shape_string(parts[0].shape()));
    c += p.dim(1);
  }
  std::vector<double> out(n * c);
  std::size_t col = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * c + col + j] = p.values()[i * w + j];
    col += w;
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result("concat_cols", {n, c}, std::move(out), inputs, [n, c](Node& o) {
    std::size_t col0 = 0;
    for (auto& p : o.inputs) {
      const std::size_t w = p->shape[1];
      if (p->requires_grad)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) p->grad[i * w + j] += o.grad[i * c + col0 + j];
      col0 += w;
    }
  });
}

Tensor pick(const Tensor& x, std::span<const std::size_t> cols) {
  require_rank(x, 2, "pick");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (cols.size() != n) throw ShapeError("pick: need one column index per row of " + shape_string(x.shape()));
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (idx[i] >= c) throw ShapeError("pick: column " + std::to_string(idx[i]) + " outside " + shape_string(x.shape()));
    out[i] = x.values()[i * c + idx[i]];
  }
  return make_result("pick", {n}, std::move(out), {x}, [c, idx = std::move(idx)](Node& o) {
    auto& g = in(o, 0).grad;
    for (std::size_t i = 0; i < idx.size(); ++i) g[i * c + idx[i]] += o.grad[i];
  });
}

Segments conv1d_output(const Segments& seg, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (kernel == 0 || stride == 0) throw InvalidParameter("conv1d kernel and stride must be positive");
  Segments out;
  out.lengths.reserve(seg.count());
  for (auto t : seg.lengths) {
    if (t + 2 * padding < kernel)
      throw ShapeError("conv1d: sequence of length " + std::to_string(t) + " is shorter than kernel " +
                       std::to_string(kernel));
    out.lengths.push_back((t + 2 * padding - kernel) / stride + 1);
  }
  return out;
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Segments& seg, std::size_t stride,
              std::size_t padding) {
  require_rank(x, 2, "conv1d");
  require_rank(weight, 3, "conv1d");
  const std::size_t cin = x.dim(1), cout = weight.dim(0), K = weight.dim(2);
  if (weight.dim(1) != cin)
    throw ShapeError("conv1d: input " + shape_string(x.shape()) + " does not match kernel " + shape_string(weight.shape()));
  if (bias.size() != cout) throw ShapeError("conv1d: bias " + shape_string(bias.shape()) + " vs kernel " + shape_string(weight.shape()));
  if (seg.total() != x.dim(0)) throw ShapeError("conv1d: segment lengths do not cover " + shape_string(x.shape()));
  const Segments out_seg = conv1d_output(seg, K, stride, padding);
  const std::size_t n_out = out_seg.total();
  const std::size_t width = cin * K;

  // im2col over every segment: cols[r, ci*K + kk] = x[t*stride + kk - padding, ci].
  // `src` remembers the source row (or npos) so backward can scatter.
  std::vector<double> cols(n_out * width, 0.0);
  std::vector<std::size_t> src(n_out * K, static_cast<std::size_t>(-1));
  const auto in_off = seg.offsets();
  const auto v = x.values();
  std::size_t r = 0;
  for (std::size_t s = 0; s < seg.count(); ++s) {
    const auto T = static_cast<std::ptrdiff_t>(seg.lengths[s]);
    for (std::size_t t = 0; t < out_seg.lengths[s]; ++t, ++r) {
      for (std::size_t kk = 0; kk < K; ++kk) {
        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t * stride + kk) - static_cast<std::ptrdiff_t>(padding);
        if (ti < 0 || ti >= T) continue;
        const std::size_t row = in_off[s] + static_cast<std::size_t>(ti);
        src[r * K + kk] = row;
        for (std::size_t ci = 0; ci < cin; ++ci) cols[r * width + ci * K + kk] = v[row * cin + ci];
      }
    }
  }
  std::vector<double> out(n_out * cout);
  auto O = view(out, n_out, cout);
  O.noalias() = view(cols, n_out, width) * view(weight.node()->value, cout, width).transpose();
  const auto b = bias.values();
  for (std::size_t i = 0; i < n_out; ++i)
    for (std::size_t j = 0; j < cout; ++j) out[i * cout + j] += b[j];

  return make_result(
      "conv1d", {n_out, cout}, std::move(out), {x, weight, bias},
      [n_out, cin, cout, K, width, cols = std::move(cols), src = std::move(src)](Node& o) {
        Node& X = in(o, 0);
        Node& W = in(o, 1);
        Node& B = in(o, 2);
        auto G = view(o.grad, n_out, cout);
        if (W.requires_grad) view(W.grad, cout, width).noalias() += G.transpose() * view(cols, n_out, width);
        if (B.requires_grad)
          for (std::size_t i = 0; i < n_out; ++i)
            for (std::size_t j = 0; j < cout; ++j) B.grad[j] += o.grad[i * cout + j];
        if (!X.requires_grad) return;
        std::vector<double> dcols(n_out * width);
        view(dcols, n_out, width).noalias() = G * view(W.value, cout, width);
        for (std::size_t rr = 0; rr < n_out; ++rr)
          for (std::size_t kk = 0; kk < K; ++kk) {
            const std::size_t row = src[rr * K + kk];
            if (row == static_cast<std::size_t>(-1)) continue;
            for (std::size_t ci = 0; ci < cin; ++ci) X.grad[row * cin + ci] += dcols[rr * width + ci * K + kk];
          }
      });
}

Tensor prepend_token(const Tensor& x, const Segments& seg, const Tensor& token) {
  require_rank(x, 2, "prepend_token");
  const std::size_t c = x.dim(1);
  if (token.size() != c) throw ShapeError("prepend_token: token " + shape_string(token.shape()) + " vs " + shape_string(x.shape()));
  if (seg.total() != x.dim(0)) throw ShapeError("prepend_token: segment lengths do not cover " + shape_string(x.shape()));
  const std::size_t n_out = x.dim(0) + seg.count();
  std::vector<double> out(n_out * c);
  // dest[r] = source row of x, or npos for a token row.
  std::vector<std::size_t> dest(n_out);
  std::size_t r = 0, src_row = 0;
  for (auto len : seg.lengths) {
    dest[r++] = static_cast<std::size_t>(-1);
    for (std::size_t t = 0; t < len; ++t) dest[r++] = src_row++;
  }
  for (std::size_t i = 0; i < n_out; ++i) {
    const double* from = dest[i] == static_cast<std::size_t>(-1) ? token.values().data() : x.values().data() + dest[i] * c;
    std::copy_n(from, c, out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return make_result("prepend_token", {n_out, c}, std::move(out), {x, token}, [c, dest = std::move(dest)](Node& o) {
    Node& X = in(o, 0);
    Node& Tok = in(o, 1);
    for (std::size_t i = 0; i < dest.size(); ++i) {
      if (dest[i] == static_cast<std::size_t>(-1)) {
        if (Tok.requires_grad)
          for (std::size_t j = 0; j < c; ++j) Tok.grad[j] += o.grad[i * c + j];
      } else if (X.requires_grad) {
        for (std::size_t j = 0; j < c; ++j) X.grad[dest[i] * c + j] += o.grad[i * c + j];
      }
    }
  });
}

Tensor local_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Segments& seg, std::size_t heads,
                       std::size_t window, bool isolate_global) {
  require_rank(q, 2, "local_attention");
  require_same(q, k, "local_attention");
  require_same(q, v, "local_attention");
  const std::size_t n = q.dim(0), H = q.dim(1);
  if (heads == 0 || H % heads != 0) throw ShapeError("local_attention: width " + std::to_string(H) + " not divisible into heads");
  if (seg.total() != n) throw ShapeError("local_attention: segment lengths do not cover " + shape_string(q.shape()));
  const std::size_t dh = H / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

  // Allowed key rows per query row, flattened; probs laid out [row][head][key].
  std::vector<std::size_t> key_begin(n + 1, 0);
  std::vector<std::size_t> keys;
  const auto off = seg.offsets();
  for (std::size_t s = 0; s < seg.count(); ++s) {
    const std::size_t base = off[s], len = seg.lengths[s];
    for (std::size_t i = 0; i < len; ++i) {
      if (i == 0) {
        const std::size_t lim = isolate_global ? 1 : len;
        for (std::size_t j = 0; j < lim; ++j) keys.push_back(base + j);
      } else {
        keys.push_back(base);
        const std::size_t lo = i > window ? i - window : 1;
        const std::size_t hi = std::min(len - 1, i + window);
        for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) keys.push_back(base + j);
      }
      key_begin[base + i + 1] = keys.size();
    }
  }
  std::vector<double> probs(keys.size() * heads);
  std::vector<double> out(n * H, 0.0);
  const double* Q = q.values().data();
  const double* Kv = k.values().data();
  const double* V = v.values().data();
  std::vector<double> scores;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t kb = key_begin[i], nk = key_begin[i + 1] - kb;
    scores.resize(nk);
    for (std::size_t h = 0; h < heads; ++h) {
      const double* qi = Q + i * H + h * dh;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < nk; ++a) {
        const double* kj = Kv + keys[kb + a] * H + h * dh;
        double d = 0.0;
        for (std::size_t e = 0; e < dh; ++e) d += qi[e] * kj[e];
        scores[a] = d * sc;
        mx = std::max(mx, scores[a]);
      }
      double z = 0.0;
      for (std::size_t a = 0; a < nk; ++a) z += (scores[a] = std::exp(scores[a] - mx));
      double* p = probs.data() + kb * heads + h * nk;
      double* oi = out.data() + i * H + h * dh;
      for (std::size_t a = 0; a < nk; ++a) {
        p[a] = scores[a] / z;
        const double* vj = V + keys[kb + a] * H + h * dh;
        for (std::size_t e = 0; e < dh; ++e) oi[e] += p[a] * vj[e];
      }
    }
  }
  return make_result(
      "local_attention", {n, H}, std::move(out), {q, k, v},
      [n, H, heads, dh, sc, key_begin = std::move(key_begin), keys = std::move(keys), probs = std::move(probs)](Node& o) {
        Node& Qn = in(o, 0);
        Node& Kn = in(o, 1);
        Node& Vn = in(o, 2);
        std::vector<double> dp;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t kb = key_begin[i], nk = key_begin[i + 1] - kb;
          dp.resize(nk);
          for (std::size_t h = 0; h < heads; ++h) {
            const double* go = o.grad.data() + i * H + h * dh;
            const double* p = probs.data() + kb * heads + h * nk;
            double dot = 0.0;
            for (std::size_t a = 0; a < nk; ++a) {
              const std::size_t j = keys[kb + a];
              const double* vj = Vn.value.data() + j * H + h * dh;
              double d = 0.0;
              for (std::size_t e = 0; e < dh; ++e) d += go[e] * vj[e];
              dp[a] = d;
              dot += p[a] * d;
              if (Vn.requires_grad) {
                double* gv = Vn.grad.data() + j * H + h * dh;
                for (std::size_t e = 0; e < dh; ++e) gv[e] += p[a] * go[e];
              }
            }
            const double* qi = Qn.value.data() + i * H + h * dh;
            for (std::size_t a = 0; a < nk; ++a) {
              const double ds = p[a] * (dp[a] - dot) * sc;
              const std::size_t j = keys[kb + a];
              if (Qn.requires_grad) {
                const double* kj = Kn.value.data() + j * H + h * dh;
                double* gq = Qn.grad.data() + i * H + h * dh;
                for (std::size_t e = 0; e < dh; ++e) gq[e] += ds * kj[e];
              }
              if (Kn.requires_grad) {
                double* gk = Kn.grad.data() + j * H + h * dh;
                for (std::size_t e = 0; e < dh; ++e) gk[e] += ds * qi[e];
              }
            }
          }
        }
      });
}

}  // namespace ssir::ad

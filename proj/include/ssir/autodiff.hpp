// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ssir::ad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

// One recorded value. Inputs are held by shared_ptr, so a graph lives exactly
// as long as the tensors that reach it.
struct Node {
  std::uint64_t id = 0;
  std::string op;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad, accumulates into inputs' grads.
  std::function<void(Node&)> backward;

  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v) { return constant({1}, {v}); }

  explicit operator bool() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& op() const { return node_->op; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  // Empty when no gradient has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }
  double item() const;

  // Same values, cut from the graph.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Every node reachable from a root, in topological order (inputs first).
struct Graph {
  std::vector<std::shared_ptr<Node>> nodes;
  static Graph trace(const Tensor& root);
};

// Seeds d(loss)/d(loss) = 1 and runs every recorded backward in exact reverse
// topological order. Gradients accumulate into existing grad buffers.
void backward(const Tensor& loss);

// When enabled, every op result is scanned for NaN/Inf and NumericError is
// thrown. On by default in builds without NDEBUG.
void set_checked_numerics(bool enabled);
bool checked_numerics();

// While alive, op results on this thread record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Records an op result. Inputs that do not require grad are not retained.
Tensor make_result(std::string op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);

// Max over coordinates of |analytic - central difference| / max(1, |analytic|, |numeric|).
// `coords` restricts the probe to a subset of x's coordinates.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h,
                  std::span<const std::size_t> coords = {});

// Same measure for a tensor captured inside `loss`: perturbs `param` in place.
double grad_check_inplace(const std::function<Tensor()>& loss, Tensor& param, double h,
                          std::span<const std::size_t> coords = {});

}  // namespace ssir::ad

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ssir/errors.hpp"

namespace ssir::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};
#ifdef NDEBUG
std::atomic<bool> g_checked{false};
#else
std::atomic<bool> g_checked{true};
#endif

thread_local bool t_no_grad = false;

std::shared_ptr<Node> new_node(std::string op, Shape shape, std::vector<double> value, bool requires_grad) {
  if (element_count(shape) != value.size())
    throw ShapeError("value buffer of " + std::to_string(value.size()) + " elements does not fit shape " +
                     shape_string(shape));
  auto n = std::make_shared<Node>();
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  n->op = std::move(op);
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(new_node("constant", std::move(shape), std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(new_node("parameter", std::move(shape), std::move(values), true));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(element_count(shape), 0.0);
  return Tensor(new_node(requires_grad ? "parameter" : "constant", std::move(shape), std::move(v), requires_grad));
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on a tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

NoGradGuard::NoGradGuard() : previous_(t_no_grad) { t_no_grad = true; }
NoGradGuard::~NoGradGuard() { t_no_grad = previous_; }

void set_checked_numerics(bool enabled) { g_checked.store(enabled); }
bool checked_numerics() { return g_checked.load(); }

Tensor make_result(std::string op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  if (checked_numerics()) {
    for (double v : value)
      if (!std::isfinite(v)) throw NumericError("non-finite value produced by " + op);
  }
  const bool needs = !t_no_grad && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  auto n = new_node(std::move(op), std::move(shape), std::move(value), needs);
  if (needs) {
    n->inputs.reserve(inputs.size());
    for (auto& t : inputs) n->inputs.push_back(t.shared());
    n->backward = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

Graph Graph::trace(const Tensor& root) {
  Graph g;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<std::shared_ptr<Node>, std::size_t>> stack;
  stack.emplace_back(root.shared(), 0);
  seen.insert(root.node());
  // Iterative post-order DFS.
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      auto child = node->inputs[next++];
      if (child && seen.insert(child.get()).second) stack.emplace_back(std::move(child), 0);
    } else {
      g.nodes.push_back(node);
      stack.pop_back();
    }
  }
  return g;
}

void backward(const Tensor& loss) {
  if (!loss) throw InvalidParameter("backward on an empty tensor");
  if (loss.size() != 1) throw InvalidParameter("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  if (!loss.requires_grad()) return;
  const Graph g = Graph::trace(loss);
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = g.nodes.rbegin(); it != g.nodes.rend(); ++it) {
    Node& n = **it;
    if (!n.backward) continue;
    n.ensure_grad();
    for (auto& in : n.inputs)
      if (in->requires_grad) in->ensure_grad();
    n.backward(n);
  }
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h,
                  std::span<const std::size_t> coords) {
  if (!(h > 0.0)) throw InvalidParameter("finite-difference step must be positive");
  Tensor probe = Tensor::parameter(x.shape(), std::vector<double>(x.values().begin(), x.values().end()));
  Tensor out = f(probe);
  backward(out);
  std::vector<double> analytic(probe.size(), 0.0);
  if (!probe.grad().empty()) std::copy(probe.grad().begin(), probe.grad().end(), analytic.begin());

  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(probe.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  double worst = 0.0;
  for (std::size_t i : coords) {
    auto vals = probe.mutable_values();
    const double saved = vals[i];
    vals[i] = saved + h;
    const double up = f(probe.detach()).item();
    vals[i] = saved - h;
    const double down = f(probe.detach()).item();
    vals[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

double grad_check_inplace(const std::function<Tensor()>& loss, Tensor& param, double h,
                          std::span<const std::size_t> coords) {
  if (!(h > 0.0)) throw InvalidParameter("finite-difference step must be positive");
  if (!param.requires_grad()) throw InvalidParameter("grad_check_inplace needs a tensor that requires grad");
  param.zero_grad();
  backward(loss());
  const std::vector<double> analytic(param.grad().begin(), param.grad().end());
  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(param.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  double worst = 0.0;
  for (std::size_t i : coords) {
    auto vals = param.mutable_values();
    const double saved = vals[i];
    vals[i] = saved + h;
    const double up = loss().item();
    vals[i] = saved - h;
    const double down = loss().item();
    vals[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace ssir::ad

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "ssir/errors.hpp"

namespace ssir::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

void validate_target(const LogProbLattice& lattice, std::span<const int> target) {
  if (target.empty()) throw InvalidParameter("CTC target must contain at least one label");
  for (int id : target)
    if (id < 1 || static_cast<std::size_t>(id) >= lattice.classes)
      throw InvalidParameter("CTC target label " + std::to_string(id) + " outside [1, " +
                             std::to_string(lattice.classes - 1) + "]");
}

}  // namespace

LogProbLattice LogProbLattice::from_log_probs(std::size_t steps, std::size_t classes, std::vector<double> log_probs) {
  if (steps < 1 || classes < 2) throw InvalidParameter("lattice needs at least one frame and two classes");
  if (log_probs.size() != steps * classes) throw ShapeError("lattice buffer does not match [steps][classes]");
  for (std::size_t t = 0; t < steps; ++t) {
    double z = kNegInf;
    for (std::size_t k = 0; k < classes; ++k) {
      const double v = log_probs[t * classes + k];
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
        throw InvalidParameter("lattice frame " + std::to_string(t) + " holds an invalid log-probability");
      z = lse(z, v);
    }
    if (std::abs(z) > 1e-9) throw InvalidParameter("lattice frame " + std::to_string(t) + " is not normalized");
  }
  return {steps, classes, std::move(log_probs)};
}

LogProbLattice LogProbLattice::from_logits(std::size_t steps, std::size_t classes, std::span<const double> logits) {
  if (steps < 1 || classes < 2) throw InvalidParameter("lattice needs at least one frame and two classes");
  if (logits.size() != steps * classes) throw ShapeError("logit buffer does not match [steps][classes]");
  LogProbLattice l{steps, classes, std::vector<double>(logits.size())};
  for (std::size_t t = 0; t < steps; ++t) {
    double mx = kNegInf;
    for (std::size_t k = 0; k < classes; ++k) mx = std::max(mx, logits[t * classes + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += std::exp(logits[t * classes + k] - mx);
    const double norm = mx + std::log(z);
    for (std::size_t k = 0; k < classes; ++k) l.log_probs[t * classes + k] = logits[t * classes + k] - norm;
  }
  return l;
}

std::vector<int> extend_with_blanks(std::span<const int> target) {
  std::vector<int> ext;
  ext.reserve(2 * target.size() + 1);
  ext.push_back(kBlank);
  for (int id : target) {
    ext.push_back(id);
    ext.push_back(kBlank);
  }
  return ext;
}

std::size_t min_frames(std::span<const int> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++n;
  return n;
}

std::vector<int> collapse(std::span<const int> path) {
  std::vector<int> out;
  int prev = -1;
  for (int p : path) {
    if (p != prev && p != kBlank) out.push_back(p);
    prev = p;
  }
  return out;
}

ForwardBackward forward_backward(const LogProbLattice& lattice, std::span<const int> target) {
  validate_target(lattice, target);
  const std::size_t T = lattice.steps;
  if (T < min_frames(target))
    throw InfeasibleTarget("target of length " + std::to_string(target.size()) + " needs at least " +
                           std::to_string(min_frames(target)) + " frames, lattice has " + std::to_string(T));
  const auto ext = extend_with_blanks(target);
  const std::size_t S = ext.size();
  ForwardBackward fb;
  fb.states = S;
  fb.log_alpha.assign(T * S, kNegInf);
  fb.log_beta.assign(T * S, kNegInf);
  auto A = [&](std::size_t t, std::size_t s) -> double& { return fb.log_alpha[t * S + s]; };
  auto B = [&](std::size_t t, std::size_t s) -> double& { return fb.log_beta[t * S + s]; };
  auto skip_ok = [&](std::size_t s) { return ext[s] != kBlank && s >= 2 && ext[s] != ext[s - 2]; };

  A(0, 0) = lattice.at(0, kBlank);
  A(0, 1) = lattice.at(0, static_cast<std::size_t>(ext[1]));
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = A(t - 1, s);
      if (s >= 1) a = lse(a, A(t - 1, s - 1));
      if (skip_ok(s)) a = lse(a, A(t - 1, s - 2));
      if (a != kNegInf) A(t, s) = a + lattice.at(t, static_cast<std::size_t>(ext[s]));
    }
  }
  B(T - 1, S - 1) = 0.0;
  B(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = B(t + 1, s) + lattice.at(t + 1, static_cast<std::size_t>(ext[s]));
      if (s + 1 < S) b = lse(b, B(t + 1, s + 1) + lattice.at(t + 1, static_cast<std::size_t>(ext[s + 1])));
      if (s + 2 < S && skip_ok(s + 2)) b = lse(b, B(t + 1, s + 2) + lattice.at(t + 1, static_cast<std::size_t>(ext[s + 2])));
      B(t, s) = b;
    }
  }
  fb.log_likelihood = lse(A(T - 1, S - 1), A(T - 1, S - 2));
  return fb;
}

LossResult ctc_loss(const LogProbLattice& lattice, std::span<const int> target) {
  const auto fb = forward_backward(lattice, target);
  if (fb.log_likelihood == kNegInf)
    throw NumericError("CTC likelihood underflowed to zero for a feasible target");
  const auto ext = extend_with_blanks(target);
  const std::size_t T = lattice.steps, K = lattice.classes, S = fb.states;
  LossResult r;
  r.loss = -fb.log_likelihood;
  r.grad_logits.resize(T * K);
  std::vector<double> occupancy(K);
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      const auto k = static_cast<std::size_t>(ext[s]);
      occupancy[k] = lse(occupancy[k], fb.log_alpha[t * S + s] + fb.log_beta[t * S + s]);
    }
    for (std::size_t k = 0; k < K; ++k)
      r.grad_logits[t * K + k] = std::exp(lattice.at(t, k)) - std::exp(occupancy[k] - fb.log_likelihood);
  }
  return r;
}

double ctc_brute_force(const LogProbLattice& lattice, std::span<const int> target) {
  validate_target(lattice, target);
  const std::size_t T = lattice.steps, K = lattice.classes;
  double paths = 1.0;
  for (std::size_t t = 0; t < T; ++t) paths *= static_cast<double>(K);
  if (paths > 1e6) throw InvalidParameter("brute-force CTC refuses more than 1e6 alignments");
  const std::vector<int> want(target.begin(), target.end());
  std::vector<int> path(T, 0);
  double total = kNegInf;
  while (true) {
    if (collapse(path) == want) {
      double lp = 0.0;
      for (std::size_t t = 0; t < T; ++t) lp += lattice.at(t, static_cast<std::size_t>(path[t]));
      total = lse(total, lp);
    }
    std::size_t t = 0;
    while (t < T && ++path[t] == static_cast<int>(K)) path[t++] = 0;
    if (t == T) break;
  }
  return -total;
}

double sequence_log_prob(const LogProbLattice& lattice, std::span<const int> ids) {
  if (ids.empty()) {
    double lp = 0.0;
    for (std::size_t t = 0; t < lattice.steps; ++t) lp += lattice.at(t, kBlank);
    return lp;
  }
  if (lattice.steps < min_frames(ids)) return kNegInf;
  return forward_backward(lattice, ids).log_likelihood;
}

DecodeResult greedy_decode(const LogProbLattice& lattice) {
  DecodeResult r;
  r.frame_alignment.resize(lattice.steps);
  for (std::size_t t = 0; t < lattice.steps; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < lattice.classes; ++k)
      if (lattice.at(t, k) > lattice.at(t, best)) best = k;
    r.frame_alignment[t] = static_cast<int>(best);
    r.log_prob += lattice.at(t, best);
  }
  r.ids = collapse(r.frame_alignment);
  return r;
}

namespace {

// Prefix beam search; returns the surviving prefixes and whether any step
// had to drop a prefix.
std::vector<std::vector<int>> beam_survivors(const LogProbLattice& lattice, std::size_t width, bool& truncated) {
  struct Mass {
    double blank = kNegInf;
    double non_blank = kNegInf;
    double total() const { return lse(blank, non_blank); }
  };
  using Beam = std::map<std::vector<int>, Mass>;
  Beam beam;
  beam[{}] = Mass{0.0, kNegInf};
  truncated = false;
  const std::size_t K = lattice.classes;
  for (std::size_t t = 0; t < lattice.steps; ++t) {
    Beam next;
    for (const auto& [prefix, m] : beam) {
      const double total = m.total();
      auto& stay = next[prefix];
      stay.blank = lse(stay.blank, total + lattice.at(t, kBlank));
      if (!prefix.empty()) {
        const auto last = static_cast<std::size_t>(prefix.back());
        stay.non_blank = lse(stay.non_blank, m.non_blank + lattice.at(t, last));
      }
      for (std::size_t k = 1; k < K; ++k) {
        auto extended = prefix;
        extended.push_back(static_cast<int>(k));
        auto& e = next[extended];
        const bool repeat = !prefix.empty() && static_cast<std::size_t>(prefix.back()) == k;
        // A repeated label only extends the prefix across a blank.
        e.non_blank = lse(e.non_blank, (repeat ? m.blank : total) + lattice.at(t, k));
      }
    }
    std::vector<std::pair<std::vector<int>, Mass>> ranked(next.begin(), next.end());
    // `next` is ordered lexicographically, so a stable sort keeps that as the tie-break.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.total() > b.second.total(); });
    if (ranked.size() > width) {
      ranked.resize(width);
      truncated = true;
    }
    beam = Beam(ranked.begin(), ranked.end());
  }
  std::vector<std::vector<int>> out;
  for (const auto& [prefix, m] : beam) out.push_back(prefix);
  return out;
}

}  // namespace

DecodeResult beam_decode(const LogProbLattice& lattice, int beam_width) {
  if (beam_width < 1) throw InvalidParameter("beam width must be >= 1");
  // Survivors of every narrower beam join the candidate pool, so a wider beam
  // can never return a less probable sequence than a narrower one.
  std::set<std::vector<int>> pool;
  pool.insert(greedy_decode(lattice).ids);
  for (int w = 1; w <= beam_width; ++w) {
    bool truncated = false;
    for (auto& c : beam_survivors(lattice, static_cast<std::size_t>(w), truncated)) pool.insert(std::move(c));
    if (!truncated) break;  // wider beams keep exactly the same prefixes
  }

  // The pool is ordered lexicographically; strict improvement keeps the smaller sequence on ties.
  DecodeResult best;
  best.log_prob = kNegInf;
  bool have = false;
  for (const auto& c : pool) {
    const double lp = sequence_log_prob(lattice, c);
    if (!have || lp > best.log_prob) {
      best.ids = c;
      best.log_prob = lp;
      have = true;
    }
  }
  return best;
}

ad::Tensor ctc_loss_batch(const ad::Tensor& logits, const ad::Segments& seg,
                          const std::vector<std::vector<int>>& targets) {
  if (logits.rank() != 2) throw ShapeError("ctc_loss_batch expects [frames, classes] logits");
  if (seg.total() != logits.dim(0)) throw ShapeError("ctc_loss_batch: segments do not cover the logits");
  if (targets.size() != seg.count()) throw ShapeError("ctc_loss_batch: one target per segment required");
  if (seg.count() == 0) throw InvalidParameter("ctc_loss_batch on an empty batch");
  const std::size_t K = logits.dim(1);
  const auto off = seg.offsets();
  std::vector<double> grad(logits.size());
  double total = 0.0;
  for (std::size_t s = 0; s < seg.count(); ++s) {
    const auto rows = logits.values().subspan(off[s] * K, seg.lengths[s] * K);
    const auto lattice = LogProbLattice::from_logits(seg.lengths[s], K, rows);
    auto r = ctc_loss(lattice, targets[s]);
    total += r.loss;
    std::copy(r.grad_logits.begin(), r.grad_logits.end(), grad.begin() + static_cast<std::ptrdiff_t>(off[s] * K));
  }
  const double inv_b = 1.0 / static_cast<double>(seg.count());
  return ad::make_result("ctc_loss", {1}, {total * inv_b}, {logits}, [inv_b, grad = std::move(grad)](ad::Node& o) {
    auto& g = o.inputs[0]->grad;
    const double up = o.grad[0] * inv_b;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += up * grad[i];
  });
}

}  // namespace ssir::ctc

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ssir/ops.hpp"

namespace ssir::ctc {

inline constexpr int kBlank = 0;

// Per-frame log-probabilities [steps][classes]; class 0 is the blank.
struct LogProbLattice {
  std::size_t steps = 0;
  std::size_t classes = 0;
  std::vector<double> log_probs;

  // Validates that every row log-sum-exps to 0 within 1e-9.
  static LogProbLattice from_log_probs(std::size_t steps, std::size_t classes, std::vector<double> log_probs);
  // Row-wise log-softmax of unnormalized scores.
  static LogProbLattice from_logits(std::size_t steps, std::size_t classes, std::span<const double> logits);

  double at(std::size_t t, std::size_t k) const { return log_probs[t * classes + k]; }
};

struct LossResult {
  double loss = 0.0;
  // d loss / d logits, where the lattice is log_softmax(logits).
  std::vector<double> grad_logits;
};

// Log-space alpha/beta over the blank-interleaved target (2L+1 states).
// beta_t(s) excludes the emission at t, so alpha_t(s) + beta_t(s) is the log
// mass of all alignments passing through state s at frame t.
struct ForwardBackward {
  std::size_t states = 0;
  std::vector<double> log_alpha;  // [steps][states]
  std::vector<double> log_beta;   // [steps][states]
  double log_likelihood = 0.0;
};

struct DecodeResult {
  std::vector<int> ids;
  double log_prob = 0.0;
  std::vector<int> frame_alignment;
};

std::vector<int> extend_with_blanks(std::span<const int> target);
// Fewest frames that can emit `target`: L plus one per adjacent repeat.
std::size_t min_frames(std::span<const int> target);
// Merge adjacent repeats, then drop blanks.
std::vector<int> collapse(std::span<const int> path);

ForwardBackward forward_backward(const LogProbLattice& lattice, std::span<const int> target);

// Throws InfeasibleTarget when the lattice is too short for the target.
LossResult ctc_loss(const LogProbLattice& lattice, std::span<const int> target);

// Sums P(path) over all classes^steps frame labelings; refuses more than 1e6 paths.
// Returns +inf when no labeling collapses to the target.
double ctc_brute_force(const LogProbLattice& lattice, std::span<const int> target);

// log P(ids | lattice) summed over alignments; -inf when infeasible. Empty ids
// is the all-blank path.
double sequence_log_prob(const LogProbLattice& lattice, std::span<const int> ids);

DecodeResult greedy_decode(const LogProbLattice& lattice);

// Prefix beam search with per-prefix blank/non-blank mass. Survivors of every
// width up to beam_width, plus the greedy hypothesis, are rescored exactly.
// Ties go to the lexicographically smaller id sequence.
DecodeResult beam_decode(const LogProbLattice& lattice, int beam_width);

// Mean CTC loss over the segments of packed logits [sum T, classes].
ad::Tensor ctc_loss_batch(const ad::Tensor& logits, const ad::Segments& seg,
                          const std::vector<std::vector<int>>& targets);

}  // namespace ssir::ctc

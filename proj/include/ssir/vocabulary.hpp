// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssir::data {

inline constexpr int kBlankId = 0;
inline constexpr std::string_view kBlankToken = "<blank>";

// Bijection between token strings and ids 1..V. Id 0 is the CTC blank.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  // 16 English words followed by the 8 Mandarin phrases.
  static Vocabulary standard();
  static const std::vector<std::string>& standard_words();
  static const std::vector<std::string>& standard_phrases();
  static const std::vector<std::vector<std::string>>& standard_sentences();

  int size() const { return static_cast<int>(tokens_.size()); }
  int blank_id() const { return kBlankId; }
  bool empty() const { return tokens_.empty(); }
  bool contains(std::string_view token) const;
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> words) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  // SHA-256 hex over the ordered token list.
  std::string hash() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> token_to_id_;
};

}  // namespace ssir::data

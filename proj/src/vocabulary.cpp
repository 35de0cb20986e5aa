// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/vocabulary.hpp"

#include "ssir/errors.hpp"
#include "ssir/hashing.hpp"

namespace ssir::data {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw InvalidParameter("vocabulary needs at least one token");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    if (t.empty()) throw InvalidParameter("vocabulary tokens must be non-empty");
    if (t == kBlankToken) throw InvalidParameter("the blank symbol cannot be a vocabulary token");
    if (!token_to_id_.emplace(t, static_cast<int>(i) + 1).second)
      throw InvalidParameter("duplicate vocabulary token: " + t);
  }
}

const std::vector<std::string>& Vocabulary::standard_words() {
  static const std::vector<std::string> words = {
      "afternoon", "thanks", "beautiful", "wait",  "breakfast", "want",   "drink", "water",
      "hello",     "welcome", "please",   "what",  "sorry",     "wonder", "test",  "wonderful"};
  return words;
}

const std::vector<std::string>& Vocabulary::standard_phrases() {
  static const std::vector<std::string> phrases = {"tengtong",  "fanshen",     "xiachuang",     "henkaixin",
                                                   "xiexieni",  "woyaoheshui", "woxiangchifan", "tianqizhenhao"};
  return phrases;
}

const std::vector<std::vector<std::string>>& Vocabulary::standard_sentences() {
  static const std::vector<std::vector<std::string>> sentences = {{"drink", "water"},
                                                                  {"hello", "please", "wait"}};
  return sentences;
}

Vocabulary Vocabulary::standard() {
  std::vector<std::string> tokens = standard_words();
  tokens.insert(tokens.end(), standard_phrases().begin(), standard_phrases().end());
  return Vocabulary(std::move(tokens));
}

bool Vocabulary::contains(std::string_view token) const { return token_to_id_.find(token) != token_to_id_.end(); }

int Vocabulary::id(std::string_view token) const {
  const auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) throw InvalidParameter("unknown token: " + std::string(token));
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 1 || id > size()) throw InvalidParameter("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id - 1)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::hash() const {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  return sha256_hex(joined);
}

}  // namespace ssir::data

// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssir {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed container or checkpoint. `offset` is the byte position where
// decoding stopped making sense.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// A CTC target that no alignment of the given length can produce.
class InfeasibleTarget : public Error {
 public:
  InfeasibleTarget(const std::string& what, std::string provenance = {})
      : Error(provenance.empty() ? what : what + " [sample " + provenance + "]"),
        provenance_(std::move(provenance)) {}
  const std::string& provenance() const noexcept { return provenance_; }

 private:
  std::string provenance_;
};

}  // namespace ssir

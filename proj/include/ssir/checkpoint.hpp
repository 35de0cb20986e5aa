// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ssir/model.hpp"
#include "ssir/signal.hpp"
#include "ssir/vocabulary.hpp"

namespace ssir::model {

// Layout: "SSIM" | u32 version | u64 header length | UTF-8 JSON header |
// float32 LE tensors in header order.
inline constexpr std::string_view kCheckpointMagic = "SSIM";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  data::Vocabulary vocabulary;
  signal::InputSelection inputs = signal::InputSelection::all();
  nlohmann::json training = nlohmann::json::object();
  std::uint64_t seed = 0;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// SHA-256 of the float32 parameter payload exactly as it is written to disk.
std::string payload_hash(const ModelParams& params);

}  // namespace ssir::model

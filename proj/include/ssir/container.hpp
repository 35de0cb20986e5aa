// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ssir/dataset.hpp"

namespace ssir::data {

// Layout: "SSIR" | u32 version | u64 manifest length | UTF-8 JSON manifest |
// float32 payload. All integers and floats little-endian; each window is
// stored time-major, then channel, then axis.
inline constexpr std::string_view kContainerMagic = "SSIR";
inline constexpr std::uint32_t kContainerVersion = 1;

std::string encode_container(const DatasetSplit& split);
DatasetSplit decode_container(std::string_view bytes);

void write_container(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit read_container(const std::filesystem::path& path);

}  // namespace ssir::data

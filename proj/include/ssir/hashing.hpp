// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace ssir {

std::string sha256_hex(std::string_view bytes);

}  // namespace ssir

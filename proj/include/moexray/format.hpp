// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fmt/format.h>

#include <string>

namespace moexray {

/// Shortest round-trip decimal form; stable across runs, used for every CSV value.
inline std::string format_real(double v) { return fmt::format("{}", v); }

}  // namespace moexray

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moexray/matrix.hpp"
#include "moexray/similarity.hpp"

namespace moexray {

/// Static SVG renderings of the report tables. Output depends only on the
/// inputs, so figures are as reproducible as their CSV/JSON twins.
///
/// Heatmap colour scale: linear RGB interpolation over [0, 1] from
/// #f7fbff (0) to #08306b (1).
std::string heatmap_svg(const CategoryMatrix& m);

struct BarValue {
    std::string label;
    double value = 0.0;
};
std::string bars_svg(const std::vector<BarValue>& bars, const std::string& title);

std::string layer_signal_svg(const std::vector<std::optional<double>>& per_layer_d);

std::string scatter_svg(const Matrix& coords, const std::vector<std::string>& labels,
                        const std::vector<std::string>& categories);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace moexray

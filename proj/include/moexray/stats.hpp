// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moexray/signatures.hpp"
#include "moexray/similarity.hpp"

namespace moexray {

struct SampleSummary {
    double mean = 0.0;
    double std = 0.0;  // n-1 denominator; 0 for fewer than 2 values
    std::size_t n = 0;
};

SampleSummary summarize(std::span<const double> xs);

/// Upper-triangle similarity values split by whether the two labels match.
struct WithinAcross {
    std::vector<double> within;
    std::vector<double> across;
    /// Set when the corpus has a single category (across is empty).
    bool single_category = false;
};

WithinAcross split_within_across(const SimilarityMatrix& m);

/// Cohen's d with the n-weighted pooled standard deviation:
///   s_p = sqrt(((n1-1) s1^2 + (n2-1) s2^2) / (n1 + n2 - 2))
/// nullopt when the pooled deviation is zero. Throws DomainError for samples
/// with fewer than two values.
std::optional<double> cohens_d(std::span<const double> a, std::span<const double> b);
std::optional<double> cohens_d(const SampleSummary& a, const SampleSummary& b);

/// d between within- and across-category layer cosines, for every layer.
/// Layers where the statistic is undefined are nullopt. Requires at least two
/// categories with two or more prompts each.
std::vector<std::optional<double>> layer_effect_sizes(const std::vector<RoutingSignature>& sigs,
                                                      std::span<const std::string> labels);

struct EffectSizeReport {
    SampleSummary within;
    SampleSummary across;
    std::optional<double> cohens_d;
    std::vector<std::optional<double>> per_layer_d;
};

EffectSizeReport effect_size_report(const SimilarityMatrix& m, const std::vector<RoutingSignature>& sigs);

/// Spearman rank correlation (average ranks for ties). nullopt when either side is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

void write_effect_sizes_json(const EffectSizeReport& r, const std::filesystem::path& path);
void write_layer_effects_csv(const std::vector<std::optional<double>>& d, const std::filesystem::path& path);

}  // namespace moexray

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "moexray/random.hpp"
#include "moexray/signatures.hpp"
#include "moexray/trace.hpp"

namespace moexray {

enum class BaselineKind : std::uint8_t { permutation, load_balance };

std::string_view to_string(BaselineKind k) noexcept;

struct BaselineReport {
    BaselineKind kind = BaselineKind::load_balance;
    std::int64_t sample_count = 0;
    double mean_similarity = 0.0;
    double std_similarity = 0.0;
    std::uint64_t seed = 0;
    ModelConfig config;
};

/// Seed value that makes permute_experts apply the identity permutation.
/// Only meant for tests of the surrounding plumbing.
inline constexpr std::uint64_t kIdentityPermutationSeed = UINT64_MAX;

/// Relabels experts with an independent uniform permutation per (prompt, layer).
/// Token structure and event order are kept.
TraceSet permute_experts(const TraceSet& trace, std::uint64_t seed);

/// Same relabeling applied directly to a count matrix, one permutation per layer.
CountMatrix permute_counts(const CountMatrix& counts, Rng& rng);

/// Simulates uniform top-k routing: for every layer and token, k distinct
/// experts drawn uniformly from E. Row sums are exactly tokens * k.
CountMatrix loadbalance_sample(const ModelConfig& config, const std::vector<std::int64_t>& tokens_per_layer,
                               std::uint64_t seed);

/// Mean/std (n-1) of similarities between `n_pairs` independent load-balanced pairs.
/// Pair i uses seeds derived from (seed, i) so the result does not depend on scheduling.
BaselineReport loadbalance_similarity_stats(const ModelConfig& config,
                                            const std::vector<std::int64_t>& tokens_per_layer,
                                            std::int64_t n_pairs, std::uint64_t seed);

/// Draws `n_pairs` random prompt pairs from `counts`, permutes each prompt's
/// experts independently per layer and reports the similarity statistics.
BaselineReport permutation_similarity_stats(const ModelConfig& config, const std::vector<CountMatrix>& counts,
                                            std::int64_t n_pairs, std::uint64_t seed);

/// Rounded mean token count per layer across prompts (activations / k).
std::vector<std::int64_t> empirical_tokens_per_layer(const ModelConfig& config,
                                                     const std::vector<CountMatrix>& counts);

/// Minimum pair count accepted by the similarity statistics.
inline constexpr std::int64_t kMinBaselinePairs = 100;

void write_baseline_json(const BaselineReport& r, const std::filesystem::path& path);

}  // namespace moexray

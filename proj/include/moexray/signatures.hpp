// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moexray/matrix.hpp"
#include "moexray/trace.hpp"

namespace moexray {

enum class TokenFilter : std::uint8_t { prompt, generation, all };

std::string_view to_string(TokenFilter f) noexcept;
std::optional<TokenFilter> parse_token_filter(std::string_view s) noexcept;
bool passes(TokenFilter f, TokenType t) noexcept;

/// Per-layer activation counts A[layer][expert] for one prompt.
struct CountMatrix {
    std::string prompt_id;
    TokenFilter token_filter = TokenFilter::all;
    int num_layers = 0;
    int num_experts = 0;
    std::vector<std::int64_t> counts;  // row-major, layer-major

    CountMatrix() = default;
    CountMatrix(std::string id, int layers, int experts, TokenFilter filter = TokenFilter::all);

    std::int64_t& at(int layer, int expert) {
        return counts[static_cast<std::size_t>(layer) * static_cast<std::size_t>(num_experts) +
                      static_cast<std::size_t>(expert)];
    }
    std::int64_t at(int layer, int expert) const {
        return counts[static_cast<std::size_t>(layer) * static_cast<std::size_t>(num_experts) +
                      static_cast<std::size_t>(expert)];
    }
    std::int64_t row_sum(int layer) const;

    bool operator==(const CountMatrix&) const = default;
};

/// Normalized per-layer expert distributions for one prompt.
struct RoutingSignature {
    std::string prompt_id;
    std::string category;
    Matrix rows;                    // num_layers x num_experts
    std::vector<bool> empty_layers;  // true where the layer had no activations

    int num_layers() const noexcept { return static_cast<int>(rows.rows()); }
    int num_experts() const noexcept { return static_cast<int>(rows.cols()); }
    bool has_empty_layer() const;
};

/// Counts deduplicated activations of `prompt_id` passing `filter`.
/// Throws DomainError for an unknown prompt.
CountMatrix activation_counts(const TraceSet& trace, std::string_view prompt_id,
                              TokenFilter filter = TokenFilter::all);

/// Counts for every manifest prompt in one pass over the events (manifest order).
std::vector<CountMatrix> all_activation_counts(const TraceSet& trace, TokenFilter filter = TokenFilter::all);

/// Divides each nonempty row by its sum; all-zero rows stay zero and are flagged.
RoutingSignature signature_from_counts(const CountMatrix& counts, std::string category = {});

/// Per-token activation frequency A[l][e] / T_l, where T_l = row_sum / top_k is
/// the token count of a complete layer. Under balanced routing every entry
/// tends to top_k / num_experts. Empty layers stay zero.
Matrix per_token_frequency(const CountMatrix& counts, int top_k);

/// Layer-major concatenation, length num_layers * num_experts.
std::vector<double> flatten(const RoutingSignature& sig);

/// Signatures for every manifest prompt, labelled with its category.
std::vector<RoutingSignature> compute_signatures(const TraceSet& trace, TokenFilter filter = TokenFilter::all);

/// N x (L*E) feature matrix of flattened signatures.
Matrix feature_matrix(const std::vector<RoutingSignature>& sigs);

/// CSV: prompt_id,category,l0_e0,...; one row per prompt.
void write_signatures_csv(const std::vector<RoutingSignature>& sigs, const std::filesystem::path& path);

}  // namespace moexray

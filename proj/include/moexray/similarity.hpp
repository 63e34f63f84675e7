// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moexray/matrix.hpp"
#include "moexray/signatures.hpp"

namespace moexray {

/// Cosine of one layer pair. `degenerate` is set when either row is all-zero;
/// the value is then 0.
struct LayerCosine {
    double value = 0.0;
    bool degenerate = false;
};

/// Throws DomainError on shape mismatch or layer out of range.
LayerCosine layer_cosine(const RoutingSignature& a, const RoutingSignature& b, int layer);

struct SignatureSimilarity {
    double value = 0.0;
    int degenerate_layers = 0;
};

/// Mean of the per-layer cosines over all layers. Degenerate layers contribute
/// zero but stay in the denominator.
SignatureSimilarity signature_similarity(const RoutingSignature& a, const RoutingSignature& b);

struct SimilarityMatrix {
    std::vector<std::string> prompt_ids;
    std::vector<std::string> labels;
    Matrix values;
    int degenerate_pairs = 0;

    std::size_t size() const noexcept { return prompt_ids.size(); }
};

/// Full symmetric matrix of signature similarities. Needs >= 2 signatures of equal shape.
SimilarityMatrix pairwise_matrix(const std::vector<RoutingSignature>& sigs);

/// Mean similarity per (category, category) block over unordered pairs.
/// Diagonal blocks exclude self-pairs; a block with no pairs is nullopt.
struct CategoryMatrix {
    std::vector<std::string> categories;
    std::vector<std::vector<std::optional<double>>> means;
    std::vector<std::vector<std::size_t>> pair_counts;

    bool complete() const;
};

/// `categories` fixes row/column order; when empty, labels are used in order
/// of first appearance.
CategoryMatrix category_block_means(const SimilarityMatrix& m, std::vector<std::string> categories = {});

void write_similarity_csv(const SimilarityMatrix& m, const std::filesystem::path& path);
void write_category_matrix_csv(const CategoryMatrix& m, const std::filesystem::path& path);

}  // namespace moexray

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moexray/matrix.hpp"

namespace moexray {

struct Projection {
    std::vector<double> mean;
    Matrix components;                         // n_components x D, orthonormal rows
    std::vector<double> eigenvalues;           // covariance eigenvalues (n-1 denominator)
    std::vector<double> explained_variance_ratio;
    std::vector<int> iterations;               // power iterations spent per component
};

struct PcaOptions {
    int max_iters = 20000;
    double tolerance = 1e-13;  // residual ||Cv - lambda v|| relative to total variance
};

/// Principal components by power iteration with deflation: each component is
/// iterated while being kept orthogonal to the ones already found. The sign
/// of each component makes its largest-magnitude coordinate positive.
/// Throws DomainError for fewer than two rows or when every row is identical.
Projection pca_fit(const Matrix& features, int n_components = 2, const PcaOptions& options = {});

/// (x - mean) * components^T, one row per input row.
Matrix pca_transform(const Projection& p, const Matrix& features);

void write_pca_csv(const std::vector<std::string>& prompt_ids, const std::vector<std::string>& labels,
                   const Matrix& coords, const std::filesystem::path& path);

}  // namespace moexray

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/projection.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "moexray/errors.hpp"
#include "moexray/format.hpp"
#include "moexray/random.hpp"

namespace moexray {

namespace {

/// Applies the sample covariance of the centered data to a vector. Uses the
/// explicit D x D matrix when that is cheaper than two passes over the data.
class CovarianceOperator {
public:
    explicit CovarianceOperator(const Matrix& centered) : x_(centered) {
        const std::size_t n = x_.rows();
        const std::size_t d = x_.cols();
        scale_ = 1.0 / static_cast<double>(n - 1);
        if (d <= 2 * n) {
            cov_ = Matrix(d, d);
            for (std::size_t i = 0; i < n; ++i) {
                const auto r = x_.row(i);
                for (std::size_t a = 0; a < d; ++a) {
                    if (r[a] == 0.0) continue;
                    auto out = cov_.row(a);
                    for (std::size_t b = 0; b < d; ++b) out[b] += r[a] * r[b];
                }
            }
            for (double& v : cov_.data()) v *= scale_;
        }
        tmp_.resize(n);
    }

    void apply(std::span<const double> v, std::span<double> out) {
        if (!cov_.empty()) {
            for (std::size_t a = 0; a < cov_.rows(); ++a) out[a] = dot(cov_.row(a), v);
            return;
        }
        for (std::size_t i = 0; i < x_.rows(); ++i) tmp_[i] = dot(x_.row(i), v);
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < x_.rows(); ++i) {
            const auto r = x_.row(i);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += tmp_[i] * r[j];
        }
        for (double& o : out) o *= scale_;
    }

private:
    const Matrix& x_;
    Matrix cov_;
    double scale_ = 1.0;
    std::vector<double> tmp_;
};

void orthogonalize(std::span<double> v, const Matrix& basis, std::size_t count) {
    // Two passes of Gram-Schmidt keep v orthogonal to the found components to rounding.
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < count; ++c) {
            const auto b = basis.row(c);
            const double p = dot(v, b);
            for (std::size_t j = 0; j < v.size(); ++j) v[j] -= p * b[j];
        }
    }
}

double normalize(std::span<double> v) {
    const double n = std::sqrt(dot(v, v));
    if (n > 0.0)
        for (double& x : v) x /= n;
    return n;
}

}  // namespace

Projection pca_fit(const Matrix& features, int n_components, const PcaOptions& options) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (n < 2) throw DomainError("PCA needs at least 2 rows");
    if (n_components < 1 || static_cast<std::size_t>(n_components) > d)
        throw DomainError(fmt::format("n_components must lie in [1, {}]", d));

    Projection p;
    p.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) p.mean[j] += features(i, j);
    for (double& m : p.mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    double total_ss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = features(i, j) - p.mean[j];
            centered(i, j) = c;
            total_ss += c * c;
        }
    const double total_variance = total_ss / static_cast<double>(n - 1);
    if (!(total_variance > 0.0)) throw DomainError("PCA undefined: all rows are identical");

    CovarianceOperator cov(centered);
    const auto k = static_cast<std::size_t>(n_components);
    p.components = Matrix(k, d);
    std::vector<double> next(d);
    Rng rng(0x5043415F53544152ULL);

    for (std::size_t c = 0; c < k; ++c) {
        auto v = p.components.row(c);
        for (double& x : v) x = rng.normal();
        orthogonalize(v, p.components, c);
        normalize(v);

        double lambda = 0.0;
        int it = 0;
        for (; it < options.max_iters; ++it) {
            cov.apply(v, next);
            orthogonalize(next, p.components, c);
            lambda = dot(v, next);
            double residual = 0.0;
            for (std::size_t j = 0; j < d; ++j) residual += (next[j] - lambda * v[j]) * (next[j] - lambda * v[j]);
            residual = std::sqrt(residual);
            if (normalize(next) <= options.tolerance * total_variance) {
                // Remaining variance is zero in the orthogonal complement; keep v as is.
                lambda = 0.0;
                break;
            }
            std::copy(next.begin(), next.end(), v.begin());
            if (residual <= options.tolerance * total_variance) break;
        }
        cov.apply(v, next);
        lambda = std::max(0.0, dot(v, next));
        p.iterations.push_back(it);

        const auto largest = std::max_element(v.begin(), v.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        });
        if (*largest < 0.0)
            for (double& x : v) x = -x;

        p.eigenvalues.push_back(lambda);
        p.explained_variance_ratio.push_back(std::clamp(lambda / total_variance, 0.0, 1.0));
    }
    return p;
}

Matrix pca_transform(const Projection& p, const Matrix& features) {
    if (features.cols() != p.mean.size())
        throw DomainError(fmt::format("projection has {} features, input has {}", p.mean.size(), features.cols()));
    const std::size_t k = p.components.rows();
    Matrix out(features.rows(), k);
    std::vector<double> centered(features.cols());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (std::size_t j = 0; j < features.cols(); ++j) centered[j] = features(i, j) - p.mean[j];
        for (std::size_t c = 0; c < k; ++c) out(i, c) = dot(centered, p.components.row(c));
    }
    return out;
}

void write_pca_csv(const std::vector<std::string>& prompt_ids, const std::vector<std::string>& labels,
                   const Matrix& coords, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "prompt_id,category";
    for (std::size_t c = 0; c < coords.cols(); ++c) out << ",pc" << c + 1;
    out << '\n';
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        out << prompt_ids[i] << ',' << labels[i];
        for (std::size_t c = 0; c < coords.cols(); ++c) out << ',' << format_real(coords(i, c));
        out << '\n';
    }
}

}  // namespace moexray

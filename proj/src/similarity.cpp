// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/similarity.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "moexray/errors.hpp"
#include "moexray/format.hpp"

namespace moexray {

namespace {

void check_shapes(const RoutingSignature& a, const RoutingSignature& b) {
    if (a.num_layers() != b.num_layers() || a.num_experts() != b.num_experts())
        throw DomainError(fmt::format("signature shape mismatch: {}x{} vs {}x{}", a.num_layers(), a.num_experts(),
                                      b.num_layers(), b.num_experts()));
}

}  // namespace

LayerCosine layer_cosine(const RoutingSignature& a, const RoutingSignature& b, int layer) {
    check_shapes(a, b);
    if (layer < 0 || layer >= a.num_layers())
        throw DomainError(fmt::format("layer {} out of range [0, {})", layer, a.num_layers()));
    const auto l = static_cast<std::size_t>(layer);
    const auto ra = a.rows.row(l);
    const auto rb = b.rows.row(l);
    const double na = dot(ra, ra);
    const double nb = dot(rb, rb);
    if (na == 0.0 || nb == 0.0) return {0.0, true};
    const double c = dot(ra, rb) / (std::sqrt(na) * std::sqrt(nb));
    return {std::clamp(c, 0.0, 1.0), false};
}

SignatureSimilarity signature_similarity(const RoutingSignature& a, const RoutingSignature& b) {
    check_shapes(a, b);
    SignatureSimilarity out;
    if (a.num_layers() == 0) return out;
    double sum = 0.0;
    for (int l = 0; l < a.num_layers(); ++l) {
        const LayerCosine c = layer_cosine(a, b, l);
        sum += c.value;
        out.degenerate_layers += c.degenerate ? 1 : 0;
    }
    out.value = sum / a.num_layers();
    return out;
}

SimilarityMatrix pairwise_matrix(const std::vector<RoutingSignature>& sigs) {
    if (sigs.size() < 2) throw DomainError("pairwise similarity needs at least 2 signatures");
    SimilarityMatrix m;
    const std::size_t n = sigs.size();
    m.values = Matrix(n, n);
    for (const auto& s : sigs) {
        check_shapes(sigs.front(), s);
        m.prompt_ids.push_back(s.prompt_id);
        m.labels.push_back(s.category);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const SignatureSimilarity s = signature_similarity(sigs[i], sigs[j]);
            m.values(i, j) = m.values(j, i) = s.value;
            if (i != j && s.degenerate_layers > 0) ++m.degenerate_pairs;
        }
    }
    return m;
}

bool CategoryMatrix::complete() const {
    for (const auto& row : means)
        for (const auto& v : row)
            if (!v) return false;
    return true;
}

CategoryMatrix category_block_means(const SimilarityMatrix& m, std::vector<std::string> categories) {
    if (m.labels.size() != m.size()) throw DomainError("every prompt needs a category label");
    if (categories.empty()) {
        for (const auto& l : m.labels)
            if (std::find(categories.begin(), categories.end(), l) == categories.end()) categories.push_back(l);
    }
    const std::size_t c = categories.size();
    std::vector<std::size_t> cat_of(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        auto it = std::find(categories.begin(), categories.end(), m.labels[i]);
        if (it == categories.end()) throw DomainError(fmt::format("label \"{}\" not among categories", m.labels[i]));
        cat_of[i] = static_cast<std::size_t>(it - categories.begin());
    }

    std::vector<std::vector<double>> sums(c, std::vector<double>(c, 0.0));
    std::vector<std::vector<std::size_t>> counts(c, std::vector<std::size_t>(c, 0));
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            const auto a = std::min(cat_of[i], cat_of[j]);
            const auto b = std::max(cat_of[i], cat_of[j]);
            sums[a][b] += m.values(i, j);
            ++counts[a][b];
        }
    }

    CategoryMatrix out;
    out.categories = std::move(categories);
    out.means.assign(c, std::vector<std::optional<double>>(c));
    out.pair_counts.assign(c, std::vector<std::size_t>(c, 0));
    for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t b = a; b < c; ++b) {
            out.pair_counts[a][b] = out.pair_counts[b][a] = counts[a][b];
            if (counts[a][b] > 0) {
                const double mean = sums[a][b] / static_cast<double>(counts[a][b]);
                out.means[a][b] = out.means[b][a] = mean;
            }
        }
    }
    return out;
}

void write_similarity_csv(const SimilarityMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "prompt_id";
    for (const auto& id : m.prompt_ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.prompt_ids[i];
        for (std::size_t j = 0; j < m.size(); ++j) out << ',' << format_real(m.values(i, j));
        out << '\n';
    }
}

void write_category_matrix_csv(const CategoryMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "category";
    for (const auto& c : m.categories) out << ',' << c;
    out << '\n';
    for (std::size_t a = 0; a < m.categories.size(); ++a) {
        out << m.categories[a];
        for (const auto& v : m.means[a]) out << ',' << (v ? format_real(*v) : std::string("NA"));
        out << '\n';
    }
}

}  // namespace moexray

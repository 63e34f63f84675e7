// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "moexray/errors.hpp"
#include "moexray/similarity.hpp"
#include "test_util.hpp"

namespace moexray {
namespace {

using testing::make_signature;

TEST(LayerCosine, IdenticalAndDisjoint) {
    const auto a = make_signature({{0.2, 0.3, 0.5}});
    EXPECT_NEAR(layer_cosine(a, a, 0).value, 1.0, 1e-15);
    const auto x = make_signature({{1.0, 0.0}});
    const auto y = make_signature({{0.0, 1.0}});
    EXPECT_EQ(layer_cosine(x, y, 0).value, 0.0);
    EXPECT_FALSE(layer_cosine(x, y, 0).degenerate);
}

TEST(LayerCosine, HalfVersusUniform) {
    const std::vector<double> a{0.5, 0.5, 0.0, 0.0};
    const std::vector<double> b{0.25, 0.25, 0.25, 0.25};
    // Direct computation, independent of the library's dot/norm helpers.
    const double direct = std::inner_product(a.begin(), a.end(), b.begin(), 0.0) /
                          std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0) *
                                    std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    EXPECT_NEAR(direct, 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(layer_cosine(make_signature({a}), make_signature({b}), 0).value, direct, 1e-15);
}

TEST(LayerCosine, ZeroRowIsDegenerate) {
    const auto z = make_signature({{0.0, 0.0}});
    const auto a = make_signature({{1.0, 0.0}});
    const auto c = layer_cosine(z, a, 0);
    EXPECT_EQ(c.value, 0.0);
    EXPECT_TRUE(c.degenerate);
}

TEST(LayerCosine, ShapeMismatchThrows) {
    EXPECT_THROW(layer_cosine(make_signature({{1.0, 0.0}}), make_signature({{1.0, 0.0, 0.0}}), 0), DomainError);
    EXPECT_THROW(signature_similarity(make_signature({{1.0}}), make_signature({{1.0}, {1.0}})), DomainError);
}

TEST(SignatureSimilarity, MeanOfLayers) {
    const auto a = make_signature({{1.0, 0.0}, {1.0, 0.0}});
    const auto b = make_signature({{1.0, 0.0}, {0.0, 1.0}});
    EXPECT_DOUBLE_EQ(signature_similarity(a, b).value, 0.5);
    EXPECT_NEAR(signature_similarity(a, a).value, 1.0, 1e-15);

    // Empty layer counts as zero and keeps its place in the denominator.
    const auto e = make_signature({{1.0, 0.0}, {0.0, 0.0}});
    const auto s = signature_similarity(e, a);
    EXPECT_DOUBLE_EQ(s.value, 0.5);
    EXPECT_EQ(s.degenerate_layers, 1);
}

RoutingSignature random_signature(std::mt19937& gen, int layers, int experts, std::string cat = "c") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(layers), std::vector<double>(static_cast<std::size_t>(experts)));
    for (auto& r : rows) {
        double sum = 0.0;
        for (double& v : r) {
            v = u(gen) < 0.4 ? 0.0 : u(gen);
            sum += v;
        }
        if (sum == 0.0) r[0] = sum = 1.0;
        for (double& v : r) v /= sum;
    }
    return make_signature(rows, std::move(cat));
}

TEST(SimilarityProperties, RelabelingInvariance) {
    std::mt19937 gen(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_signature(gen, 3, 10);
        const auto b = random_signature(gen, 3, 10);
        auto pa = a;
        auto pb = b;
        for (std::size_t l = 0; l < 3; ++l) {
            std::vector<std::size_t> perm(10);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), gen);
            for (std::size_t e = 0; e < 10; ++e) {
                pa.rows(l, perm[e]) = a.rows(l, e);
                pb.rows(l, perm[e]) = b.rows(l, e);
            }
        }
        for (int l = 0; l < 3; ++l) EXPECT_NEAR(layer_cosine(a, b, l).value, layer_cosine(pa, pb, l).value, 1e-12);
    }
}

TEST(SimilarityProperties, SymmetricBoundedAndExactMean) {
    std::mt19937 gen(4);
    std::vector<RoutingSignature> sigs;
    for (int i = 0; i < 12; ++i) sigs.push_back(random_signature(gen, 4, 8, i % 3 == 0 ? "a" : "b"));
    const auto m = pairwise_matrix(sigs);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_NEAR(m.values(i, i), 1.0, 1e-12);
        for (std::size_t j = 0; j < m.size(); ++j) {
            EXPECT_EQ(m.values(i, j), m.values(j, i));
            EXPECT_GE(m.values(i, j), 0.0);
            EXPECT_LE(m.values(i, j), 1.0);
        }
    }
    double sum = 0.0;
    for (int l = 0; l < 4; ++l) sum += layer_cosine(sigs[1], sigs[2], l).value;
    EXPECT_EQ(signature_similarity(sigs[1], sigs[2]).value, sum / 4.0);
}

TEST(PairwiseMatrix, NeedsTwoConsistentSignatures) {
    EXPECT_THROW(pairwise_matrix({make_signature({{1.0}})}), DomainError);
    EXPECT_THROW(pairwise_matrix({make_signature({{1.0, 0.0}}), make_signature({{1.0}})}), DomainError);
}

TEST(CategoryBlockMeans, IdenticalSignatures) {
    std::vector<RoutingSignature> sigs;
    for (int i = 0; i < 6; ++i) sigs.push_back(make_signature({{0.5, 0.5}}, i < 3 ? "x" : "y", std::to_string(i)));
    const auto cm = category_block_means(pairwise_matrix(sigs));
    for (const auto& row : cm.means)
        for (const auto& v : row) {
            ASSERT_TRUE(v);
            EXPECT_NEAR(*v, 1.0, 1e-12);
        }
}

TEST(CategoryBlockMeans, OrthogonalTemplates) {
    const std::vector<RoutingSignature> sigs{make_signature({{1, 0}}, "a", "a0"), make_signature({{1, 0}}, "a", "a1"),
                                             make_signature({{0, 1}}, "b", "b0"), make_signature({{0, 1}}, "b", "b1")};
    const auto cm = category_block_means(pairwise_matrix(sigs), {"a", "b"});
    EXPECT_DOUBLE_EQ(*cm.means[0][0], 1.0);
    EXPECT_DOUBLE_EQ(*cm.means[1][1], 1.0);
    EXPECT_DOUBLE_EQ(*cm.means[0][1], 0.0);
    EXPECT_EQ(cm.pair_counts[0][0], 1u);
    EXPECT_EQ(cm.pair_counts[0][1], 4u);
}

TEST(CategoryBlockMeans, SinglePromptCategoryDiagonalMissing) {
    const std::vector<RoutingSignature> sigs{make_signature({{1, 0}}, "a", "a0"), make_signature({{1, 0}}, "a", "a1"),
                                             make_signature({{0.5, 0.5}}, "b", "b0")};
    const auto cm = category_block_means(pairwise_matrix(sigs), {"a", "b"});
    EXPECT_TRUE(cm.means[0][0]);
    EXPECT_FALSE(cm.means[1][1]);
    EXPECT_TRUE(cm.means[0][1]);
    EXPECT_FALSE(cm.complete());
}

}  // namespace
}  // namespace moexray

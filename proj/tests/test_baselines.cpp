// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "moexray/baselines.hpp"
#include "moexray/errors.hpp"
#include "moexray/similarity.hpp"
#include "moexray/stats.hpp"
#include "moexray/synthgen.hpp"
#include "test_util.hpp"

namespace moexray {
namespace {

using testing::small_config;

// Independent oracle: uniform top-k routing simulated with std::sample and the
// mean layer-wise cosine computed from raw counts.
struct OracleStats {
    double mean;
    double se;
};

OracleStats oracle_loadbalance_similarity(int layers, int experts, int k, int tokens, int pairs, unsigned seed) {
    std::mt19937 gen(seed);
    std::vector<int> all(static_cast<std::size_t>(experts));
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> chosen(static_cast<std::size_t>(k));
    auto draw = [&] {
        std::vector<std::vector<double>> c(static_cast<std::size_t>(layers), std::vector<double>(all.size(), 0.0));
        for (auto& row : c)
            for (int t = 0; t < tokens; ++t) {
                std::sample(all.begin(), all.end(), chosen.begin(), k, gen);
                for (int e : chosen) row[static_cast<std::size_t>(e)] += 1.0;
            }
        return c;
    };
    double sum = 0.0;
    double sumsq = 0.0;
    for (int p = 0; p < pairs; ++p) {
        const auto a = draw();
        const auto b = draw();
        double sim = 0.0;
        for (int l = 0; l < layers; ++l) {
            const auto& x = a[static_cast<std::size_t>(l)];
            const auto& y = b[static_cast<std::size_t>(l)];
            sim += std::inner_product(x.begin(), x.end(), y.begin(), 0.0) /
                   std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0) *
                             std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
        }
        sim /= layers;
        sum += sim;
        sumsq += sim * sim;
    }
    const double mean = sum / pairs;
    const double var = (sumsq - pairs * mean * mean) / (pairs - 1);
    return {mean, std::sqrt(var / pairs)};
}

TEST(PermuteExperts, IdentityHook) {
    const auto spec = make_generator_spec(small_config(3, 8, 2), {"a", "b"}, 1.0, DepthShape::flat, 1, 1.0, 5);
    const auto t = generate_corpus(spec, 2);
    EXPECT_EQ(permute_experts(t, kIdentityPermutationSeed).events, t.events);
}

TEST(PermuteExperts, PreservesCountMultisetsAndTokens) {
    const auto spec = make_generator_spec(small_config(4, 16, 3), {"a", "b"}, 1.5, DepthShape::flat, 2, 1.0, 12);
    const auto t = generate_corpus(spec, 3);
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
        const auto p = permute_experts(t, seed);
        ASSERT_EQ(p.events.size(), t.events.size());
        for (std::size_t i = 0; i < t.events.size(); ++i) {
            EXPECT_EQ(p.events[i].prompt_id, t.events[i].prompt_id);
            EXPECT_EQ(p.events[i].layer, t.events[i].layer);
            EXPECT_EQ(p.events[i].token_pos, t.events[i].token_pos);
        }
        EXPECT_TRUE(validate_trace(p).clean());
        const auto before = all_activation_counts(t);
        const auto after = all_activation_counts(p);
        bool any_changed = false;
        for (std::size_t i = 0; i < before.size(); ++i) {
            for (int l = 0; l < before[i].num_layers; ++l) {
                std::vector<std::int64_t> x, y;
                for (int e = 0; e < before[i].num_experts; ++e) {
                    x.push_back(before[i].at(l, e));
                    y.push_back(after[i].at(l, e));
                }
                any_changed |= x != y;
                std::sort(x.begin(), x.end());
                std::sort(y.begin(), y.end());
                EXPECT_EQ(x, y);
            }
        }
        EXPECT_TRUE(any_changed);
    }
}

TEST(PermuteExperts, Deterministic) {
    const auto spec = make_generator_spec(small_config(2, 8, 2), {"a"}, 1.0, DepthShape::flat, 1, 1.0, 4);
    const auto t = generate_corpus(spec, 2);
    EXPECT_EQ(permute_experts(t, 7).events, permute_experts(t, 7).events);
    EXPECT_NE(permute_experts(t, 7).events, permute_experts(t, 8).events);
}

TEST(PermuteExperts, DestroysWithinCategoryAlignment) {
    ModelConfig cfg;
    const auto spec = make_generator_spec(cfg, default_categories(), kDefaultConcentration, DepthShape::late_peak, 4);
    const auto t = generate_corpus(spec, 6);
    auto within_mean = [](const TraceSet& trace) {
        return summarize(split_within_across(pairwise_matrix(compute_signatures(trace))).within).mean;
    };
    const double before = within_mean(t);
    const double after = within_mean(permute_experts(t, 11));
    EXPECT_LT(after, before - 0.1) << before << " -> " << after;
}

TEST(LoadBalanceSample, ForcedSaturation) {
    const ModelConfig cfg = small_config(3, 6, 6);
    const auto m = loadbalance_sample(cfg, {1, 1, 1}, 5);
    for (auto v : m.counts) EXPECT_EQ(v, 1);
}

TEST(LoadBalanceSample, RowSumsExactForEverySeed) {
    const ModelConfig cfg = small_config(4, 10, 3);
    const std::vector<std::int64_t> tokens{0, 1, 7, 33};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto m = loadbalance_sample(cfg, tokens, seed);
        for (int l = 0; l < 4; ++l) EXPECT_EQ(m.row_sum(l), tokens[static_cast<std::size_t>(l)] * 3);
        for (int l = 0; l < 4; ++l)
            for (int e = 0; e < 10; ++e) EXPECT_LE(m.at(l, e), tokens[static_cast<std::size_t>(l)]);
    }
    EXPECT_EQ(loadbalance_sample(cfg, tokens, 3), loadbalance_sample(cfg, tokens, 3));
    EXPECT_THROW(loadbalance_sample(cfg, {1, 2}, 0), DomainError);
}

TEST(LoadBalanceSample, PerExpertMeanCountIsFour) {
    // 32 tokens, k=8, E=64: expected count per expert 32 * 8/64 = 4.
    ModelConfig cfg;
    const std::vector<std::int64_t> tokens(16, 32);
    std::vector<double> sums(64, 0.0);
    constexpr int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const auto m = loadbalance_sample(cfg, tokens, static_cast<std::uint64_t>(d));
        for (int l = 0; l < 16; ++l)
            for (int e = 0; e < 64; ++e) sums[static_cast<std::size_t>(e)] += static_cast<double>(m.at(l, e));
    }
    for (double s : sums) EXPECT_NEAR(s / (draws * 16.0), 4.0, 0.05);
}

TEST(LoadBalanceSample, FrequencyApproachesKOverE) {
    ModelConfig cfg;
    const auto m = loadbalance_sample(cfg, std::vector<std::int64_t>(16, 10000), 17);
    const Matrix freq = per_token_frequency(m, cfg.top_k);
    // Per expert, pooled over the 16 identically distributed layers.
    for (std::size_t e = 0; e < 64; ++e) {
        double sum = 0.0;
        for (std::size_t l = 0; l < 16; ++l) sum += freq(l, e);
        EXPECT_NEAR(sum / 16.0, 0.125, 0.01);
    }
    // Single (layer, expert) cells have sd ~0.0033 at 10,000 tokens.
    for (double f : freq.data()) EXPECT_NEAR(f, 0.125, 0.02);
}

TEST(LoadBalanceStats, MatchesMonteCarloOracle) {
    ModelConfig cfg;
    const std::vector<std::int64_t> tokens(16, 32);
    const auto report = loadbalance_similarity_stats(cfg, tokens, 2000, 123);
    const auto oracle = oracle_loadbalance_similarity(16, 64, 8, 32, 10000, 99);
    const double se_lib = report.std_similarity / std::sqrt(2000.0);
    // 99% interval for the difference of two independent Monte-Carlo means.
    const double band = 2.576 * std::hypot(se_lib, oracle.se);
    EXPECT_NEAR(report.mean_similarity, oracle.mean, band);
    EXPECT_EQ(report.kind, BaselineKind::load_balance);
    EXPECT_EQ(report.sample_count, 2000);
}

TEST(LoadBalanceStats, LargeTokenLimitIsNearlyUniform) {
    ModelConfig cfg;
    const auto r = loadbalance_similarity_stats(cfg, std::vector<std::int64_t>(16, 10000), 100, 5);
    EXPECT_GT(r.mean_similarity, 0.99);
}

TEST(LoadBalanceStats, MonotoneInTokenCount) {
    ModelConfig cfg;
    double prev = 0.0;
    for (std::int64_t tokens : {8, 32, 128, 512}) {
        const auto r = loadbalance_similarity_stats(cfg, std::vector<std::int64_t>(16, tokens), 1000, 8);
        EXPECT_GE(r.mean_similarity, prev) << tokens;
        prev = r.mean_similarity;
    }
}

TEST(LoadBalanceStats, DeterministicAndValidatesPairs) {
    const ModelConfig cfg = small_config(2, 8, 2);
    const std::vector<std::int64_t> tokens{5, 5};
    const auto a = loadbalance_similarity_stats(cfg, tokens, 100, 42);
    const auto b = loadbalance_similarity_stats(cfg, tokens, 100, 42);
    EXPECT_EQ(a.mean_similarity, b.mean_similarity);
    EXPECT_EQ(a.std_similarity, b.std_similarity);
    EXPECT_GE(a.std_similarity, 0.0);
    EXPECT_THROW(loadbalance_similarity_stats(cfg, tokens, 99, 42), DomainError);
}

TEST(PermutationStats, IdenticalPromptsFallBelowOne) {
    const auto t = testing::uniform_route_trace(small_config(4, 16, 2),
                                                {{"a", "c"}, {"b", "c"}, {"d", "c"}}, 8, {3, 9});
    const auto counts = all_activation_counts(t);
    const auto r = permutation_similarity_stats(t.config, counts, 200, 1);
    EXPECT_LT(r.mean_similarity, 1.0);
    EXPECT_EQ(r.kind, BaselineKind::permutation);
    EXPECT_THROW(permutation_similarity_stats(t.config, {counts.front()}, 200, 1), DomainError);
}

TEST(PermuteCounts, AgreesWithEventPermutationHistograms) {
    CountMatrix c("p", 2, 5);
    c.counts = {5, 0, 3, 1, 0, 2, 2, 2, 0, 0};
    Rng rng(3);
    const auto p = permute_counts(c, rng);
    for (int l = 0; l < 2; ++l) {
        std::vector<std::int64_t> x(c.counts.begin() + l * 5, c.counts.begin() + l * 5 + 5);
        std::vector<std::int64_t> y(p.counts.begin() + l * 5, p.counts.begin() + l * 5 + 5);
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        EXPECT_EQ(x, y);
    }
}

TEST(EmpiricalTokens, RoundedMeanPerLayer) {
    const auto t = testing::uniform_route_trace(small_config(2, 8, 2), {{"a", "c"}, {"b", "c"}}, 6, {0, 1});
    EXPECT_EQ(empirical_tokens_per_layer(t.config, all_activation_counts(t)), (std::vector<std::int64_t>{6, 6}));
}

}  // namespace
}  // namespace moexray

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "moexray/classifier.hpp"
#include "moexray/errors.hpp"
#include "moexray/random.hpp"
#include "moexray/signatures.hpp"
#include "moexray/similarity.hpp"
#include "moexray/synthgen.hpp"
#include "test_util.hpp"

namespace moexray {
namespace {

ModelConfig paper_config() {
    ModelConfig c;
    c.model_id = "synthetic";
    return c;
}

TEST(DepthProfile, Shapes) {
    for (double v : depth_profile(DepthShape::flat, 16)) EXPECT_EQ(v, 1.0);
    const auto lin = depth_profile(DepthShape::linear_increasing, 16);
    for (int l = 0; l < 16; ++l) EXPECT_DOUBLE_EQ(lin[static_cast<std::size_t>(l)], l / 15.0);
    const auto peak = depth_profile(DepthShape::late_peak, 16);
    EXPECT_EQ(std::max_element(peak.begin(), peak.end()) - peak.begin(), 13);
    for (double v : peak) {
        EXPECT_GE(v, kLatePeakFloor);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(parse_depth_shape("late_peak"), DepthShape::late_peak);
    EXPECT_FALSE(parse_depth_shape("sideways").has_value());
}

TEST(GeneratorSpec, ZeroConcentrationGivesZeroLogits) {
    const auto spec = make_generator_spec(paper_config(), default_categories(), 0.0, DepthShape::flat, 3);
    for (const auto& cat : spec.base_logits)
        for (const auto& layer : cat)
            for (double v : layer) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(make_generator_spec(paper_config(), default_categories(), -1.0, DepthShape::flat, 3), DomainError);
    EXPECT_THROW(make_generator_spec(paper_config(), {"a", "a"}, 1.0, DepthShape::flat, 3), DomainError);
}

TEST(SamplePromptTrace, ZeroNoiseIsDeterministicTopK) {
    const auto spec = make_generator_spec(paper_config(), default_categories(), 1.0, DepthShape::flat, 5, 0.0, 24);
    TraceSet t;
    t.config = spec.config;
    t.categories = spec.categories;
    t.prompts.push_back({"p", "code", {{TokenType::generation, 24}}});
    t.events = sample_prompt_trace(spec, "code", "p", 77);
    const auto sig = signature_from_counts(activation_counts(t, "p"), "code");
    for (std::size_t l = 0; l < 16; ++l) {
        int nonzero = 0;
        for (std::size_t e = 0; e < 64; ++e) {
            const double v = sig.rows(l, e);
            if (v != 0.0) {
                ++nonzero;
                EXPECT_DOUBLE_EQ(v, 1.0 / 8.0);
            }
        }
        EXPECT_EQ(nonzero, 8);
        // The chosen experts are the eight largest base logits.
        std::vector<std::size_t> order(64);
        std::iota(order.begin(), order.end(), 0);
        const auto& logits = spec.base_logits[0][l];
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return logits[a] > logits[b]; });
        for (std::size_t i = 0; i < 8; ++i) EXPECT_GT(sig.rows(l, order[i]), 0.0);
    }
}

TEST(SamplePromptTrace, ZeroConcentrationIsUniform) {
    const auto spec = make_generator_spec(paper_config(), default_categories(), 0.0, DepthShape::flat, 1, 1.0, 10000);
    TraceSet t;
    t.config = spec.config;
    t.categories = spec.categories;
    t.prompts.push_back({"p", "math", {{TokenType::generation, 10000}}});
    t.events = sample_prompt_trace(spec, "math", "p", 2);
    const Matrix freq = per_token_frequency(activation_counts(t, "p"), 8);
    // Per expert, pooled over layers: standard error ~ sqrt(.125 * .875 / 160000) ~ 8e-4.
    for (std::size_t e = 0; e < 64; ++e) {
        double pooled = 0.0;
        for (std::size_t l = 0; l < 16; ++l) {
            EXPECT_NEAR(freq(l, e), 0.125, 0.02);
            pooled += freq(l, e);
        }
        EXPECT_NEAR(pooled / 16.0, 0.125, 0.01);
    }
}

TEST(SamplePromptTrace, SameCategoryMoreSimilarThanDifferent) {
    const auto spec = preset_spec("paper-shape", 11).value();
    int wins = 0;
    constexpr int trials = 100;
    for (int i = 0; i < trials; ++i) {
        TraceSet t;
        t.config = spec.config;
        t.categories = spec.categories;
        const std::string cat_a = spec.categories[static_cast<std::size_t>(i % 4)];
        const std::string cat_b = spec.categories[static_cast<std::size_t>((i + 1) % 4)];
        for (const auto& [id, cat] : std::vector<std::pair<std::string, std::string>>{{"a1", cat_a}, {"a2", cat_a}, {"b", cat_b}}) {
            t.prompts.push_back({id, cat, {{TokenType::generation, spec.tokens_per_prompt}}});
            const auto ev = sample_prompt_trace(spec, cat, id, mix_seed(1000 + static_cast<std::uint64_t>(i), t.prompts.size()));
            t.events.insert(t.events.end(), ev.begin(), ev.end());
        }
        const auto sigs = compute_signatures(t);
        if (signature_similarity(sigs[0], sigs[1]).value > signature_similarity(sigs[0], sigs[2]).value) ++wins;
    }
    EXPECT_GE(wins, 95);
}

TEST(GenerateCorpus, PaperShapeSizeAndValidity) {
    const auto spec = preset_spec("paper-shape", 0).value();
    const TraceSet t = generate_corpus(spec, kDefaultPromptsPerCategory);
    EXPECT_EQ(t.prompts.size(), 80u);
    EXPECT_EQ(t.events.size(), 327680u);
    EXPECT_TRUE(validate_trace(t).clean());
    std::set<std::string> ids;
    for (const auto& p : t.prompts) ids.insert(p.prompt_id);
    EXPECT_EQ(ids.size(), 80u);
    EXPECT_TRUE(ids.contains("code_00"));
    EXPECT_TRUE(ids.contains("factual_19"));
}

TEST(GenerateCorpus, Deterministic) {
    auto spec = make_generator_spec(paper_config(), default_categories(), 0.75, DepthShape::late_peak, 9, 1.0, 8);
    const auto a = generate_corpus(spec, 3);
    const auto b = generate_corpus(spec, 3);
    EXPECT_EQ(a.events, b.events);
    spec = make_generator_spec(paper_config(), default_categories(), 0.75, DepthShape::late_peak, 10, 1.0, 8);
    EXPECT_NE(generate_corpus(spec, 3).events, a.events);
}

TEST(GeneratorSpec, JsonRoundTrip) {
    testing::TempDir dir("spec");
    const auto spec = preset_spec("layer-signal", 4).value();
    write_generator_spec_json(spec, dir.path() / "spec.json");
    const auto back = read_generator_spec_json(dir.path() / "spec.json");
    EXPECT_EQ(back.categories, spec.categories);
    EXPECT_EQ(back.base_logits, spec.base_logits);
    EXPECT_EQ(back.depth_profile, spec.depth_profile);
    EXPECT_EQ(back.depth_shape, spec.depth_shape);
    EXPECT_EQ(back.seed, spec.seed);
    EXPECT_EQ(generate_corpus(back, 2).events, generate_corpus(spec, 2).events);
    EXPECT_FALSE(preset_spec("unknown", 0).has_value());
}

// Classification on the calibrated corpus, and the shuffled-label control.
class SyntheticClassification : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const TraceSet t = generate_corpus(preset_spec("paper-shape", 0).value(), kDefaultPromptsPerCategory);
        const auto sigs = compute_signatures(t);
        features_ = new Matrix(feature_matrix(sigs));
        names_ = new std::vector<std::string>(t.categories);
        std::vector<std::string> labels;
        for (const auto& s : sigs) labels.push_back(s.category);
        labels_ = new std::vector<int>(encode_labels(labels, *names_));
    }
    static void TearDownTestSuite() {
        delete features_;
        delete names_;
        delete labels_;
    }
    static inline Matrix* features_ = nullptr;
    static inline std::vector<std::string>* names_ = nullptr;
    static inline std::vector<int>* labels_ = nullptr;
};

TEST_F(SyntheticClassification, SeparatesCategories) {
    const auto r = cross_validate(*features_, *labels_, *names_, 5, {}, 0);
    EXPECT_GE(r.mean_accuracy, 0.90);
    EXPECT_GE(r.macro_f1, 0.90);
}

TEST_F(SyntheticClassification, ShuffledLabelsNearChance) {
    std::mt19937_64 gen(99);
    std::vector<double> accs;
    for (int trial = 0; trial < 20; ++trial) {
        auto shuffled = *labels_;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        accs.push_back(cross_validate(*features_, shuffled, *names_, 5, {}, static_cast<std::uint64_t>(trial)).mean_accuracy);
    }
    const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / static_cast<double>(accs.size());
    EXPECT_GE(mean, 0.10);
    EXPECT_LE(mean, 0.45);
}

}  // namespace
}  // namespace moexray

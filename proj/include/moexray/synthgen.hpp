// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moexray/trace.hpp"

namespace moexray {

/// Shape of the per-layer signal multiplier.
///  flat:              1 everywhere
///  linear_increasing: l / (L - 1)
///  late_peak:         a floor plus a Gaussian bump peaking at 13/15 of the depth
enum class DepthShape : std::uint8_t { flat, linear_increasing, late_peak };

std::string_view to_string(DepthShape s) noexcept;
std::optional<DepthShape> parse_depth_shape(std::string_view s) noexcept;

std::vector<double> depth_profile(DepthShape shape, int num_layers);

/// Calibrated defaults (see tools/calibrate_synthgen.cpp). With these the
/// default late_peak corpus (seed 0) gives within 0.875 / across 0.616 mean
/// similarity against a load-balance baseline of 0.821.
inline constexpr double kDefaultConcentration = 0.75;
inline constexpr double kDefaultTokenNoise = 1.0;
inline constexpr int kDefaultTokensPerPrompt = 32;
inline constexpr int kDefaultPromptsPerCategory = 20;
inline constexpr double kLatePeakFloor = 0.25;

/// Parameters of the task-conditioned synthetic router. For token t of a
/// prompt in category c at layer l the router logits are
///   depth_profile[l] * base_logits[c][l] + noise_t,  noise_t ~ N(0, token_noise_scale^2) i.i.d.
/// and the top_k experts by softmax probability are selected.
struct GeneratorSpec {
    ModelConfig config;
    std::vector<std::string> categories;
    /// [category][layer][expert]
    std::vector<std::vector<std::vector<double>>> base_logits;
    std::vector<double> depth_profile;
    DepthShape depth_shape = DepthShape::late_peak;
    double concentration = kDefaultConcentration;
    double token_noise_scale = kDefaultTokenNoise;
    int tokens_per_prompt = kDefaultTokensPerPrompt;
    std::uint64_t seed = 0;

    /// Throws DomainError when shapes or ranges are inconsistent.
    void check() const;
};

/// Draws base logits i.i.d. N(0, concentration^2) per (category, layer, expert).
GeneratorSpec make_generator_spec(const ModelConfig& config, std::vector<std::string> categories,
                                  double concentration, DepthShape depth_shape, std::uint64_t seed,
                                  double token_noise_scale = kDefaultTokenNoise,
                                  int tokens_per_prompt = kDefaultTokensPerPrompt);

/// Generation-token events for one prompt: tokens_per_prompt * L * k events.
std::vector<RoutingEvent> sample_prompt_trace(const GeneratorSpec& spec, std::string_view category,
                                              std::string_view prompt_id, std::uint64_t seed);

/// `prompts_per_category` prompts per category named "{category}_{index:02}".
TraceSet generate_corpus(const GeneratorSpec& spec, int prompts_per_category);

/// The four task categories of the reference corpus.
std::vector<std::string> default_categories();

/// Named presets: "paper-shape" (late_peak), "layer-signal" (linear_increasing),
/// "no-signal" (concentration 0). Returns nullopt for an unknown name.
std::optional<GeneratorSpec> preset_spec(std::string_view name, std::uint64_t seed);

void write_generator_spec_json(const GeneratorSpec& spec, const std::filesystem::path& path);
GeneratorSpec read_generator_spec_json(const std::filesystem::path& path);

}  // namespace moexray

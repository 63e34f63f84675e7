// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/synthgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "moexray/errors.hpp"
#include "moexray/random.hpp"

namespace moexray {

std::string_view to_string(DepthShape s) noexcept {
    switch (s) {
        case DepthShape::flat: return "flat";
        case DepthShape::linear_increasing: return "linear_increasing";
        case DepthShape::late_peak: return "late_peak";
    }
    return "flat";
}

std::optional<DepthShape> parse_depth_shape(std::string_view s) noexcept {
    if (s == "flat") return DepthShape::flat;
    if (s == "linear_increasing") return DepthShape::linear_increasing;
    if (s == "late_peak") return DepthShape::late_peak;
    return std::nullopt;
}

std::vector<double> depth_profile(DepthShape shape, int num_layers) {
    if (num_layers < 1) throw DomainError("num_layers must be >= 1");
    std::vector<double> p(static_cast<std::size_t>(num_layers), 1.0);
    if (num_layers == 1) return p;
    const double last = num_layers - 1;
    for (int l = 0; l < num_layers; ++l) {
        switch (shape) {
            case DepthShape::flat: break;
            case DepthShape::linear_increasing: p[static_cast<std::size_t>(l)] = l / last; break;
            case DepthShape::late_peak: {
                const double peak = 13.0 / 15.0 * last;
                const double width = last / 4.0;
                const double z = (l - peak) / width;
                p[static_cast<std::size_t>(l)] = kLatePeakFloor + (1.0 - kLatePeakFloor) * std::exp(-0.5 * z * z);
                break;
            }
        }
    }
    return p;
}

void GeneratorSpec::check() const {
    config.check();
    if (categories.empty()) throw DomainError("generator needs at least one category");
    if (std::set<std::string>(categories.begin(), categories.end()).size() != categories.size())
        throw DomainError("duplicate category name");
    if (base_logits.size() != categories.size()) throw DomainError("base_logits must have one entry per category");
    for (const auto& per_cat : base_logits) {
        if (per_cat.size() != static_cast<std::size_t>(config.num_layers))
            throw DomainError("base_logits must have one row per layer");
        for (const auto& row : per_cat)
            if (row.size() != static_cast<std::size_t>(config.num_experts))
                throw DomainError("base_logits rows must have num_experts entries");
    }
    if (depth_profile.size() != static_cast<std::size_t>(config.num_layers))
        throw DomainError("depth_profile length must equal num_layers");
    for (double v : depth_profile)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("depth_profile entries must lie in [0, 1]");
    if (depth_shape == DepthShape::linear_increasing && !std::is_sorted(depth_profile.begin(), depth_profile.end()))
        throw DomainError("linear_increasing depth profile is not monotone");
    if (!(token_noise_scale >= 0.0)) throw DomainError("token_noise_scale must be >= 0");
    if (tokens_per_prompt < 0) throw DomainError("tokens_per_prompt must be >= 0");
}

GeneratorSpec make_generator_spec(const ModelConfig& config, std::vector<std::string> categories,
                                  double concentration, DepthShape depth_shape, std::uint64_t seed,
                                  double token_noise_scale, int tokens_per_prompt) {
    config.check();
    if (categories.empty()) throw DomainError("generator needs at least one category");
    if (std::set<std::string>(categories.begin(), categories.end()).size() != categories.size())
        throw DomainError("duplicate category name");
    if (!(concentration >= 0.0)) throw DomainError("concentration must be >= 0");

    GeneratorSpec spec;
    spec.config = config;
    spec.categories = std::move(categories);
    spec.depth_shape = depth_shape;
    spec.depth_profile = depth_profile(depth_shape, config.num_layers);
    spec.concentration = concentration;
    spec.token_noise_scale = token_noise_scale;
    spec.tokens_per_prompt = tokens_per_prompt;
    spec.seed = seed;

    Rng rng(mix_seed(seed, 0xBA5E));
    spec.base_logits.resize(spec.categories.size());
    for (auto& per_cat : spec.base_logits) {
        per_cat.assign(static_cast<std::size_t>(config.num_layers),
                       std::vector<double>(static_cast<std::size_t>(config.num_experts), 0.0));
        for (auto& row : per_cat)
            for (double& v : row) v = concentration * rng.normal();
    }
    spec.check();
    return spec;
}

std::vector<RoutingEvent> sample_prompt_trace(const GeneratorSpec& spec, std::string_view category,
                                              std::string_view prompt_id, std::uint64_t seed) {
    auto cit = std::find(spec.categories.begin(), spec.categories.end(), category);
    if (cit == spec.categories.end()) throw DomainError(fmt::format("unknown category \"{}\"", category));
    const auto& logits = spec.base_logits[static_cast<std::size_t>(cit - spec.categories.begin())];

    const auto experts = static_cast<std::size_t>(spec.config.num_experts);
    const auto k = static_cast<std::size_t>(spec.config.top_k);
    std::vector<RoutingEvent> events;
    events.reserve(static_cast<std::size_t>(spec.tokens_per_prompt) * static_cast<std::size_t>(spec.config.num_layers) * k);

    Rng rng(seed);
    std::vector<double> prob(experts);
    std::vector<int> order(experts);
    for (int t = 0; t < spec.tokens_per_prompt; ++t) {
        for (int l = 0; l < spec.config.num_layers; ++l) {
            const double scale = spec.depth_profile[static_cast<std::size_t>(l)];
            const auto& base = logits[static_cast<std::size_t>(l)];
            for (std::size_t e = 0; e < experts; ++e)
                prob[e] = scale * base[e] + spec.token_noise_scale * rng.normal();
            const double mx = *std::max_element(prob.begin(), prob.end());
            double sum = 0.0;
            for (double& p : prob) {
                p = std::exp(p - mx);
                sum += p;
            }
            for (double& p : prob) p /= sum;

            std::iota(order.begin(), order.end(), 0);
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                              [&](int a, int b) {
                                  const double pa = prob[static_cast<std::size_t>(a)];
                                  const double pb = prob[static_cast<std::size_t>(b)];
                                  return pa != pb ? pa > pb : a < b;
                              });
            for (std::size_t i = 0; i < k; ++i)
                events.push_back({std::string(prompt_id), l, order[i], t, TokenType::generation});
        }
    }
    return events;
}

TraceSet generate_corpus(const GeneratorSpec& spec, int prompts_per_category) {
    spec.check();
    if (prompts_per_category < 0) throw DomainError("prompts_per_category must be >= 0");
    TraceSet trace;
    trace.config = spec.config;
    trace.categories = spec.categories;
    std::uint64_t ordinal = 0;
    for (const auto& cat : spec.categories) {
        for (int i = 0; i < prompts_per_category; ++i, ++ordinal) {
            PromptMeta meta;
            meta.prompt_id = fmt::format("{}_{:02}", cat, i);
            meta.category = cat;
            meta.token_counts[TokenType::generation] = spec.tokens_per_prompt;
            auto events = sample_prompt_trace(spec, cat, meta.prompt_id, mix_seed(spec.seed, ordinal));
            trace.events.insert(trace.events.end(), std::make_move_iterator(events.begin()),
                                std::make_move_iterator(events.end()));
            trace.prompts.push_back(std::move(meta));
        }
    }
    return trace;
}

std::vector<std::string> default_categories() { return {"code", "math", "story", "factual"}; }

std::optional<GeneratorSpec> preset_spec(std::string_view name, std::uint64_t seed) {
    ModelConfig cfg;
    cfg.model_id = "synthetic";
    if (name == "paper-shape")
        return make_generator_spec(cfg, default_categories(), kDefaultConcentration, DepthShape::late_peak, seed);
    if (name == "layer-signal")
        return make_generator_spec(cfg, default_categories(), kDefaultConcentration, DepthShape::linear_increasing,
                                   seed);
    if (name == "no-signal") return make_generator_spec(cfg, default_categories(), 0.0, DepthShape::flat, seed);
    return std::nullopt;
}

void write_generator_spec_json(const GeneratorSpec& spec, const std::filesystem::path& path) {
    const nlohmann::json j = {{"model",
                               {{"model_id", spec.config.model_id},
                                {"num_layers", spec.config.num_layers},
                                {"num_experts", spec.config.num_experts},
                                {"top_k", spec.config.top_k}}},
                              {"categories", spec.categories},
                              {"concentration", spec.concentration},
                              {"depth_shape", std::string(to_string(spec.depth_shape))},
                              {"depth_profile", spec.depth_profile},
                              {"token_noise_scale", spec.token_noise_scale},
                              {"tokens_per_prompt", spec.tokens_per_prompt},
                              {"seed", spec.seed},
                              {"base_logits", spec.base_logits}};
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << j.dump() << '\n';
}

GeneratorSpec read_generator_spec_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    GeneratorSpec spec;
    try {
        const auto j = nlohmann::json::parse(in);
        const auto& m = j.at("model");
        spec.config.model_id = m.value("model_id", std::string{});
        spec.config.num_layers = m.at("num_layers").get<int>();
        spec.config.num_experts = m.at("num_experts").get<int>();
        spec.config.top_k = m.at("top_k").get<int>();
        spec.categories = j.at("categories").get<std::vector<std::string>>();
        spec.concentration = j.at("concentration").get<double>();
        const auto shape = parse_depth_shape(j.at("depth_shape").get<std::string>());
        if (!shape) throw SchemaError("depth_shape", "unknown depth_shape");
        spec.depth_shape = *shape;
        spec.depth_profile = j.at("depth_profile").get<std::vector<double>>();
        spec.token_noise_scale = j.at("token_noise_scale").get<double>();
        spec.tokens_per_prompt = j.at("tokens_per_prompt").get<int>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        spec.base_logits = j.at("base_logits").get<std::vector<std::vector<std::vector<double>>>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("generator_spec", fmt::format("{}: {}", path.string(), e.what()));
    }
    spec.check();
    return spec;
}

}  // namespace moexray

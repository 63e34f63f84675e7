// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/baselines.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "moexray/errors.hpp"
#include "moexray/similarity.hpp"

namespace moexray {

std::string_view to_string(BaselineKind k) noexcept {
    return k == BaselineKind::permutation ? "permutation" : "load_balance";
}

namespace {

std::vector<int> random_permutation(int n, Rng& rng) {
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    rng.shuffle(std::span<int>(p));
    return p;
}

struct Moments {
    double mean = 0.0;
    double std = 0.0;
};

Moments sample_moments(const std::vector<double>& xs) {
    Moments m;
    if (xs.empty()) return m;
    m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

void check_pairs(std::int64_t n_pairs) {
    if (n_pairs < kMinBaselinePairs)
        throw DomainError(fmt::format("baseline needs at least {} pairs, got {}", kMinBaselinePairs, n_pairs));
}

}  // namespace

TraceSet permute_experts(const TraceSet& trace, std::uint64_t seed) {
    TraceSet out = trace;
    if (seed == kIdentityPermutationSeed) return out;
    const ModelConfig& cfg = trace.config;
    // Permutations are derived per (prompt index, layer) so the result is
    // independent of event order.
    std::map<std::string_view, std::size_t> prompt_index;
    for (std::size_t i = 0; i < trace.prompts.size(); ++i) prompt_index.emplace(trace.prompts[i].prompt_id, i);
    std::map<std::pair<std::size_t, int>, std::vector<int>> perms;
    for (auto& e : out.events) {
        if (e.layer < 0 || e.layer >= cfg.num_layers || e.expert < 0 || e.expert >= cfg.num_experts) continue;
        auto pit = prompt_index.find(e.prompt_id);
        if (pit == prompt_index.end()) continue;
        const auto key = std::make_pair(pit->second, e.layer);
        auto it = perms.find(key);
        if (it == perms.end()) {
            const auto stream = static_cast<std::uint64_t>(pit->second) * static_cast<std::uint64_t>(cfg.num_layers) +
                                static_cast<std::uint64_t>(e.layer);
            Rng rng(mix_seed(seed, stream));
            it = perms.emplace(key, random_permutation(cfg.num_experts, rng)).first;
        }
        e.expert = it->second[static_cast<std::size_t>(e.expert)];
    }
    return out;
}

CountMatrix permute_counts(const CountMatrix& counts, Rng& rng) {
    CountMatrix out = counts;
    for (int l = 0; l < counts.num_layers; ++l) {
        const auto perm = random_permutation(counts.num_experts, rng);
        for (int e = 0; e < counts.num_experts; ++e)
            out.at(l, perm[static_cast<std::size_t>(e)]) = counts.at(l, e);
    }
    return out;
}

CountMatrix loadbalance_sample(const ModelConfig& config, const std::vector<std::int64_t>& tokens_per_layer,
                               std::uint64_t seed) {
    config.check();
    if (tokens_per_layer.size() != static_cast<std::size_t>(config.num_layers))
        throw DomainError(fmt::format("tokens_per_layer has {} entries, expected {}", tokens_per_layer.size(),
                                      config.num_layers));
    CountMatrix m("load_balance", config.num_layers, config.num_experts);
    Rng rng(seed);
    std::vector<int> pool(static_cast<std::size_t>(config.num_experts));
    const auto k = static_cast<std::size_t>(config.top_k);
    for (int l = 0; l < config.num_layers; ++l) {
        const std::int64_t tokens = tokens_per_layer[static_cast<std::size_t>(l)];
        if (tokens < 0) throw DomainError("token counts must be non-negative");
        for (std::int64_t t = 0; t < tokens; ++t) {
            std::iota(pool.begin(), pool.end(), 0);
            // Partial Fisher-Yates: the first k slots are a uniform k-subset.
            for (std::size_t i = 0; i < k; ++i) {
                const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
                std::swap(pool[i], pool[j]);
                ++m.at(l, pool[i]);
            }
        }
    }
    return m;
}

BaselineReport loadbalance_similarity_stats(const ModelConfig& config,
                                            const std::vector<std::int64_t>& tokens_per_layer,
                                            std::int64_t n_pairs, std::uint64_t seed) {
    check_pairs(n_pairs);
    std::vector<double> sims;
    sims.reserve(static_cast<std::size_t>(n_pairs));
    for (std::int64_t i = 0; i < n_pairs; ++i) {
        const std::uint64_t pair_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        const auto a = signature_from_counts(loadbalance_sample(config, tokens_per_layer, mix_seed(pair_seed, 0)));
        const auto b = signature_from_counts(loadbalance_sample(config, tokens_per_layer, mix_seed(pair_seed, 1)));
        sims.push_back(signature_similarity(a, b).value);
    }
    const Moments m = sample_moments(sims);
    return {BaselineKind::load_balance, n_pairs, m.mean, m.std, seed, config};
}

BaselineReport permutation_similarity_stats(const ModelConfig& config, const std::vector<CountMatrix>& counts,
                                            std::int64_t n_pairs, std::uint64_t seed) {
    check_pairs(n_pairs);
    if (counts.size() < 2) throw DomainError("permutation baseline needs at least 2 prompts");
    std::vector<double> sims;
    sims.reserve(static_cast<std::size_t>(n_pairs));
    for (std::int64_t p = 0; p < n_pairs; ++p) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(p)));
        const auto i = static_cast<std::size_t>(rng.below(counts.size()));
        auto j = static_cast<std::size_t>(rng.below(counts.size() - 1));
        if (j >= i) ++j;
        const auto a = signature_from_counts(permute_counts(counts[i], rng));
        const auto b = signature_from_counts(permute_counts(counts[j], rng));
        sims.push_back(signature_similarity(a, b).value);
    }
    const Moments m = sample_moments(sims);
    return {BaselineKind::permutation, n_pairs, m.mean, m.std, seed, config};
}

std::vector<std::int64_t> empirical_tokens_per_layer(const ModelConfig& config,
                                                     const std::vector<CountMatrix>& counts) {
    std::vector<std::int64_t> out(static_cast<std::size_t>(config.num_layers), 0);
    if (counts.empty()) return out;
    for (int l = 0; l < config.num_layers; ++l) {
        double total = 0.0;
        for (const auto& c : counts) total += static_cast<double>(c.row_sum(l));
        const double per_prompt_tokens = total / static_cast<double>(counts.size()) / config.top_k;
        out[static_cast<std::size_t>(l)] = std::llround(per_prompt_tokens);
    }
    return out;
}

void write_baseline_json(const BaselineReport& r, const std::filesystem::path& path) {
    const nlohmann::json j = {{"kind", std::string(to_string(r.kind))},
                              {"n_pairs", r.sample_count},
                              {"mean", r.mean_similarity},
                              {"std", r.std_similarity},
                              {"seed", r.seed},
                              {"config",
                               {{"model_id", r.config.model_id},
                                {"num_layers", r.config.num_layers},
                                {"num_experts", r.config.num_experts},
                                {"top_k", r.config.top_k}}}};
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << j.dump(2) << '\n';
}

}  // namespace moexray

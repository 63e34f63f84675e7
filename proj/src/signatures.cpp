// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/signatures.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "moexray/errors.hpp"
#include "moexray/format.hpp"

namespace moexray {

std::string_view to_string(TokenFilter f) noexcept {
    switch (f) {
        case TokenFilter::prompt: return "prompt";
        case TokenFilter::generation: return "generation";
        case TokenFilter::all: return "all";
    }
    return "all";
}

std::optional<TokenFilter> parse_token_filter(std::string_view s) noexcept {
    if (s == "prompt") return TokenFilter::prompt;
    if (s == "generation") return TokenFilter::generation;
    if (s == "all") return TokenFilter::all;
    return std::nullopt;
}

bool passes(TokenFilter f, TokenType t) noexcept {
    switch (f) {
        case TokenFilter::prompt: return t == TokenType::prompt;
        case TokenFilter::generation: return t == TokenType::generation;
        case TokenFilter::all: return true;
    }
    return true;
}

CountMatrix::CountMatrix(std::string id, int layers, int experts, TokenFilter filter)
    : prompt_id(std::move(id)),
      token_filter(filter),
      num_layers(layers),
      num_experts(experts),
      counts(static_cast<std::size_t>(layers) * static_cast<std::size_t>(experts), 0) {}

std::int64_t CountMatrix::row_sum(int layer) const {
    std::int64_t s = 0;
    for (int e = 0; e < num_experts; ++e) s += at(layer, e);
    return s;
}

bool RoutingSignature::has_empty_layer() const {
    return std::find(empty_layers.begin(), empty_layers.end(), true) != empty_layers.end();
}

std::vector<CountMatrix> all_activation_counts(const TraceSet& trace, TokenFilter filter) {
    const ModelConfig& cfg = trace.config;
    std::vector<CountMatrix> out;
    out.reserve(trace.prompts.size());
    std::unordered_map<std::string_view, std::size_t> index;
    for (const auto& p : trace.prompts) {
        index.emplace(p.prompt_id, out.size());
        out.emplace_back(p.prompt_id, cfg.num_layers, cfg.num_experts, filter);
    }
    for (const auto& e : deduplicate(trace.events)) {
        if (!passes(filter, e.token_type)) continue;
        if (e.layer < 0 || e.layer >= cfg.num_layers || e.expert < 0 || e.expert >= cfg.num_experts) continue;
        auto it = index.find(e.prompt_id);
        if (it == index.end()) continue;
        ++out[it->second].at(e.layer, e.expert);
    }
    return out;
}

CountMatrix activation_counts(const TraceSet& trace, std::string_view prompt_id, TokenFilter filter) {
    const ModelConfig& cfg = trace.config;
    if (trace.find_prompt(prompt_id) == nullptr)
        throw DomainError(fmt::format("unknown prompt id \"{}\"", prompt_id));
    CountMatrix m(std::string(prompt_id), cfg.num_layers, cfg.num_experts, filter);
    std::vector<RoutingEvent> mine;
    for (const auto& e : trace.events) {
        if (e.prompt_id == prompt_id) mine.push_back(e);
    }
    for (const auto& e : deduplicate(mine)) {
        if (!passes(filter, e.token_type)) continue;
        if (e.layer < 0 || e.layer >= cfg.num_layers || e.expert < 0 || e.expert >= cfg.num_experts) continue;
        ++m.at(e.layer, e.expert);
    }
    return m;
}

RoutingSignature signature_from_counts(const CountMatrix& counts, std::string category) {
    RoutingSignature sig;
    sig.prompt_id = counts.prompt_id;
    sig.category = std::move(category);
    sig.rows = Matrix(static_cast<std::size_t>(counts.num_layers), static_cast<std::size_t>(counts.num_experts));
    sig.empty_layers.assign(static_cast<std::size_t>(counts.num_layers), false);
    for (int l = 0; l < counts.num_layers; ++l) {
        const std::int64_t total = counts.row_sum(l);
        if (total == 0) {
            sig.empty_layers[static_cast<std::size_t>(l)] = true;
            continue;
        }
        const auto denom = static_cast<double>(total);
        for (int e = 0; e < counts.num_experts; ++e)
            sig.rows(static_cast<std::size_t>(l), static_cast<std::size_t>(e)) =
                static_cast<double>(counts.at(l, e)) / denom;
    }
    return sig;
}

Matrix per_token_frequency(const CountMatrix& counts, int top_k) {
    if (top_k < 1) throw DomainError("top_k must be >= 1");
    Matrix f(static_cast<std::size_t>(counts.num_layers), static_cast<std::size_t>(counts.num_experts));
    for (int l = 0; l < counts.num_layers; ++l) {
        const std::int64_t total = counts.row_sum(l);
        if (total == 0) continue;
        const double tokens = static_cast<double>(total) / top_k;
        for (int e = 0; e < counts.num_experts; ++e)
            f(static_cast<std::size_t>(l), static_cast<std::size_t>(e)) = static_cast<double>(counts.at(l, e)) / tokens;
    }
    return f;
}

std::vector<double> flatten(const RoutingSignature& sig) {
    auto d = sig.rows.data();
    return {d.begin(), d.end()};
}

std::vector<RoutingSignature> compute_signatures(const TraceSet& trace, TokenFilter filter) {
    auto counts = all_activation_counts(trace, filter);
    std::vector<RoutingSignature> out;
    out.reserve(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        out.push_back(signature_from_counts(counts[i], trace.prompts[i].category));
    return out;
}

Matrix feature_matrix(const std::vector<RoutingSignature>& sigs) {
    if (sigs.empty()) return {};
    const std::size_t dim = sigs.front().rows.data().size();
    Matrix x(sigs.size(), dim);
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        auto d = sigs[i].rows.data();
        if (d.size() != dim) throw DomainError("signatures have inconsistent shapes");
        std::copy(d.begin(), d.end(), x.row(i).begin());
    }
    return x;
}

void write_signatures_csv(const std::vector<RoutingSignature>& sigs, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "prompt_id,category";
    if (!sigs.empty()) {
        for (int l = 0; l < sigs.front().num_layers(); ++l)
            for (int e = 0; e < sigs.front().num_experts(); ++e) out << fmt::format(",l{}_e{}", l, e);
    }
    out << '\n';
    for (const auto& s : sigs) {
        out << s.prompt_id << ',' << s.category;
        for (double v : s.rows.data()) out << ',' << format_real(v);
        out << '\n';
    }
}

}  // namespace moexray

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "moexray/errors.hpp"
#include "moexray/format.hpp"

namespace moexray {

SampleSummary summarize(std::span<const double> xs) {
    SampleSummary s;
    s.n = xs.size();
    if (xs.empty()) return s;
    // Fixed left-to-right order keeps the result reproducible.
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

WithinAcross split_within_across(const SimilarityMatrix& m) {
    if (m.size() < 2) throw DomainError("within/across split needs at least 2 prompts");
    if (m.labels.size() != m.size()) throw DomainError("every prompt needs a category label");
    WithinAcross out;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            (m.labels[i] == m.labels[j] ? out.within : out.across).push_back(m.values(i, j));
    out.single_category = std::set<std::string>(m.labels.begin(), m.labels.end()).size() == 1;
    return out;
}

std::optional<double> cohens_d(const SampleSummary& a, const SampleSummary& b) {
    if (a.n < 2 || b.n < 2) throw DomainError("Cohen's d needs at least 2 values per sample");
    const double n1 = static_cast<double>(a.n);
    const double n2 = static_cast<double>(b.n);
    const double pooled = std::sqrt(((n1 - 1.0) * a.std * a.std + (n2 - 1.0) * b.std * b.std) / (n1 + n2 - 2.0));
    if (!(pooled > 0.0)) return std::nullopt;
    return (a.mean - b.mean) / pooled;
}

std::optional<double> cohens_d(std::span<const double> a, std::span<const double> b) {
    return cohens_d(summarize(a), summarize(b));
}

namespace {
constexpr double kDegenerateSpread = 1e-12;
}  // namespace

std::vector<std::optional<double>> layer_effect_sizes(const std::vector<RoutingSignature>& sigs,
                                                      std::span<const std::string> labels) {
    if (sigs.size() != labels.size()) throw DomainError("one label per signature required");
    std::map<std::string, std::size_t> per_cat;
    for (const auto& l : labels) ++per_cat[l];
    const auto usable = std::count_if(per_cat.begin(), per_cat.end(), [](const auto& kv) { return kv.second >= 2; });
    if (usable < 2)
        throw DomainError("layer effect sizes need at least two categories with 2+ prompts each");

    const int layers = sigs.front().num_layers();
    std::vector<std::optional<double>> out(static_cast<std::size_t>(layers));
    std::vector<double> within;
    std::vector<double> across;
    for (int l = 0; l < layers; ++l) {
        within.clear();
        across.clear();
        for (std::size_t i = 0; i < sigs.size(); ++i)
            for (std::size_t j = i + 1; j < sigs.size(); ++j)
                (labels[i] == labels[j] ? within : across).push_back(layer_cosine(sigs[i], sigs[j], l).value);
        if (within.size() < 2 || across.size() < 2) continue;
        // All cosines equal up to rounding: no separation to measure.
        const auto [wlo, whi] = std::minmax_element(within.begin(), within.end());
        const auto [alo, ahi] = std::minmax_element(across.begin(), across.end());
        if (std::max(*whi, *ahi) - std::min(*wlo, *alo) <= kDegenerateSpread) continue;
        out[static_cast<std::size_t>(l)] = cohens_d(within, across);
    }
    return out;
}

EffectSizeReport effect_size_report(const SimilarityMatrix& m, const std::vector<RoutingSignature>& sigs) {
    const WithinAcross wa = split_within_across(m);
    if (wa.single_category) throw DomainError("effect sizes need at least two categories");
    EffectSizeReport r;
    r.within = summarize(wa.within);
    r.across = summarize(wa.across);
    if (r.within.n >= 2 && r.across.n >= 2) r.cohens_d = cohens_d(r.within, r.across);
    r.per_layer_d = layer_effect_sizes(sigs, m.labels);
    return r;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("spearman: length mismatch");
    if (x.size() < 2) return std::nullopt;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const SampleSummary sx = summarize(rx);
    const SampleSummary sy = summarize(ry);
    if (sx.std == 0.0 || sy.std == 0.0) return std::nullopt;
    double cov = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - sx.mean) * (ry[i] - sy.mean);
    cov /= static_cast<double>(rx.size() - 1);
    return cov / (sx.std * sy.std);
}

void write_effect_sizes_json(const EffectSizeReport& r, const std::filesystem::path& path) {
    nlohmann::json per_layer = nlohmann::json::array();
    for (const auto& d : r.per_layer_d) per_layer.push_back(d ? nlohmann::json(*d) : nlohmann::json(nullptr));
    const nlohmann::json j = {
        {"within_mean", r.within.mean}, {"within_std", r.within.std}, {"within_n", r.within.n},
        {"across_mean", r.across.mean}, {"across_std", r.across.std}, {"across_n", r.across.n},
        {"cohens_d", r.cohens_d ? nlohmann::json(*r.cohens_d) : nlohmann::json(nullptr)},
        {"per_layer_d", per_layer}};
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << j.dump(2) << '\n';
}

void write_layer_effects_csv(const std::vector<std::optional<double>>& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "layer,d\n";
    for (std::size_t l = 0; l < d.size(); ++l) out << l << ',' << (d[l] ? format_real(*d[l]) : "NA") << '\n';
}

}  // namespace moexray

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/pipeline.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "moexray/baselines.hpp"
#include "moexray/figures.hpp"
#include "moexray/projection.hpp"
#include "moexray/similarity.hpp"
#include "moexray/stats.hpp"

namespace moexray {

namespace fs = std::filesystem;

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

namespace {

struct TracePaths {
    fs::path events;
    fs::path manifest;
};

TracePaths resolve(const PipelineOptions& o) {
    TracePaths p;
    if (fs::is_directory(o.traces)) {
        p.events = o.traces / kEventsFile;
        p.manifest = o.traces / kManifestFile;
    } else {
        p.events = o.traces;
        p.manifest = o.traces.parent_path() / kManifestFile;
    }
    if (o.manifest) p.manifest = *o.manifest;
    return p;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace

TraceSet load_trace_source(const PipelineOptions& options) {
    const TracePaths p = resolve(options);
    if (!fs::exists(p.events) || !fs::exists(p.manifest))
        throw IoError(fmt::format("no prompts found in {}", options.traces.string()));
    TraceSet trace = load_trace(p.events, p.manifest);
    if (trace.prompts.empty()) throw IoError(fmt::format("no prompts found in {}", options.traces.string()));
    return trace;
}

TraceSet load_validated(const PipelineOptions& options) {
    TraceSet trace = load_trace_source(options);
    const ValidationReport report = validate_trace(trace);
    if (report.fatal_count() > 0) {
        std::string msg = fmt::format("trace validation failed ({})", report.summary());
        for (const auto& v : report.violations)
            if (v.severity == Severity::fatal) {
                msg += "\n  " + v.message;
                break;
            }
        throw ValidationFailed(msg);
    }
    return trace;
}

ReportBundle run_pipeline(const PipelineOptions& options) {
    ReportBundle bundle;
    bundle.dir = options.out;
    fs::create_directories(options.out);
    const fs::path marker = options.out / "INCOMPLETE";
    fs::remove(marker);
    auto emit = [&](const fs::path& name) {
        bundle.files.push_back(options.out / name);
        return options.out / name;
    };

    try {
        const TraceSet trace = load_validated(options);
        const TracePaths paths = resolve(options);

        const auto counts = all_activation_counts(trace, options.token_filter);
        std::vector<RoutingSignature> sigs;
        sigs.reserve(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            sigs.push_back(signature_from_counts(counts[i], trace.prompts[i].category));
        write_signatures_csv(sigs, emit("signatures.csv"));

        const SimilarityMatrix sim = pairwise_matrix(sigs);
        write_similarity_csv(sim, emit("similarity_matrix.csv"));
        const CategoryMatrix cats = category_block_means(sim, trace.categories);
        write_category_matrix_csv(cats, emit("category_matrix.csv"));

        const auto tokens = empirical_tokens_per_layer(trace.config, counts);
        const BaselineReport lb =
            loadbalance_similarity_stats(trace.config, tokens, options.baseline_pairs, mix_seed(options.seed, 1));
        write_baseline_json(lb, emit("baseline_load_balance.json"));
        const BaselineReport perm =
            permutation_similarity_stats(trace.config, counts, options.baseline_pairs, mix_seed(options.seed, 2));
        write_baseline_json(perm, emit("baseline_permutation.json"));

        const EffectSizeReport effects = effect_size_report(sim, sigs);
        write_effect_sizes_json(effects, emit("effect_sizes.json"));
        write_layer_effects_csv(effects.per_layer_d, emit("layer_effect_sizes.csv"));

        const nlohmann::json comparison = {{"across_mean", effects.across.mean},
                                           {"load_balance_mean", lb.mean_similarity},
                                           {"permutation_mean", perm.mean_similarity},
                                           {"within_mean", effects.within.mean},
                                           {"ordering_holds", effects.within.mean > lb.mean_similarity &&
                                                                  lb.mean_similarity > effects.across.mean}};
        write_json(emit("baseline_comparison.json"), comparison);

        const Matrix features = feature_matrix(sigs);
        const auto labels = encode_labels(trace.labels(), trace.categories);
        const CVReport cv =
            cross_validate(features, labels, trace.categories, options.folds, options.logreg, mix_seed(options.seed, 3));
        write_cv_report_json(cv, options.logreg, emit("cv_report.json"));
        write_confusion_csv(cv, emit("confusion.csv"));

        const Projection proj = pca_fit(features, 2);
        const Matrix coords = pca_transform(proj, features);
        write_pca_csv(sim.prompt_ids, sim.labels, coords, emit("pca_coords.csv"));
        write_json(emit("pca_summary.json"), {{"explained_variance_ratio", proj.explained_variance_ratio},
                                              {"eigenvalues", proj.eigenvalues}});

        if (options.figures) {
            write_text_file(emit("heatmap.svg"), heatmap_svg(cats));
            write_text_file(emit("baseline_bars.svg"),
                            bars_svg({{"Across", effects.across.mean},
                                      {"Load-Balance", lb.mean_similarity},
                                      {"Within", effects.within.mean}},
                                     "Routing similarity vs load-balancing baseline"));
            write_text_file(emit("layer_signal.svg"), layer_signal_svg(effects.per_layer_d));
            write_text_file(emit("pca_scatter.svg"), scatter_svg(coords, sim.labels, trace.categories));
        }

        const nlohmann::json run_options = {{"seed", options.seed},
                                            {"token_filter", std::string(to_string(options.token_filter))},
                                            {"folds", options.folds},
                                            {"baseline_pairs", options.baseline_pairs},
                                            {"l2_strength", options.logreg.l2_strength},
                                            {"max_iters", options.logreg.max_iters},
                                            {"tolerance", options.logreg.tolerance},
                                            {"figures", options.figures}};
        const nlohmann::json meta = {
            {"tool", "moe-xray"},
            {"version", std::string(kToolVersion)},
            {"options", run_options},
            {"config_hash", fnv1a_hex(run_options.dump())},
            {"events_fnv1a", fnv1a_hex(slurp(paths.events))},
            {"manifest_fnv1a", fnv1a_hex(slurp(paths.manifest))},
            {"rng", "mt19937_64 with SplitMix64-derived stream seeds"},
            {"model",
             {{"model_id", trace.config.model_id},
              {"num_layers", trace.config.num_layers},
              {"num_experts", trace.config.num_experts},
              {"top_k", trace.config.top_k}}},
            {"prompts", trace.prompts.size()}};
        write_json(emit("run_metadata.json"), meta);
    } catch (const std::exception& e) {
        try {
            write_text_file(marker, std::string(e.what()) + "\n");
        } catch (...) {
        }
        throw;
    }
    return bundle;
}

}  // namespace moexray

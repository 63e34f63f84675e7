// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0
//
// moe-xray: routing-trace analysis from the command line.
//
// Exit codes: 0 success, 2 fatal trace validation, 3 configuration error,
// 4 I/O error, 1 anything else.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "moexray/baselines.hpp"
#include "moexray/classifier.hpp"
#include "moexray/figures.hpp"
#include "moexray/pipeline.hpp"
#include "moexray/projection.hpp"
#include "moexray/signatures.hpp"
#include "moexray/synthgen.hpp"

namespace fs = std::filesystem;
using namespace moexray;

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kValidation = 2, kConfig = 3, kIo = 4 };

struct SimulateArgs {
    std::string preset = "paper-shape";
    fs::path out;
    std::uint64_t seed = 0;
    int prompts_per_category = kDefaultPromptsPerCategory;
    std::optional<int> tokens;
    std::optional<double> concentration;
    std::optional<double> noise;
    std::optional<std::string> depth_shape;
};

int run_simulate(const SimulateArgs& a) {
    auto spec = preset_spec(a.preset, a.seed);
    if (!spec) {
        fmt::print(stderr, "error: unknown preset \"{}\" (paper-shape, layer-signal, no-signal)\n", a.preset);
        return kConfig;
    }
    if (a.concentration || a.depth_shape || a.noise || a.tokens) {
        DepthShape shape = spec->depth_shape;
        if (a.depth_shape) {
            auto s = parse_depth_shape(*a.depth_shape);
            if (!s) {
                fmt::print(stderr, "error: unknown depth shape \"{}\"\n", *a.depth_shape);
                return kConfig;
            }
            shape = *s;
        }
        *spec = make_generator_spec(spec->config, spec->categories, a.concentration.value_or(spec->concentration),
                                    shape, a.seed, a.noise.value_or(spec->token_noise_scale),
                                    a.tokens.value_or(spec->tokens_per_prompt));
    }
    const TraceSet trace = generate_corpus(*spec, a.prompts_per_category);
    fs::create_directories(a.out);
    write_trace(trace, a.out / kEventsFile, a.out / kManifestFile);
    write_generator_spec_json(*spec, a.out / "generator_spec.json");
    fmt::print("wrote {} prompts, {} events to {}\n", trace.prompts.size(), trace.events.size(), a.out.string());
    return kOk;
}

int run_validate(const PipelineOptions& o, std::size_t max_lines) {
    const TraceSet trace = load_trace_source(o);
    const ValidationReport report = validate_trace(trace);
    std::size_t shown = 0;
    for (const auto& v : report.violations) {
        if (shown++ >= max_lines) {
            fmt::print("... {} more\n", report.violations.size() - max_lines);
            break;
        }
        fmt::print("{}: {}\n", v.severity == Severity::fatal ? "fatal" : "warning", v.message);
    }
    fmt::print("{}\n", report.summary());
    return report.fatal_count() > 0 ? kValidation : kOk;
}

int run_signatures(const PipelineOptions& o) {
    const TraceSet trace = load_validated(o);
    fs::create_directories(o.out);
    const auto sigs = compute_signatures(trace, o.token_filter);
    write_signatures_csv(sigs, o.out / "signatures.csv");
    fmt::print("wrote {} signatures of length {}\n", sigs.size(), trace.config.feature_dim());
    return kOk;
}

int run_classify(const PipelineOptions& o) {
    const TraceSet trace = load_validated(o);
    fs::create_directories(o.out);
    const auto sigs = compute_signatures(trace, o.token_filter);
    const auto labels = encode_labels(trace.labels(), trace.categories);
    const CVReport cv = cross_validate(feature_matrix(sigs), labels, trace.categories, o.folds, o.logreg,
                                       mix_seed(o.seed, 3));
    write_cv_report_json(cv, o.logreg, o.out / "cv_report.json");
    write_confusion_csv(cv, o.out / "confusion.csv");
    fmt::print("accuracy {:.4f} +- {:.4f}, macro F1 {:.4f}\n", cv.mean_accuracy, cv.std_accuracy, cv.macro_f1);
    return kOk;
}

int run_baseline(const PipelineOptions& o, const std::string& kind) {
    const TraceSet trace = load_validated(o);
    fs::create_directories(o.out);
    const auto counts = all_activation_counts(trace, o.token_filter);
    if (kind == "load_balance" || kind == "both") {
        const auto r = loadbalance_similarity_stats(trace.config, empirical_tokens_per_layer(trace.config, counts),
                                                    o.baseline_pairs, mix_seed(o.seed, 1));
        write_baseline_json(r, o.out / "baseline_load_balance.json");
        fmt::print("load_balance: mean {:.4f} std {:.4f}\n", r.mean_similarity, r.std_similarity);
    }
    if (kind == "permutation" || kind == "both") {
        const auto r = permutation_similarity_stats(trace.config, counts, o.baseline_pairs, mix_seed(o.seed, 2));
        write_baseline_json(r, o.out / "baseline_permutation.json");
        fmt::print("permutation: mean {:.4f} std {:.4f}\n", r.mean_similarity, r.std_similarity);
    }
    return kOk;
}

int run_project(const PipelineOptions& o) {
    const TraceSet trace = load_validated(o);
    fs::create_directories(o.out);
    const auto sigs = compute_signatures(trace, o.token_filter);
    const Matrix features = feature_matrix(sigs);
    const Projection p = pca_fit(features, 2);
    const Matrix coords = pca_transform(p, features);
    std::vector<std::string> ids;
    for (const auto& s : sigs) ids.push_back(s.prompt_id);
    write_pca_csv(ids, trace.labels(), coords, o.out / "pca_coords.csv");
    if (o.figures) write_text_file(o.out / "pca_scatter.svg", scatter_svg(coords, trace.labels(), trace.categories));
    fmt::print("explained variance ratio: {:.4f}, {:.4f}\n", p.explained_variance_ratio[0],
               p.explained_variance_ratio[1]);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"moe-xray: routing signature analysis for mixture-of-experts traces"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    PipelineOptions opts;
    std::string token_filter = "all";
    bool no_figures = false;
    auto add_shared = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--traces", opts.traces, "Trace directory (events.jsonl + manifest.json) or events file")
            ->required();
        sub->add_option("--manifest", opts.manifest, "Manifest file, overriding the one next to the events");
        auto* out = sub->add_option("--out", opts.out, "Output directory");
        if (needs_out) out->required();
        sub->add_option("--seed", opts.seed, "Seed for every stochastic step");
        sub->add_option("--token-filter", token_filter, "Tokens feeding signatures")
            ->check(CLI::IsMember({"prompt", "generation", "all"}));
    };

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic task-conditioned trace corpus");
    simulate->add_option("--preset", sim.preset, "paper-shape | layer-signal | no-signal");
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_option("--seed", sim.seed, "Generator seed");
    simulate->add_option("--prompts-per-category", sim.prompts_per_category)->check(CLI::NonNegativeNumber);
    simulate->add_option("--tokens", sim.tokens, "Generated tokens per prompt")->check(CLI::NonNegativeNumber);
    simulate->add_option("--concentration", sim.concentration)->check(CLI::NonNegativeNumber);
    simulate->add_option("--noise", sim.noise, "Per-token logit noise scale")->check(CLI::NonNegativeNumber);
    simulate->add_option("--depth-shape", sim.depth_shape, "flat | linear_increasing | late_peak");

    std::size_t max_lines = 50;
    auto* validate = app.add_subcommand("validate", "Check a trace against its manifest and model config");
    add_shared(validate, false);
    validate->add_option("--max-lines", max_lines, "Violations to print");

    auto* signatures = app.add_subcommand("signatures", "Export routing signatures as CSV");
    add_shared(signatures, true);

    auto* analyze = app.add_subcommand("analyze", "Run the full analysis and write a report bundle");
    add_shared(analyze, true);

    auto* classify = app.add_subcommand("classify", "Stratified cross-validated task classification");
    add_shared(classify, true);

    std::string baseline_kind = "both";
    auto* baseline = app.add_subcommand("baseline", "Permutation and load-balance similarity baselines");
    add_shared(baseline, true);
    baseline->add_option("--kind", baseline_kind)->check(CLI::IsMember({"permutation", "load_balance", "both"}));

    auto* project = app.add_subcommand("project", "PCA projection of routing signatures");
    add_shared(project, true);

    for (auto* sub : {analyze, classify}) {
        sub->add_option("--folds", opts.folds, "Cross-validation folds")->check(CLI::PositiveNumber);
        sub->add_option("--l2", opts.logreg.l2_strength, "L2 penalty strength")->check(CLI::NonNegativeNumber);
        sub->add_option("--max-iters", opts.logreg.max_iters)->check(CLI::PositiveNumber);
        sub->add_option("--tolerance", opts.logreg.tolerance)->check(CLI::PositiveNumber);
    }
    for (auto* sub : {analyze, baseline})
        sub->add_option("--baseline-pairs", opts.baseline_pairs, "Monte-Carlo pairs per baseline")
            ->check(CLI::Range(kMinBaselinePairs, std::int64_t{100'000'000}));
    for (auto* sub : {analyze, project}) sub->add_flag("--no-figures", no_figures, "Skip SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }
    opts.token_filter = *parse_token_filter(token_filter);
    opts.figures = !no_figures;

    try {
        if (*simulate) return run_simulate(sim);
        if (*validate) return run_validate(opts, max_lines);
        if (*signatures) return run_signatures(opts);
        if (*classify) return run_classify(opts);
        if (*baseline) return run_baseline(opts, baseline_kind);
        if (*project) return run_project(opts);
        if (*analyze) {
            const ReportBundle b = run_pipeline(opts);
            fmt::print("wrote {} files to {}\n", b.files.size(), b.dir.string());
            return kOk;
        }
    } catch (const ValidationFailed& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kValidation;
    } catch (const ParseError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kValidation;
    } catch (const SchemaError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kValidation;
    } catch (const ReferentialError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kValidation;
    } catch (const IoError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kIo;
    } catch (const DomainError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kConfig;
    } catch (const fs::filesystem_error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kOther;
    }
    return kOther;
}

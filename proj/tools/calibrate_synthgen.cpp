// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0
//
// Grid search over generator concentration and token noise. Prints, for each
// setting, the within/across mean similarity of the default 4x20 corpus, the
// load-balance baseline mean and the CV accuracy. The defaults in
// include/moexray/synthgen.hpp were picked from this table: within/across
// close to 0.84/0.62 while keeping Within > LoadBalance > Across by > 0.03.

#include <fmt/format.h>

#include <CLI11.hpp>

#include "moexray/baselines.hpp"
#include "moexray/classifier.hpp"
#include "moexray/signatures.hpp"
#include "moexray/similarity.hpp"
#include "moexray/stats.hpp"
#include "moexray/synthgen.hpp"

int main(int argc, char** argv) {
    using namespace moexray;
    CLI::App app{"Calibrate synthetic generator defaults"};
    std::vector<double> concentrations{1.0, 1.5, 2.0, 2.5, 3.0};
    std::vector<double> noises{1.0};
    std::string shape_name = "late_peak";
    std::uint64_t seed = 0;
    bool with_cv = false;
    app.add_option("--concentration", concentrations, "Concentrations to try");
    app.add_option("--noise", noises, "Token noise scales to try");
    app.add_option("--shape", shape_name, "Depth shape");
    app.add_option("--seed", seed, "Seed");
    app.add_flag("--cv", with_cv, "Also run 5-fold cross-validation");
    CLI11_PARSE(app, argc, argv);

    const auto shape = parse_depth_shape(shape_name);
    if (!shape) {
        fmt::print(stderr, "unknown shape {}\n", shape_name);
        return 3;
    }
    ModelConfig cfg;
    cfg.model_id = "synthetic";
    const std::vector<std::int64_t> tokens(static_cast<std::size_t>(cfg.num_layers), kDefaultTokensPerPrompt);
    const auto lb = loadbalance_similarity_stats(cfg, tokens, 1000, seed);
    fmt::print("load_balance mean {:.4f} std {:.4f}\n", lb.mean_similarity, lb.std_similarity);
    fmt::print("{:>6} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "conc", "noise", "within", "across", "w-lb", "lb-a",
               "cv_acc");
    for (double noise : noises) {
        for (double c : concentrations) {
            const auto spec = make_generator_spec(cfg, default_categories(), c, *shape, seed, noise);
            const auto trace = generate_corpus(spec, kDefaultPromptsPerCategory);
            const auto sigs = compute_signatures(trace);
            const auto m = pairwise_matrix(sigs);
            const auto wa = split_within_across(m);
            const auto w = summarize(wa.within);
            const auto a = summarize(wa.across);
            double acc = -1.0;
            if (with_cv) {
                const auto labels = encode_labels(trace.labels(), trace.categories);
                acc = cross_validate(feature_matrix(sigs), labels, trace.categories, 5, {}, seed).mean_accuracy;
            }
            fmt::print("{:>6.2f} {:>6.2f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.3f}\n", c, noise, w.mean, a.mean,
                       w.mean - lb.mean_similarity, lb.mean_similarity - a.mean, acc);
        }
    }
    return 0;
}

// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "moexray/signatures.hpp"
#include "moexray/trace.hpp"

namespace moexray::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("moexray_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline ModelConfig small_config(int layers = 2, int experts = 4, int k = 2) {
    ModelConfig c;
    c.model_id = "test";
    c.num_layers = layers;
    c.num_experts = experts;
    c.top_k = k;
    return c;
}

/// Complete trace where every token of every prompt selects the given experts at every layer.
inline TraceSet uniform_route_trace(const ModelConfig& cfg, const std::vector<std::pair<std::string, std::string>>& prompts,
                                    int tokens, const std::vector<int>& experts) {
    TraceSet t;
    t.config = cfg;
    for (const auto& [id, cat] : prompts) {
        if (std::find(t.categories.begin(), t.categories.end(), cat) == t.categories.end()) t.categories.push_back(cat);
        t.prompts.push_back({id, cat, {{TokenType::generation, tokens}}});
        for (int tok = 0; tok < tokens; ++tok)
            for (int l = 0; l < cfg.num_layers; ++l)
                for (int e : experts) t.events.push_back({id, l, e, tok, TokenType::generation});
    }
    return t;
}

/// Signature with the given rows (layer-major) and an optional label.
inline RoutingSignature make_signature(const std::vector<std::vector<double>>& rows, std::string category = "c",
                                       std::string id = "p") {
    RoutingSignature s;
    s.prompt_id = std::move(id);
    s.category = std::move(category);
    s.rows = Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
    s.empty_layers.assign(rows.size(), false);
    for (std::size_t l = 0; l < rows.size(); ++l) {
        double sum = 0.0;
        for (std::size_t e = 0; e < rows[l].size(); ++e) {
            s.rows(l, e) = rows[l][e];
            sum += rows[l][e];
        }
        s.empty_layers[l] = sum == 0.0;
    }
    return s;
}

}  // namespace moexray::testing

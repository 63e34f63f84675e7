// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moexray {

/// Router geometry of the traced model. Layer and expert indices are 0-based.
struct ModelConfig {
    std::string model_id;
    int num_layers = 16;
    int num_experts = 64;
    int top_k = 8;

    /// Throws DomainError unless num_layers >= 1 and 1 <= top_k <= num_experts.
    void check() const;
    int feature_dim() const noexcept { return num_layers * num_experts; }

    bool operator==(const ModelConfig&) const = default;
};

enum class TokenType : std::uint8_t { prompt, generation };

std::string_view to_string(TokenType t) noexcept;
std::optional<TokenType> parse_token_type(std::string_view s) noexcept;

/// One expert activation: expert `expert` ran for token `token_pos` at layer `layer`.
struct RoutingEvent {
    std::string prompt_id;
    int layer = 0;
    int expert = 0;
    std::int64_t token_pos = 0;
    TokenType token_type = TokenType::generation;

    auto operator<=>(const RoutingEvent&) const = default;
};

struct PromptMeta {
    std::string prompt_id;
    std::string category;
    std::map<TokenType, std::int64_t> token_counts;

    bool operator==(const PromptMeta&) const = default;
};

struct TraceSet {
    ModelConfig config;
    std::vector<std::string> categories;
    std::vector<PromptMeta> prompts;
    std::vector<RoutingEvent> events;

    const PromptMeta* find_prompt(std::string_view prompt_id) const;
    /// Category label of every prompt, in manifest order.
    std::vector<std::string> labels() const;
};

/// Parses one events-file line. `line_no` is only used in diagnostics.
/// Unknown fields are ignored; missing or mistyped fields raise SchemaError.
RoutingEvent parse_event_line(std::string_view line, std::size_t line_no = 1);

std::string format_event_line(const RoutingEvent& e);

/// Default file names inside a trace directory.
inline constexpr std::string_view kEventsFile = "events.jsonl";
inline constexpr std::string_view kManifestFile = "manifest.json";

/// Reads an events JSONL file and its manifest. Event order is preserved.
/// Throws IoError, ParseError, SchemaError, or ReferentialError (orphan prompt ids).
TraceSet load_trace(const std::filesystem::path& events_path,
                    const std::filesystem::path& manifest_path);

void write_trace(const TraceSet& trace,
                 const std::filesystem::path& events_path,
                 const std::filesystem::path& manifest_path);

enum class Severity : std::uint8_t { fatal, warning };

struct Violation {
    Severity severity;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    std::size_t fatal_count() const;
    std::size_t warning_count() const;
    bool clean() const { return violations.empty(); }
    /// e.g. "0 fatal, 0 warnings"
    std::string summary() const;
};

/// Checks index bounds, prompt references, duplicate activations, top-k group
/// completeness and per-prompt layer coverage. Never throws on bad data.
ValidationReport validate_trace(const TraceSet& trace);

/// Drops repeated (prompt, token, layer, expert) activations, keeping the first.
std::vector<RoutingEvent> deduplicate(const std::vector<RoutingEvent>& events);

}  // namespace moexray

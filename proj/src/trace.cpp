// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/trace.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "moexray/errors.hpp"

namespace moexray {

using nlohmann::json;

void ModelConfig::check() const {
    if (num_layers < 1) throw DomainError("num_layers must be >= 1");
    if (num_experts < 1) throw DomainError("num_experts must be >= 1");
    if (top_k < 1 || top_k > num_experts)
        throw DomainError(fmt::format("top_k must lie in [1, {}], got {}", num_experts, top_k));
}

std::string_view to_string(TokenType t) noexcept {
    return t == TokenType::prompt ? "prompt" : "generation";
}

std::optional<TokenType> parse_token_type(std::string_view s) noexcept {
    if (s == "prompt") return TokenType::prompt;
    if (s == "generation") return TokenType::generation;
    return std::nullopt;
}

const PromptMeta* TraceSet::find_prompt(std::string_view prompt_id) const {
    auto it = std::find_if(prompts.begin(), prompts.end(),
                           [&](const PromptMeta& p) { return p.prompt_id == prompt_id; });
    return it == prompts.end() ? nullptr : &*it;
}

std::vector<std::string> TraceSet::labels() const {
    std::vector<std::string> out;
    out.reserve(prompts.size());
    for (const auto& p : prompts) out.push_back(p.category);
    return out;
}

namespace {

const json& require(const json& obj, const char* field, std::size_t line_no) {
    auto it = obj.find(field);
    if (it == obj.end())
        throw SchemaError(field, fmt::format("line {}: missing field \"{}\"", line_no, field));
    return *it;
}

std::int64_t require_int(const json& obj, const char* field, std::size_t line_no) {
    const json& v = require(obj, field, line_no);
    if (!v.is_number_integer())
        throw SchemaError(field, fmt::format("line {}: field \"{}\" must be an integer", line_no, field));
    return v.get<std::int64_t>();
}

std::string require_string(const json& obj, const char* field, std::size_t line_no) {
    const json& v = require(obj, field, line_no);
    if (!v.is_string())
        throw SchemaError(field, fmt::format("line {}: field \"{}\" must be a string", line_no, field));
    return v.get<std::string>();
}

int narrow_index(std::int64_t v, const char* field, std::size_t line_no) {
    // Range against the model is checked by validate_trace; here only representability.
    if (v < INT32_MIN || v > INT32_MAX)
        throw SchemaError(field, fmt::format("line {}: field \"{}\" does not fit an index", line_no, field));
    return static_cast<int>(v);
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(0, fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace

RoutingEvent parse_event_line(std::string_view line, std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, fmt::format("malformed JSON ({})", e.what()));
    }
    if (!obj.is_object()) throw ParseError(line_no, "event must be a JSON object");

    RoutingEvent ev;
    ev.prompt_id = require_string(obj, "prompt_id", line_no);
    ev.layer = narrow_index(require_int(obj, "layer", line_no), "layer", line_no);
    ev.expert = narrow_index(require_int(obj, "expert", line_no), "expert", line_no);
    ev.token_pos = require_int(obj, "token_pos", line_no);
    const std::string type = require_string(obj, "token_type", line_no);
    auto tt = parse_token_type(type);
    if (!tt)
        throw SchemaError("token_type",
                          fmt::format("line {}: token_type must be \"prompt\" or \"generation\", got \"{}\"",
                                      line_no, type));
    ev.token_type = *tt;
    return ev;
}

std::string format_event_line(const RoutingEvent& e) {
    json obj = {{"prompt_id", e.prompt_id},
                {"layer", e.layer},
                {"expert", e.expert},
                {"token_pos", e.token_pos},
                {"token_type", std::string(to_string(e.token_type))}};
    return obj.dump();
}

TraceSet load_trace(const std::filesystem::path& events_path,
                    const std::filesystem::path& manifest_path) {
    TraceSet trace;
    const json manifest = read_json_file(manifest_path);
    try {
        const json& model = manifest.at("model");
        trace.config.model_id = model.value("model_id", std::string{});
        trace.config.num_layers = model.at("num_layers").get<int>();
        trace.config.num_experts = model.at("num_experts").get<int>();
        trace.config.top_k = model.at("top_k").get<int>();
        trace.categories = manifest.at("categories").get<std::vector<std::string>>();
        for (const json& p : manifest.at("prompts")) {
            PromptMeta meta;
            meta.prompt_id = p.at("prompt_id").get<std::string>();
            meta.category = p.at("category").get<std::string>();
            if (auto tc = p.find("token_counts"); tc != p.end()) {
                for (const auto& [k, v] : tc->items()) {
                    if (auto t = parse_token_type(k)) meta.token_counts[*t] = v.get<std::int64_t>();
                }
            }
            trace.prompts.push_back(std::move(meta));
        }
    } catch (const json::exception& e) {
        throw SchemaError("manifest", fmt::format("{}: {}", manifest_path.string(), e.what()));
    }
    trace.config.check();

    std::unordered_set<std::string> ids;
    const std::set<std::string> cats(trace.categories.begin(), trace.categories.end());
    for (const auto& p : trace.prompts) {
        if (!ids.insert(p.prompt_id).second)
            throw ReferentialError(fmt::format("duplicate prompt_id \"{}\" in manifest", p.prompt_id));
        if (!cats.contains(p.category))
            throw ReferentialError(fmt::format("prompt \"{}\" has undeclared category \"{}\"",
                                               p.prompt_id, p.category));
    }

    std::ifstream in(events_path);
    if (!in) throw IoError(fmt::format("cannot open {}", events_path.string()));
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> orphans;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        RoutingEvent ev = parse_event_line(line, line_no);
        if (!ids.contains(ev.prompt_id)) orphans.insert(ev.prompt_id);
        trace.events.push_back(std::move(ev));
    }
    if (in.bad()) throw IoError(fmt::format("read error on {}", events_path.string()));
    if (!orphans.empty())
        throw ReferentialError(fmt::format("events reference prompt ids missing from the manifest: {}",
                                           fmt::join(orphans, ", ")));
    return trace;
}

void write_trace(const TraceSet& trace,
                 const std::filesystem::path& events_path,
                 const std::filesystem::path& manifest_path) {
    json prompts = json::array();
    for (const auto& p : trace.prompts) {
        json entry = {{"prompt_id", p.prompt_id}, {"category", p.category}};
        if (!p.token_counts.empty()) {
            json tc = json::object();
            for (const auto& [t, n] : p.token_counts) tc[std::string(to_string(t))] = n;
            entry["token_counts"] = tc;
        }
        prompts.push_back(std::move(entry));
    }
    const json manifest = {{"model",
                            {{"model_id", trace.config.model_id},
                             {"num_layers", trace.config.num_layers},
                             {"num_experts", trace.config.num_experts},
                             {"top_k", trace.config.top_k}}},
                           {"categories", trace.categories},
                           {"prompts", prompts}};
    {
        std::ofstream out(manifest_path);
        if (!out) throw IoError(fmt::format("cannot write {}", manifest_path.string()));
        out << manifest.dump(2) << '\n';
    }
    std::ofstream out(events_path);
    if (!out) throw IoError(fmt::format("cannot write {}", events_path.string()));
    for (const auto& e : trace.events) out << format_event_line(e) << '\n';
    if (!out) throw IoError(fmt::format("write error on {}", events_path.string()));
}

std::size_t ValidationReport::fatal_count() const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [](const Violation& v) { return v.severity == Severity::fatal; }));
}

std::size_t ValidationReport::warning_count() const { return violations.size() - fatal_count(); }

std::string ValidationReport::summary() const {
    const auto w = warning_count();
    return fmt::format("{} fatal, {} warning{}", fatal_count(), w, w == 1 ? "" : "s");
}

namespace {

using ActivationKey = std::tuple<std::string_view, std::int64_t, int, int>;

struct KeyHash {
    std::size_t operator()(const ActivationKey& k) const noexcept {
        std::size_t h = std::hash<std::string_view>{}(std::get<0>(k));
        auto combine = [&h](std::size_t v) { h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2); };
        combine(std::hash<std::int64_t>{}(std::get<1>(k)));
        combine(std::hash<int>{}(std::get<2>(k)));
        combine(std::hash<int>{}(std::get<3>(k)));
        return h;
    }
};

}  // namespace

std::vector<RoutingEvent> deduplicate(const std::vector<RoutingEvent>& events) {
    std::unordered_set<ActivationKey, KeyHash> seen;
    seen.reserve(events.size());
    std::vector<RoutingEvent> out;
    out.reserve(events.size());
    for (const auto& e : events) {
        if (seen.emplace(e.prompt_id, e.token_pos, e.layer, e.expert).second) out.push_back(e);
    }
    return out;
}

ValidationReport validate_trace(const TraceSet& trace) {
    ValidationReport report;
    auto fatal = [&](std::string msg) { report.violations.push_back({Severity::fatal, std::move(msg)}); };
    auto warn = [&](std::string msg) { report.violations.push_back({Severity::warning, std::move(msg)}); };

    const ModelConfig& cfg = trace.config;
    try {
        cfg.check();
    } catch (const DomainError& e) {
        fatal(fmt::format("invalid model config: {}", e.what()));
        return report;
    }

    std::unordered_map<std::string_view, std::size_t> prompt_index;
    for (std::size_t i = 0; i < trace.prompts.size(); ++i) prompt_index.emplace(trace.prompts[i].prompt_id, i);

    std::unordered_set<ActivationKey, KeyHash> seen;
    seen.reserve(trace.events.size());
    // (prompt, token, layer) -> number of distinct experts
    std::map<std::tuple<std::string_view, std::int64_t, int>, int> group_sizes;
    std::vector<std::vector<bool>> layer_seen(trace.prompts.size(),
                                              std::vector<bool>(static_cast<std::size_t>(cfg.num_layers), false));
    std::set<std::string_view> unknown;
    std::size_t duplicates = 0;

    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const RoutingEvent& e = trace.events[i];
        bool in_range = true;
        if (e.layer < 0 || e.layer >= cfg.num_layers) {
            fatal(fmt::format("event {} (prompt {}): layer index out of range: {} not in [0, {})", i,
                              e.prompt_id, e.layer, cfg.num_layers));
            in_range = false;
        }
        if (e.expert < 0 || e.expert >= cfg.num_experts) {
            fatal(fmt::format("event {} (prompt {}): expert index out of range: {} not in [0, {})", i,
                              e.prompt_id, e.expert, cfg.num_experts));
            in_range = false;
        }
        if (e.token_pos < 0) {
            fatal(fmt::format("event {} (prompt {}): negative token position {}", i, e.prompt_id, e.token_pos));
            in_range = false;
        }
        auto pit = prompt_index.find(e.prompt_id);
        if (pit == prompt_index.end()) {
            unknown.insert(e.prompt_id);
            continue;
        }
        if (!in_range) continue;
        if (!seen.emplace(e.prompt_id, e.token_pos, e.layer, e.expert).second) {
            ++duplicates;
            continue;
        }
        ++group_sizes[{e.prompt_id, e.token_pos, e.layer}];
        layer_seen[pit->second][static_cast<std::size_t>(e.layer)] = true;
    }

    for (auto id : unknown) fatal(fmt::format("unknown prompt id \"{}\" referenced by events", id));
    if (duplicates > 0)
        warn(fmt::format("{} duplicate activation event(s) will be deduplicated", duplicates));

    for (const auto& [key, n] : group_sizes) {
        if (n != cfg.top_k)
            warn(fmt::format("incomplete routing group: prompt {} token {} layer {} has {} expert(s), expected {}",
                             std::get<0>(key), std::get<1>(key), std::get<2>(key), n, cfg.top_k));
    }
    for (std::size_t p = 0; p < trace.prompts.size(); ++p) {
        for (int l = 0; l < cfg.num_layers; ++l) {
            if (!layer_seen[p][static_cast<std::size_t>(l)])
                warn(fmt::format("prompt {} has no events at layer {}", trace.prompts[p].prompt_id, l));
        }
    }
    return report;
}

}  // namespace moexray

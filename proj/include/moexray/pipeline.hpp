// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moexray/classifier.hpp"
#include "moexray/errors.hpp"
#include "moexray/signatures.hpp"
#include "moexray/trace.hpp"

namespace moexray {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Raised when a trace has fatal validation violations.
class ValidationFailed : public Error {
public:
    using Error::Error;
};

struct PipelineOptions {
    /// Directory holding events.jsonl and manifest.json, or the events file itself.
    std::filesystem::path traces;
    /// Overrides the manifest location derived from `traces`.
    std::optional<std::filesystem::path> manifest;
    std::filesystem::path out;
    std::uint64_t seed = 0;
    TokenFilter token_filter = TokenFilter::all;
    int folds = 5;
    std::int64_t baseline_pairs = 1000;
    LogRegParams logreg;
    bool figures = true;
};

/// Resolves events/manifest paths and loads the trace. Throws IoError
/// ("no prompts found") when the location holds no trace or an empty manifest.
TraceSet load_trace_source(const PipelineOptions& options);

/// Loads and validates; throws ValidationFailed on fatal violations.
TraceSet load_validated(const PipelineOptions& options);

struct ReportBundle {
    std::filesystem::path dir;
    std::vector<std::filesystem::path> files;  // everything written, in order
};

/// ingest -> signatures -> similarity -> baselines -> stats -> classify ->
/// project -> emit. On failure an INCOMPLETE marker with the diagnostic is left
/// in the output directory and the error is rethrown.
ReportBundle run_pipeline(const PipelineOptions& options);

/// FNV-1a 64-bit digest of a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace moexray

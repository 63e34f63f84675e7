// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace moexray {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed JSON or an unreadable record. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A record is syntactically valid JSON but misses or mistypes a field.
class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& what)
        : Error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Events reference prompts missing from the manifest (or similar cross-file mismatch).
class ReferentialError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or inconsistent shapes passed to an analysis routine.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace moexray

#pragma once

#include <stdexcept>
#include <string>

namespace shapshift {

// Base class for all library errors. `code()` is a stable machine-readable
// identifier used by the CLI for single-line error reporting.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Input data does not conform to a declared schema (missing column,
// unknown category, dimension mismatch).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& message) : Error("schema", message) {}
};

// Malformed file contents (CSV cell, JSON field).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse", message) {}
};

// A model file violates structural invariants (cycles, orphans, unknown fields).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

// A split node is reached by zero rows under P or Q, so its conditional
// probability does not exist and no SV analysis is possible for that tree.
class UndefinedConditionalError : public Error {
public:
    UndefinedConditionalError(int node_id, const std::string& message)
        : Error("undefined_conditional", message), node_id_(node_id) {}

    int node_id() const noexcept { return node_id_; }

private:
    int node_id_;
};

// A reweighting function has a zero denominator (source conditional is
// exactly 0 or 1 while the target differs).
class DegenerateReweightError : public Error {
public:
    explicit DegenerateReweightError(const std::string& message)
        : Error("degenerate_reweight", message) {}
};

// Generic invalid-argument error for operation preconditions.
class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& message)
        : Error("invalid_argument", message) {}
};

}  // namespace shapshift

#pragma once
// Typed errors that callers are expected to branch on.

#include <stdexcept>
#include <string>

namespace rr {

// Malformed serialized artifact or model output (never a partial load).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Feature vector does not match a model's schema.
class SchemaMismatchError : public std::runtime_error {
public:
    explicit SchemaMismatchError(const std::string& what) : std::runtime_error(what) {}
};

// No frontier point satisfies the requested utility target. Deliberately not
// a silent fallback: the caller decides whether to retarget or switch anchor.
class EpsilonInfeasibleError : public std::runtime_error {
public:
    EpsilonInfeasibleError(const std::string& what, double max_achievable_utility)
        : std::runtime_error(what), max_achievable_utility(max_achievable_utility) {}

    double max_achievable_utility;
};

// HTTP transport failure after the configured retries.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rr

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace screc {

// Base type for all engine errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input that could not be parsed (carries location context in the message).
class parse_error : public error {
public:
    using error::error;
};

// Input parsed but violates a schema (unknown intent, duplicate id, dangling reference).
class schema_error : public error {
public:
    using error::error;
};

// Caller broke an operation's contract (missing item, gold absent from pool).
class contract_error : public error {
public:
    using error::error;
};

class bounds_error : public error {
public:
    using error::error;
};

// Invalid configuration or parameter value.
class config_error : public error {
public:
    using error::error;
};

// Remote transport failed after the configured retries; safe to retry later.
class transport_error : public error {
public:
    using error::error;
};

// Remote endpoint answered but lacks a required capability (e.g. no log-probabilities).
class capability_error : public error {
public:
    using error::error;
};

// A metric is undefined on the given input (empty records, single-class labels).
class metric_error : public error {
public:
    using error::error;
};

// Numerical divergence during training; message names the epoch.
class divergence_error : public error {
public:
    using error::error;
};

// Lightweight warning sink. Operations that repair or fall back instead of
// failing append here when a sink is supplied.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, const std::string& msg) {
    if (sink) sink->push_back(msg);
}

}  // namespace screc

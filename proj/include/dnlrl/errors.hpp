#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dnlrl {

/// Shape or arity mismatch between operands.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-finite value reached a place that requires finite input.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad ranges, unknown names, violated invariants.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every violation found while validating an experiment configuration.
class ValidationError : public ConfigError {
public:
    explicit ValidationError(std::vector<std::string> problems)
        : ConfigError(join(problems)), problems_(std::move(problems))
    {
    }
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p)
    {
        std::string s = "invalid configuration:";
        for (const auto& e : p) {
            s += "\n  - " + e;
        }
        return s;
    }
    std::vector<std::string> problems_;
};

/// Checkpoint does not match the schema of the agent it is loaded into.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dnlrl

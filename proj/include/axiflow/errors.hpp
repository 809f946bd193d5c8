#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace axiflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An element collapsed, a non-axis node hit r = 0, or a curve broke its invariants.
class DegenerateMesh : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class NewtonFailure : public Error {
public:
    NewtonFailure(const std::string& what, int iteration, double residual_norm, double min_radius = 0.0)
        : Error(what), iteration_(iteration), residual_norm_(residual_norm), min_radius_(min_radius) {}

    int iteration() const { return iteration_; }
    double residual_norm() const { return residual_norm_; }
    /// Smallest r over off-axis nodes among all iterates of the failed step.
    double min_radius() const { return min_radius_; }

private:
    int iteration_;
    double residual_norm_;
    double min_radius_;
};

/// Collects every problem found while validating a configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (const auto& s : items) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

} // namespace axiflow

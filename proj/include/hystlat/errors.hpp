#pragma once

#include <stdexcept>
#include <string>

namespace hystlat {

/// A precondition of a library call was not met (bad dimensions, bad arguments).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration or spec validation failure. The message names the offending field.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The integrated state became non-finite.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// The adaptive controller shrank the step below the underflow limit.
class StiffnessError : public std::runtime_error {
public:
    StiffnessError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class DegenerateFitError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractViolation(msg);
}
}  // namespace detail

}  // namespace hystlat

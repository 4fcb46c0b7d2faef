#pragma once

#include <stdexcept>
#include <string>

namespace sphtrap {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// An iterative numerical procedure failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, double previous, double last)
        : std::runtime_error(what), previous_(previous), last_(last)
    {
    }
    double previous_estimate() const noexcept { return previous_; }
    double last_estimate() const noexcept { return last_; }

  private:
    double previous_;
    double last_;
};

/// A spectral expansion lost more norm than allowed; raise the truncation.
class TruncationError : public std::runtime_error {
  public:
    TruncationError(const std::string& what, double deficit)
        : std::runtime_error(what), deficit_(deficit)
    {
    }
    double norm_deficit() const noexcept { return deficit_; }

  private:
    double deficit_;
};

/// Stored or loaded data violates an invariant (e.g. a corrupted zero cache).
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace sphtrap

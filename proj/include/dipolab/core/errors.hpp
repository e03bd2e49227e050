#pragma once

#include <stdexcept>
#include <string>

namespace dipolab {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed (non-convergence, step underflow, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No guided mode exists for the requested order.
class ModeCutoffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Fock-space truncation no longer holds.
class TruncationError : public NumericalError {
 public:
  TruncationError(const std::string& what, int cutoff, double top_population)
      : NumericalError(what), cutoff_(cutoff), top_population_(top_population) {}
  int cutoff() const noexcept { return cutoff_; }
  double top_population() const noexcept { return top_population_; }

 private:
  int cutoff_;
  double top_population_;
};

/// Not enough data for a statistical estimate.
class StatisticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration does not match the schema. `key()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace dipolab

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mq {

/// Invalid argument to a sampler, constructor or closed form.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The choice distribution violates the convergence condition
/// sigma_upto(i) > i/n. Carries the first offending (1-based) index.
class DivergenceError : public std::domain_error {
 public:
  DivergenceError(std::size_t index, const std::string& what)
      : std::domain_error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// An experiment could not be completed as configured (e.g. a queue ran dry
/// during a finite replay).
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mq

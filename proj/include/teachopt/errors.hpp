#pragma once

#include <stdexcept>
#include <string>

namespace teachopt {

// Argument outside the mathematical domain of an operation
// (non-positive special-function input, hyperparameters where the
// conjugate log-normalizer diverges, negative counts, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace teachopt

#pragma once

#include <stdexcept>
#include <string>

namespace inchworm {

// Non-finite value or norm blow-up while marching a solution.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A grid value was read before it was computed.
class MissingDependencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Diagram order outside what the bath influence functional supports.
class UnsupportedOrderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace inchworm

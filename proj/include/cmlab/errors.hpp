#pragma once

#include <stdexcept>
#include <string>

namespace cmlab {

/// Density (and hence score) is undefined: t = 0 with a zero-variance component.
class DegenerateDensityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidRangeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The adaptive integrator needed a step below its floor.
class StepUnderflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem; `path()` names the offending field (e.g. "grid.delta").
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace cmlab

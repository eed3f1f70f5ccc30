#pragma once

#include <stdexcept>
#include <string>

namespace rcmhqp {

/// Invalid robot, scenario, or solver configuration. Raised at load or
/// construction time; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The scene geometry makes a task undefined for the current configuration
/// (degenerate shaft, marker behind the camera, marker outside the image).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rcmhqp

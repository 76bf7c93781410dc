#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chaosbench {

/// A simulated state left the finite doubles.
class NumericalFault : public std::runtime_error {
 public:
  NumericalFault(const std::string& what, std::uint64_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

}  // namespace chaosbench

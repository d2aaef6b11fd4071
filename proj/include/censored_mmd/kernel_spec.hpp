#pragma once

#include <cmath>
#include <stdexcept>

namespace censored_mmd {

/// Length-scale of the Gaussian kernel on the transformed [0, 1] scale.
class KernelSpec {
 public:
  explicit KernelSpec(double lengthscale) : lengthscale_(lengthscale) {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
      throw std::invalid_argument("kernel lengthscale must be positive and finite");
    }
  }

  double lengthscale() const noexcept { return lengthscale_; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

 private:
  double lengthscale_;
};

}  // namespace censored_mmd

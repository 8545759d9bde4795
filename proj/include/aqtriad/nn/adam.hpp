#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace aqtriad::nn {

/// Adaptive-moment optimizer with bias-corrected first and second moments.
class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace aqtriad::nn

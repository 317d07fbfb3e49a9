#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace umhi {

// Adaptive-moment optimizer over a flat parameter block. The defaults are the
// published β₁ = 0.1, β₂ = 0.001 used for model pretraining here; standard
// (0.9, 0.999) is available as a switch.
struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.1;
  double beta2 = 0.001;
  double eps = 1e-8;

  static AdamConfig paper(double lr = 0.001) { return {lr, 0.1, 0.001, 1e-8}; }
  static AdamConfig standard(double lr = 0.001) { return {lr, 0.9, 0.999, 1e-8}; }
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, const AdamConfig& cfg)
      : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  // Gradient-descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(double* params, const double* grads, std::size_t n) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < n; ++k) {
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grads[k];
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grads[k] * grads[k];
      const double m_hat = m_[k] / c1;
      const double v_hat = v_[k] / c2;
      params[k] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace umhi

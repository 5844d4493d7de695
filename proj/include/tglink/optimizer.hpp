#pragma once

#include <cmath>
#include <vector>

#include "tglink/nn.hpp"

namespace tglink {

// Adam with dense updates. Moment buffers are sized lazily from the first
// step() call and keyed by parameter order, which is stable per pipeline.
template <typename T>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamRef<T>>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(static_cast<size_t>(p.size), T(0));
        v_.emplace_back(static_cast<size_t>(p.size), T(0));
      }
    }
    ++t_;
    const T bc1 = static_cast<T>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const T bc2 = static_cast<T>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const T b1 = static_cast<T>(beta1_);
    const T b2 = static_cast<T>(beta2_);
    const T lr = static_cast<T>(lr_);
    const T eps = static_cast<T>(eps_);
    for (size_t i = 0; i < params.size(); ++i) {
      T* w = params[i].value;
      const T* g = params[i].grad;
      T* m = m_[i].data();
      T* v = v_[i].data();
      const Eigen::Index n = params[i].size;
      for (Eigen::Index j = 0; j < n; ++j) {
        m[j] = b1 * m[j] + (T(1) - b1) * g[j];
        v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
        w[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
      }
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace tglink

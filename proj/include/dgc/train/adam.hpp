#pragma once

#include "dgc/autodiff/tape.hpp"

#include <cmath>
#include <vector>

namespace dgc::train {

/// Adam without weight decay over a fixed list of parameters.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<ad::Parameter<T>*> params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->grad.setZero();
  }

  void step(double lr) {
    ++t_;
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T c1 = static_cast<T>(1.0 - std::pow(beta1_, t_));
    const T c2 = static_cast<T>(1.0 - std::pow(beta2_, t_));
    const T step = static_cast<T>(lr), eps = static_cast<T>(eps_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      m_[i] = b1 * m_[i] + (T(1) - b1) * p.grad;
      v_[i] = b2 * v_[i] + (T(1) - b2) * p.grad.cwiseAbs2();
      p.value.array() -= step * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }

 private:
  std::vector<ad::Parameter<T>*> params_;
  std::vector<Mat<T>> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace dgc::train

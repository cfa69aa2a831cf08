// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ANALOGIC_OPTIM_HPP
#define ANALOGIC_OPTIM_HPP

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "analogic/autograd.hpp"

namespace analogic {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

//! Adaptive-moment optimiser with bias correction and a constant step size.
//! Moments are keyed by parameter name so they survive checkpointing.
template <typename Scalar>
class Adam {
 public:
  struct Moments {
    Tensor<Scalar> first;
    Tensor<Scalar> second;
  };

  Adam() = default;
  explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}

  //! One update over params; a parameter without an accumulated gradient is
  //! treated as having a zero gradient.
  void step(const std::vector<std::pair<std::string, ad::Var<Scalar>>>& params) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
    const Scalar b2 = static_cast<Scalar>(cfg_.beta2);
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar eps = static_cast<Scalar>(cfg_.eps);
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(cfg_.beta1, double(t_)));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(cfg_.beta2, double(t_)));
    for (const auto& [name, p] : params) {
      auto& mom = moments_[name];
      if (mom.first.empty()) {
        mom.first = Tensor<Scalar>(p->value.shape());
        mom.second = Tensor<Scalar>(p->value.shape());
      }
      if (!p->has_grad()) p->zero_grad();
      const auto& g = p->grad.array();
      mom.first.array() = b1 * mom.first.array() + (Scalar(1) - b1) * g;
      mom.second.array() = b2 * mom.second.array() + (Scalar(1) - b2) * g.square();
      p->value.array() -=
          lr * (mom.first.array() / c1) / ((mom.second.array() / c2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }
  void set_steps(long t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }
  std::map<std::string, Moments>& moments() { return moments_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }

 private:
  AdamConfig cfg_{};
  long t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace analogic

#endif  // ANALOGIC_OPTIM_HPP

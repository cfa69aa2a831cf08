// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Finite-difference verification of the training objectives on a
//! miniature double-precision model.

#ifndef ANALOGIC_GRADCHECK_HPP
#define ANALOGIC_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "analogic/objectives.hpp"

namespace analogic {

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckFloor = 1e-8;

//! Loss names accepted by gradcheck.
const std::vector<std::string>& gradcheck_losses();

//! Weights that isolate one named loss ("full" gives the defaults).
LossWeights gradcheck_weights(const std::string& loss_name);

struct GradcheckResult {
  std::string loss;
  double max_rel_error = 0.0;
  Index parameters = 0;       // miniature model size
  Index checked = 0;          // (scalar, parameter) pairs compared
  std::string worst;          // "<scalar>:<param>[index]" of the max error
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed() const { return max_rel_error < kGradcheckTolerance; }
};

//! Compares analytic gradients of both the generator and the discriminator
//! criterion against central differences over every parameter of the
//! miniature. Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradcheckResult gradcheck(const std::string& loss_name, std::uint64_t seed,
                          const LossWeights& weights);

inline GradcheckResult gradcheck(const std::string& loss_name, std::uint64_t seed = 1) {
  return gradcheck(loss_name, seed, gradcheck_weights(loss_name));
}

}  // namespace analogic

#endif  // ANALOGIC_GRADCHECK_HPP

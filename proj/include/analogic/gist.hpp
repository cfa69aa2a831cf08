// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Gist decomposition of a style translation.
//!
//! A translation x -> x' is factored as x' = x (*) M + N, where (*) is the
//! elementwise product, M is the alignment map and N the residual map. The
//! pair (M, N) is the "gist" that is learned in a source domain and reused in
//! a target domain. Everything here is plain arithmetic on tensors: no
//! clamping (that only happens when images are exported) and no learned
//! state.

#ifndef ANALOGIC_GIST_HPP
#define ANALOGIC_GIST_HPP

#include <string>

#include "analogic/tensor.hpp"

namespace analogic {

template <typename Scalar>
struct Gist {
  Tensor<Scalar> alignment;  // M, strictly positive
  Tensor<Scalar> residual;   // N

  const Shape& shape() const { return alignment.shape(); }
};

using Image = Tensor<double>;
using DepthMap = Tensor<double>;

//! Degree of translation between the untranslated (0) and the fully
//! translated (1) style.
class Domainness {
 public:
  explicit Domainness(double z) : z_(z) {
    if (!(z >= 0.0 && z <= 1.0))
      throw ConfigError("domainness z must lie in [0, 1], got " + std::to_string(z));
  }
  double value() const { return z_; }

 private:
  double z_;
};

// Presets used for the Cityscapes-like and Synscapes-like targets.
inline constexpr double kDomainnessCityscapes = 0.88;
inline constexpr double kDomainnessSynscapes = 0.9;

template <typename Scalar>
void require_gist_matches(const Tensor<Scalar>& x, const Gist<Scalar>& g, const char* what) {
  require_same_shape(x.shape(), g.alignment.shape(), what);
  require_same_shape(x.shape(), g.residual.shape(), what);
}

//! x (*) M + N.
template <typename Scalar>
Tensor<Scalar> apply_gist(const Tensor<Scalar>& x, const Gist<Scalar>& g) {
  require_gist_matches(x, g, "apply_gist");
  return Tensor<Scalar>(x.shape(),
                        (x.array() * g.alignment.array() + g.residual.array()).matrix());
}

//! x (*) ((M - 1) z + 1) + N z. Exact at both endpoints: z = 0 returns x
//! and z = 1 returns apply_gist(x, g), bit for bit.
template <typename Scalar>
Tensor<Scalar> interpolate_domain(const Tensor<Scalar>& x, const Gist<Scalar>& g, Domainness z) {
  require_gist_matches(x, g, "interpolate_domain");
  if (z.value() == 0.0) return x;
  if (z.value() == 1.0) return apply_gist(x, g);
  const Scalar zs = static_cast<Scalar>(z.value());
  return Tensor<Scalar>(
      x.shape(),
      (x.array() * ((g.alignment.array() - Scalar(1)) * zs + Scalar(1)) + g.residual.array() * zs)
          .matrix());
}

//! The reverse translation (1/M, -N/M).
template <typename Scalar>
Gist<Scalar> invert_gist(const Gist<Scalar>& g) {
  require_same_shape(g.alignment.shape(), g.residual.shape(), "invert_gist");
  if (g.alignment.size() > 0 && !(g.alignment.data().minCoeff() > Scalar(0)))
    throw ConfigError("invert_gist: alignment map must be strictly positive");
  Gist<Scalar> inv;
  inv.alignment = Tensor<Scalar>(g.shape(), g.alignment.array().inverse().matrix());
  inv.residual =
      Tensor<Scalar>(g.shape(), (-g.residual.array() / g.alignment.array()).matrix());
  return inv;
}

template <typename Scalar>
Gist<Scalar> identity_gist(const Shape& s) {
  return {Tensor<Scalar>::constant(s, Scalar(1)), Tensor<Scalar>::constant(s, Scalar(0))};
}

}  // namespace analogic

#endif  // ANALOGIC_GIST_HPP

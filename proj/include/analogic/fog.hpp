// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Procedural 2.5-D scenes with exact depth, homogeneous-fog rendering
//! (I = J t + A (1 - t), t = exp(-beta d)) and the closed-form gist that
//! reproduces it.

#ifndef ANALOGIC_FOG_HPP
#define ANALOGIC_FOG_HPP

#include <array>
#include <cstdint>
#include <string>

#include "analogic/gist.hpp"

namespace analogic {

struct FogParams {
  double beta = 0.1;  // attenuation, 1/m
  std::array<double, 3> airlight{0.85, 0.85, 0.85};

  void validate() const;
};

enum class SceneStyle { source, target };

std::string to_string(SceneStyle s);
SceneStyle style_from_string(const std::string& s);

struct SceneSpec {
  std::uint64_t seed = 0;
  int width = 64;
  int height = 32;
  int object_count = 4;
  SceneStyle style = SceneStyle::source;
  double far_plane = 10.0;
};

struct Scene {
  Image image;     // 1x3xHxW
  DepthMap depth;  // 1x1xHxW, metres
};

inline constexpr double kNearPlane = 0.1;
inline constexpr double kTextureAmplitude = 0.08;
inline constexpr double kGrainAmplitude = 0.12;

//! Sky gradient at the far plane, a ground plane receding to a horizon and
//! flat-shaded boxes/ellipses standing on it. The target style rotates the
//! palette about the grey axis and adds smooth value noise. Pure function of
//! the SceneSpec.
Scene generate_scene(const SceneSpec& spec);

//! clear * exp(-beta d) + airlight * (1 - exp(-beta d)).
Image render_fog(const Image& clear, const DepthMap& depth, const FogParams& p);

//! M = exp(-beta d) on every channel, N = airlight (1 - exp(-beta d)).
Gist<double> oracle_gist(const DepthMap& depth, const FogParams& p);

//! Transmittance exp(-beta d) as a one-channel map.
DepthMap transmittance(const DepthMap& depth, double beta);

}  // namespace analogic

#endif  // ANALOGIC_FOG_HPP

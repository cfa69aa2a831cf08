// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include "analogic/fog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace analogic {

void FogParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("fog beta must be positive");
  for (double a : airlight)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("airlight components must lie in [0, 1]");
}

std::string to_string(SceneStyle s) { return s == SceneStyle::source ? "source" : "target"; }

SceneStyle style_from_string(const std::string& s) {
  if (s == "source") return SceneStyle::source;
  if (s == "target") return SceneStyle::target;
  throw ConfigError("unknown scene style '" + s + "'");
}

namespace {

using Rgb = std::array<double, 3>;

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

// Rotation about the grey axis (1,1,1)/sqrt(3) by angle radians.
Rgb rotate_hue(const Rgb& c, double angle) {
  const double cs = std::cos(angle), sn = std::sin(angle);
  const double k = 1.0 / std::sqrt(3.0);
  const double dot = (c[0] + c[1] + c[2]) * k;
  // v cos + (k x v) sin + k (k.v)(1 - cos)
  const Rgb cross{k * (c[2] - c[1]), k * (c[0] - c[2]), k * (c[1] - c[0])};
  Rgb out{};
  for (int i = 0; i < 3; ++i) out[i] = c[i] * cs + cross[i] * sn + k * dot * (1.0 - cs);
  return out;
}

// Smooth lattice noise in [-1, 1], two octaves.
class ValueNoise {
 public:
  ValueNoise(std::mt19937_64& rng, int width, int height, int cell) : cell_(cell) {
    gw_ = width / cell + 2;
    gh_ = height / cell + 2;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    coarse_.resize(static_cast<std::size_t>(gw_ * gh_));
    for (double& v : coarse_) v = u(rng);
    fine_.resize(static_cast<std::size_t>((2 * gw_) * (2 * gh_)));
    for (double& v : fine_) v = u(rng);
  }

  double operator()(double x, double y) const {
    const double a = sample(coarse_, gw_, x / cell_, y / cell_);
    const double b = sample(fine_, 2 * gw_, 2.0 * x / cell_, 2.0 * y / cell_);
    return std::clamp((2.0 * a + b) / 3.0 * 1.6, -1.0, 1.0);
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

  static double sample(const std::vector<double>& g, int gw, double x, double y) {
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const double tx = smooth(x - x0), ty = smooth(y - y0);
    auto at = [&](int i, int j) { return g[static_cast<std::size_t>(j * gw + i)]; };
    const double top = at(x0, y0) + (at(x0 + 1, y0) - at(x0, y0)) * tx;
    const double bot = at(x0, y0 + 1) + (at(x0 + 1, y0 + 1) - at(x0, y0 + 1)) * tx;
    return top + (bot - top) * ty;
  }

  int cell_;
  int gw_ = 0, gh_ = 0;
  std::vector<double> coarse_, fine_;
};

const Rgb kSkyTop{0.32, 0.52, 0.86};
const Rgb kSkyHorizon{0.72, 0.80, 0.90};
const Rgb kGroundNear{0.30, 0.34, 0.26};
const Rgb kGroundFar{0.48, 0.50, 0.42};
const std::array<Rgb, 6> kObjectPalette{{{0.62, 0.22, 0.18},
                                         {0.55, 0.42, 0.30},
                                         {0.30, 0.30, 0.34},
                                         {0.78, 0.70, 0.52},
                                         {0.20, 0.36, 0.52},
                                         {0.14, 0.40, 0.20}}};

constexpr double kTargetHueShift = 2.0 * std::numbers::pi / 3.0;
constexpr double kCameraHeight = 1.5;

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ConfigError("scene must have positive area");
  if (spec.object_count < 0) throw ConfigError("object count must be non-negative");
  if (!(spec.far_plane > kNearPlane)) throw ConfigError("far plane must exceed the near plane");

  const int W = spec.width, H = spec.height;
  const double far = spec.far_plane;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  const double horizon = H * uniform(0.32, 0.48);
  const double bottom_depth = uniform(1.0, 1.6);
  // ground row y (pixel centre) sits at depth focal * cam_height / (y - horizon)
  const double focal = bottom_depth * (H - 0.5 - horizon) / kCameraHeight;
  const double ground_tint = uniform(-0.05, 0.05);

  Scene s{Image(1, 3, H, W), DepthMap(1, 1, H, W)};
  std::vector<Rgb> color(static_cast<std::size_t>(W * H));
  auto px = [&](int x, int y) -> Rgb& { return color[static_cast<std::size_t>(y * W + x)]; };

  for (int y = 0; y < H; ++y) {
    const double yc = y + 0.5;
    double d = far;
    if (yc > horizon) d = std::clamp(focal * kCameraHeight / (yc - horizon), kNearPlane, far);
    for (int x = 0; x < W; ++x) {
      s.depth(0, 0, y, x) = d;
      if (d >= far) {
        const double t = std::clamp(yc / std::max(horizon, 1.0), 0.0, 1.0);
        px(x, y) = mix(kSkyTop, kSkyHorizon, t);
      } else {
        const double t = std::clamp((d - bottom_depth) / (far - bottom_depth), 0.0, 1.0);
        Rgb g = mix(kGroundNear, kGroundFar, t);
        const double stripe = ((static_cast<int>(std::floor(d * 2.0)) % 2) == 0) ? 0.03 : -0.03;
        for (double& c : g) c += stripe + ground_tint;
        px(x, y) = g;
      }
    }
  }

  struct Object {
    double depth, cx, half_w, top, bottom;
    bool ellipse;
    Rgb rgb;
  };
  std::vector<Object> objects;
  for (int i = 0; i < spec.object_count; ++i) {
    Object o{};
    o.depth = uniform(2.0, 0.75 * far);
    const double base = horizon + focal * kCameraHeight / o.depth;
    const double hw = uniform(0.8, 3.5), ww = uniform(0.8, 3.0);
    o.bottom = base;
    o.top = base - focal * hw / o.depth;
    o.half_w = 0.5 * focal * ww / o.depth;
    o.cx = uniform(0.0, W);
    o.ellipse = u01(rng) < 0.35;
    o.rgb = kObjectPalette[static_cast<std::size_t>(rng() % kObjectPalette.size())];
    const double shade = uniform(-0.06, 0.06);
    for (double& c : o.rgb) c += shade;
    objects.push_back(o);
  }
  std::stable_sort(objects.begin(), objects.end(),
                   [](const Object& a, const Object& b) { return a.depth > b.depth; });
  for (const auto& o : objects) {
    const double cy = 0.5 * (o.top + o.bottom), half_h = 0.5 * (o.bottom - o.top);
    for (int y = std::max(0, static_cast<int>(std::floor(o.top)));
         y < std::min(H, static_cast<int>(std::ceil(o.bottom))); ++y) {
      for (int x = std::max(0, static_cast<int>(std::floor(o.cx - o.half_w)));
           x < std::min(W, static_cast<int>(std::ceil(o.cx + o.half_w))); ++x) {
        const double xc = x + 0.5, yc = y + 0.5;
        if (yc < o.top || yc > o.bottom || std::abs(xc - o.cx) > o.half_w) continue;
        if (o.ellipse) {
          const double dx = (xc - o.cx) / o.half_w, dy = (yc - cy) / half_h;
          if (dx * dx + dy * dy > 1.0) continue;
        }
        px(x, y) = o.rgb;
        s.depth(0, 0, y, x) = o.depth;
      }
    }
  }

  // Per-pixel surface grain, both styles. Flat shading alone would leave the
  // split of a fog transform into alignment and residual undetermined inside
  // each uniform region.
  {
    std::uniform_real_distribution<double> grain(-kGrainAmplitude, kGrainAmplitude);
    for (Rgb& c : color) {
      const double g = grain(rng);
      for (double& v : c) v += g;
    }
  }

  if (spec.style == SceneStyle::target) {
    ValueNoise noise(rng, W, H, 4);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        Rgb c = rotate_hue(px(x, y), kTargetHueShift);
        const double n = kTextureAmplitude * noise(x + 0.5, y + 0.5);
        for (double& v : c) v += n;
        px(x, y) = c;
      }
  }

  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) s.image(0, c, y, x) = std::clamp(px(x, y)[c], 0.0, 1.0);
  return s;
}

namespace {

void check_fog_inputs(const Image& clear, const DepthMap& depth, const FogParams& p) {
  p.validate();
  if (depth.channels() != 1) throw ShapeError("depth map must have one channel");
  if (clear.batch() != depth.batch() || clear.height() != depth.height() ||
      clear.width() != depth.width())
    throw ShapeError("render_fog: image " + clear.shape().str() + " vs depth " +
                     depth.shape().str());
  if (depth.size() > 0 && !(depth.data().minCoeff() > 0.0))
    throw ConfigError("depth must be strictly positive");
}

}  // namespace

DepthMap transmittance(const DepthMap& depth, double beta) {
  return DepthMap(depth.shape(), (-beta * depth.array()).exp().matrix());
}

Gist<double> oracle_gist(const DepthMap& depth, const FogParams& p) {
  p.validate();
  if (depth.channels() != 1) throw ShapeError("depth map must have one channel");
  if (depth.size() > 0 && !(depth.data().minCoeff() > 0.0))
    throw ConfigError("depth must be strictly positive");
  const auto t = transmittance(depth, p.beta);
  Shape s = depth.shape();
  s.channels = 3;
  Gist<double> g{Image(s), Image(s)};
  for (Index c = 0; c < 3; ++c) {
    g.alignment.data().col(c) = t.data().col(0);
    g.residual.data().col(c) = (p.airlight[static_cast<std::size_t>(c)] * (1.0 - t.array())).matrix();
  }
  return g;
}

Image render_fog(const Image& clear, const DepthMap& depth, const FogParams& p) {
  check_fog_inputs(clear, depth, p);
  if (clear.channels() != 3) throw ShapeError("render_fog expects an RGB image");
  const auto t = transmittance(depth, p.beta);
  Image out(clear.shape());
  for (Index c = 0; c < 3; ++c) {
    const double a = p.airlight[static_cast<std::size_t>(c)];
    out.data().col(c) =
        (clear.data().col(c).array() * t.data().col(0).array() + a * (1.0 - t.data().col(0).array()))
            .matrix();
  }
  return out;
}

}  // namespace analogic

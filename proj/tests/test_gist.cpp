// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "analogic/fog.hpp"
#include "analogic/gist.hpp"
#include "support.hpp"

namespace analogic {
namespace {

using test::random_tensor;

const Shape kImage{1, 3, 4, 5};

Gist<double> random_gist(std::uint64_t seed, double m_lo = 0.1, double m_hi = 2.0) {
  return {random_tensor(kImage, seed, m_lo, m_hi), random_tensor(kImage, seed + 1, -0.5, 0.5)};
}

TEST(ApplyGist, IdentityGistLeavesImage) {
  const auto x = Tensor<double>::constant(kImage, 0.5);
  const auto y = apply_gist(x, identity_gist<double>(kImage));
  EXPECT_TRUE((y.array() == 0.5).all());
}

TEST(ApplyGist, SinglePixelArithmetic) {
  const Shape px{1, 1, 1, 1};
  const Gist<double> g{Tensor<double>::constant(px, 0.5), Tensor<double>::constant(px, 0.5)};
  EXPECT_DOUBLE_EQ(apply_gist(Tensor<double>::constant(px, 0.8), g)(0, 0, 0, 0), 0.9);
}

TEST(ApplyGist, ShapeMismatchIsRejected) {
  const auto x = random_tensor(kImage, 1);
  Gist<double> g = identity_gist<double>(Shape{1, 3, 4, 4});
  EXPECT_THROW(apply_gist(x, g), ShapeError);
  g = identity_gist<double>(kImage);
  g.residual = Tensor<double>(Shape{1, 1, 4, 5});
  EXPECT_THROW(apply_gist(x, g), ShapeError);
}

TEST(ApplyGist, MatchesFogRendererUnderOracleGist) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Image x = random_tensor(kImage, 100 + s);
    const DepthMap d = random_tensor(Shape{1, 1, 4, 5}, 300 + s, 0.1, 10.0);
    FogParams p;
    p.beta = 0.01 + 0.2 * random_tensor(Shape{1, 1, 1, 1}, 500 + s)(0, 0, 0, 0);
    p.airlight = {0.7, 0.8, 0.9};
    const Image a = apply_gist(x, oracle_gist(d, p));
    const Image b = render_fog(x, d, p);
    EXPECT_LT((a.array() - b.array()).abs().maxCoeff(), 1e-12);
  }
}

TEST(ApplyGist, LinearInImage) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto g = random_gist(10 * s);
    const auto x1 = random_tensor(kImage, 10 * s + 2);
    const auto x2 = random_tensor(kImage, 10 * s + 3);
    const double alpha = 0.37;
    Tensor<double> mix(kImage);
    mix.array() = alpha * x1.array() + (1 - alpha) * x2.array();
    const auto lhs = apply_gist(mix, g);
    Tensor<double> rhs(kImage);
    rhs.array() = alpha * apply_gist(x1, g).array() + (1 - alpha) * apply_gist(x2, g).array();
    EXPECT_LT((lhs.array() - rhs.array()).abs().maxCoeff(), 1e-9);
  }
}

TEST(InterpolateDomain, EndpointsAreExact) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto g = random_gist(7 * s);
    const auto x = random_tensor(kImage, 7 * s + 5);
    EXPECT_TRUE(test::bitwise_equal(interpolate_domain(x, g, Domainness(0.0)), x));
    EXPECT_TRUE(test::bitwise_equal(interpolate_domain(x, g, Domainness(1.0)), apply_gist(x, g)));
  }
}

TEST(InterpolateDomain, SinglePixelArithmetic) {
  const Shape px{1, 1, 1, 1};
  const Gist<double> g{Tensor<double>::constant(px, 0.6), Tensor<double>::constant(px, 0.2)};
  const auto y = interpolate_domain(Tensor<double>::constant(px, 1.0), g, Domainness(0.5));
  EXPECT_NEAR(y(0, 0, 0, 0), 0.9, 1e-15);
}

TEST(InterpolateDomain, IsConvexCombinationOfEndpoints) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto g = random_gist(11 * s);
    const auto x = random_tensor(kImage, 11 * s + 4);
    const double z = random_tensor(Shape{1, 1, 1, 1}, 11 * s + 9)(0, 0, 0, 0);
    const auto y = interpolate_domain(x, g, Domainness(z));
    const auto full = apply_gist(x, g);
    const Eigen::ArrayXXd expect = (1 - z) * x.array() + z * full.array();
    EXPECT_LT((y.array() - expect).abs().maxCoeff(), 1e-10);
  }
}

TEST(InterpolateDomain, RejectsOutOfRangeDomainness) {
  EXPECT_THROW(Domainness(-0.01), ConfigError);
  EXPECT_THROW(Domainness(1.01), ConfigError);
  EXPECT_THROW(Domainness(std::nan("")), ConfigError);
  EXPECT_NO_THROW(Domainness(0.0));
  EXPECT_NO_THROW(Domainness(1.0));
}

TEST(InterpolateDomain, PresetsShipAsNamedValues) {
  EXPECT_EQ(kDomainnessCityscapes, 0.88);
  EXPECT_EQ(kDomainnessSynscapes, 0.9);
}

TEST(InvertGist, IdentityIsSelfInverse) {
  const auto inv = invert_gist(identity_gist<double>(kImage));
  EXPECT_TRUE((inv.alignment.array() == 1.0).all());
  EXPECT_TRUE((inv.residual.array() == 0.0).all());
}

TEST(InvertGist, HalfAndHalf) {
  const Shape px{1, 1, 1, 1};
  const auto inv = invert_gist(Gist<double>{Tensor<double>::constant(px, 0.5),
                                            Tensor<double>::constant(px, 0.5)});
  EXPECT_DOUBLE_EQ(inv.alignment(0, 0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(inv.residual(0, 0, 0, 0), -1.0);
}

TEST(InvertGist, RoundTripOverRandomGists) {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto g = random_gist(13 * s);
    const auto x = random_tensor(kImage, 13 * s + 6);
    const auto back = apply_gist(apply_gist(x, g), invert_gist(g));
    worst = std::max(worst, (back.array() - x.array()).abs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(InvertGist, RejectsNonPositiveAlignment) {
  auto g = identity_gist<double>(kImage);
  g.alignment(0, 1, 2, 3) = 0.0;
  EXPECT_THROW(invert_gist(g), ConfigError);
  g.alignment(0, 1, 2, 3) = -0.5;
  EXPECT_THROW(invert_gist(g), ConfigError);
}

}  // namespace
}  // namespace analogic

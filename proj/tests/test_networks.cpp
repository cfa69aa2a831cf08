// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "analogic/checkpoint.hpp"
#include "analogic/networks.hpp"
#include "support.hpp"

namespace analogic {
namespace {

using test::random_tensor;

Index conv_params(Index in, Index out, Index k, bool bias) { return in * k * k * out + (bias ? out : 0); }

// Count derived from the layer list, independent of the visitor.
Index expected_generator_params(const ArchConfig& a) {
  Index n = 0, ch = a.base_width;
  n += conv_params(3, ch, a.stem_kernel, false);
  for (int i = 0; i < a.n_down; ++i, ch *= 2) n += conv_params(ch, ch * 2, 3, false);
  n += a.n_res * 2 * conv_params(ch, ch, 3, false);
  for (int i = 0; i < a.n_down; ++i, ch /= 2) n += conv_params(ch, ch / 2, 3, false);
  return n + 2 * conv_params(ch, 3, a.head_kernel, true) + conv_params(ch, 1, a.head_kernel, true);
}

Index expected_disc_params(Index in, const ArchConfig& a) {
  Index n = conv_params(in, a.disc_width, a.disc_kernel, true), ch = a.disc_width;
  for (int i = 1; i < a.disc_layers; ++i, ch *= 2) n += conv_params(ch, ch * 2, a.disc_kernel, false);
  return n + conv_params(ch, 1, 3, true);
}

Index count(Generator<double>& g) {
  Index n = 0;
  g.visit("g", [&](const std::string&, ad::Var<double>& v) { n += v->value.size(); });
  return n;
}

TEST(Networks, DefaultParameterCounts) {
  auto m = build_model<double>(ArchConfig{});
  EXPECT_EQ(expected_generator_params(m.arch), 196903);
  EXPECT_EQ(count(m.gen_forward), 196903);
  EXPECT_EQ(count(m.gen_backward), 196903);
  EXPECT_EQ(count_parameters(m.generator_parameters()), 2 * 196903);
  EXPECT_EQ(count_parameters(m.discriminator_parameters()),
            2 * expected_disc_params(6, m.arch) + expected_disc_params(3, m.arch));
  EXPECT_EQ(count_parameters(m.discriminator_parameters()), 29331);
}

TEST(Networks, MiniatureStaysUnderFiveHundred) {
  auto m = build_model<double>(ArchConfig::miniature());
  EXPECT_LE(count_parameters(m.parameters()), 500);
  EXPECT_EQ(count_parameters(m.generator_parameters()),
            2 * expected_generator_params(ArchConfig::miniature()));
}

TEST(Networks, ParameterNamesAreUnique) {
  auto m = build_model<double>(ArchConfig{});
  std::set<std::string> names;
  for (const auto& [n, v] : m.parameters()) EXPECT_TRUE(names.insert(n).second) << n;
}

TEST(Networks, OutputShapes) {
  auto m = build_model<double>(ArchConfig{});
  const auto x = ad::constant(random_tensor(Shape{2, 3, 32, 64}, 1));
  const auto out = m.gen_forward(x);
  EXPECT_EQ(out.alignment->value.shape(), (Shape{2, 3, 32, 64}));
  EXPECT_EQ(out.residual->value.shape(), (Shape{2, 3, 32, 64}));
  EXPECT_EQ(out.depth->value.shape(), (Shape{2, 1, 32, 64}));
  const auto sg = m.disc_gist_fwd(out.alignment, out.residual);
  EXPECT_EQ(sg->value.shape(), (Shape{2, 1, 8, 16}));
  EXPECT_EQ(m.disc_target(x)->value.shape(), (Shape{2, 1, 8, 16}));
}

TEST(Networks, AlignmentPositiveAndResidualBounded) {
  ArchConfig a;
  a.init_std = 1.0;  // large weights push the heads toward saturation
  auto m = build_model<double>(a);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto g = m.gen_forward.forward_gist(random_tensor(Shape{1, 3, 32, 64}, s, -5, 5));
    EXPECT_GT(g.alignment.data().minCoeff(), 0.0);
    EXPECT_LE(g.residual.data().cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Networks, ZeroHeadGivesIdentityGist) {
  auto m = build_model<double>(ArchConfig{});
  m.gen_forward.visit_heads("g", [](const std::string& n, ad::Var<double>& v) {
    if (n.find("head_depth") == std::string::npos) v->value.data().setZero();
  });
  const auto g = m.gen_forward.forward_gist(random_tensor(Shape{1, 3, 32, 64}, 3));
  EXPECT_LT((g.alignment.array() - 1.0).abs().maxCoeff(), 1e-15);
  EXPECT_EQ(g.residual.data().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Networks, TranslatorRolesAliasTwoGenerators) {
  auto m = build_model<double>(ArchConfig{});
  EXPECT_EQ(&m.translator_aa(), &m.translator_bb());
  EXPECT_EQ(&m.translator_a_a(), &m.translator_b_b());
  EXPECT_NE(&m.translator_aa(), &m.translator_a_a());
}

TEST(Networks, DepthHeadPerturbationLeavesGistUnchanged) {
  auto m = build_model<double>(ArchConfig{});
  const auto x = random_tensor(Shape{1, 3, 32, 64}, 4);
  const auto before = m.gen_forward(ad::constant(x));
  m.gen_forward.visit_heads("g", [](const std::string& n, ad::Var<double>& v) {
    if (n.find("head_depth") != std::string::npos) v->value.array() += 0.5;
  });
  const auto after = m.gen_forward(ad::constant(x));
  EXPECT_TRUE(test::bitwise_equal(before.alignment->value, after.alignment->value));
  EXPECT_TRUE(test::bitwise_equal(before.residual->value, after.residual->value));
  EXPECT_FALSE(test::bitwise_equal(before.depth->value, after.depth->value));
}

TEST(Networks, DepthGradientReachesOnlyTrunkAndDepthHead) {
  auto m = build_model<double>(ArchConfig::miniature());
  const auto out = m.gen_forward(ad::constant(random_tensor(Shape{1, 3, 8, 8}, 5)));
  ad::backward(ad::mean_abs(out.depth));
  m.gen_forward.visit_heads("g", [](const std::string& n, ad::Var<double>& v) {
    if (n.find("head_depth") == std::string::npos)
      EXPECT_FALSE(v->has_grad()) << n;
    else
      EXPECT_TRUE(v->has_grad()) << n;
  });
  Index with_grad = 0;
  m.gen_forward.visit_trunk("g", [&](const std::string&, ad::Var<double>& v) { with_grad += v->has_grad(); });
  EXPECT_GT(with_grad, 0);
}

TEST(Networks, SeedDeterminesInitialisation) {
  ArchConfig a;
  auto m1 = build_model<double>(a), m2 = build_model<double>(a);
  a.seed = 8;
  auto m3 = build_model<double>(a);
  const auto p1 = m1.parameters(), p2 = m2.parameters(), p3 = m3.parameters();
  bool any_diff = false;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    EXPECT_TRUE(test::bitwise_equal(p1[i].second->value, p2[i].second->value));
    any_diff = any_diff || !test::bitwise_equal(p1[i].second->value, p3[i].second->value);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Networks, ArchValidation) {
  ArchConfig a;
  a.width = 63;
  EXPECT_THROW(a.validate(), ConfigError);
  EXPECT_THROW(build_model<double>(a), ConfigError);
  a = ArchConfig{};
  a.height = 30;
  EXPECT_THROW(a.validate(), ConfigError);
  a = ArchConfig{};
  a.stem_kernel = 6;
  EXPECT_THROW(a.validate(), ConfigError);
  a = ArchConfig{};
  a.base_width = 0;
  EXPECT_THROW(a.validate(), ConfigError);
  EXPECT_NO_THROW(ArchConfig{}.validate());
}

TEST(Networks, GeneratorRejectsWrongInput) {
  auto m = build_model<double>(ArchConfig{});
  EXPECT_THROW(m.gen_forward(ad::constant(Tensor<double>(Shape{1, 3, 32, 32}))), ShapeError);
  EXPECT_THROW(m.gen_forward(ad::constant(Tensor<double>(Shape{1, 1, 32, 64}))), ShapeError);
  EXPECT_THROW(m.disc_target(ad::constant(Tensor<double>(Shape{1, 6, 32, 64}))), ShapeError);
}

TEST(FeatureExtractor, FrozenAndDeterministic) {
  FeatureExtractor<double> a, b;
  const auto x = ad::parameter(random_tensor(Shape{1, 3, 32, 64}, 6));
  const auto fa = a(x);
  EXPECT_EQ(fa->value.shape(), (Shape{1, 32, 8, 16}));
  EXPECT_TRUE(test::bitwise_equal(fa->value, b(x)->value));
  FeatureExtractor<double> id(FeatureKind::identity);
  EXPECT_EQ(id(x), x);
  FeatureExtractor<double> other(FeatureKind::random_conv, 99);
  EXPECT_FALSE(test::bitwise_equal(fa->value, other(x)->value));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // bias-corrected first step: lr * g / (|g| + eps)
  AdamConfig cfg;
  Adam<double> opt(cfg);
  auto p = ad::parameter(Tensor<double>::constant(Shape{1, 1, 1, 3}, 1.0));
  p->grad = Tensor<double>(p->value.shape());
  p->grad.data() << 0.5, -2.0, 0.0;
  opt.step({{"p", p}});
  EXPECT_NEAR(p->value.data()(0, 0), 1.0 - 2e-4 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p->value.data()(1, 0), 1.0 + 2e-4 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_EQ(p->value.data()(2, 0), 1.0);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, SecondStepMatchesHandComputation) {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  Adam<double> opt(cfg);
  auto p = ad::parameter(Tensor<double>::constant(Shape{1, 1, 1, 1}, 0.0));
  double m = 0, v = 0, x = 0;
  for (int t = 1; t <= 2; ++t) {
    const double g = t == 1 ? 1.0 : -3.0;
    p->grad = Tensor<double>::constant(p->value.shape(), g);
    opt.step({{"p", p}});
    m = 0.5 * m + 0.5 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.1 * (m / (1 - std::pow(0.5, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_NEAR(p->value.data()(0, 0), x, 1e-14);
}

template <typename Scalar>
void expect_same_state(ModelState<Scalar>& a, ModelState<Scalar>& b) {
  const auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].first, pb[i].first);
    EXPECT_TRUE(test::bitwise_equal(pa[i].second->value, pb[i].second->value)) << pa[i].first;
  }
  EXPECT_EQ(a.step, b.step);
  EXPECT_EQ(a.gen_optimizer.steps(), b.gen_optimizer.steps());
  EXPECT_EQ(a.disc_optimizer.steps(), b.disc_optimizer.steps());
  for (const auto& [name, mom] : a.gen_optimizer.moments()) {
    const auto& other = b.gen_optimizer.moments().at(name);
    EXPECT_TRUE(test::bitwise_equal(mom.first, other.first));
    EXPECT_TRUE(test::bitwise_equal(mom.second, other.second));
  }
  EXPECT_EQ(a.gen_optimizer.moments().size(), b.gen_optimizer.moments().size());
  EXPECT_EQ(arch_to_json(a.arch), arch_to_json(b.arch));
  EXPECT_EQ(a.config_json, b.config_json);
}

template <typename Scalar>
void round_trip() {
  test::TempDir dir("ckpt");
  auto m = build_model<Scalar>(ArchConfig::miniature());
  // populate optimiser moments with one step of synthetic gradients
  auto gp = m.generator_parameters();
  for (auto& [n, v] : gp) v->grad = random_tensor<Scalar>(v->value.shape(), v->value.size(), -1, 1);
  m.gen_optimizer.step(gp);
  m.step = 17;
  m.config_json = R"({"note":"x"})";
  save_checkpoint(m, dir / "a.ckpt");
  auto back = load_checkpoint<Scalar>(dir / "a.ckpt");
  expect_same_state(m, back);
}

TEST(Checkpoint, RoundTripFloat) { round_trip<float>(); }
TEST(Checkpoint, RoundTripDouble) { round_trip<double>(); }

TEST(Checkpoint, CloneIsDeep) {
  auto m = build_model<double>(ArchConfig::miniature());
  auto c = clone_model(m);
  expect_same_state(m, c);
  c.generator_parameters()[0].second->value.array() += 1.0;
  EXPECT_FALSE(test::bitwise_equal(m.generator_parameters()[0].second->value,
                                   c.generator_parameters()[0].second->value));
}

TEST(Checkpoint, ErrorsAreTyped) {
  test::TempDir dir("ckpt-err");
  EXPECT_THROW(load_checkpoint<double>(dir / "missing.ckpt"), IoError);
  std::ofstream(dir / "junk.ckpt") << "definitely not a checkpoint";
  EXPECT_THROW(load_checkpoint<double>(dir / "junk.ckpt"), ArtifactMismatch);
  auto m = build_model<float>(ArchConfig::miniature());
  save_checkpoint(m, dir / "f.ckpt");
  EXPECT_THROW(load_checkpoint<double>(dir / "f.ckpt"), ArtifactMismatch);
  // truncated payload
  const auto size = std::filesystem::file_size(dir / "f.ckpt");
  std::filesystem::resize_file(dir / "f.ckpt", size - 16);
  EXPECT_THROW(load_checkpoint<float>(dir / "f.ckpt"), ArtifactMismatch);
}

TEST(Checkpoint, ArchJsonRoundTrip) {
  ArchConfig a = ArchConfig::miniature();
  a.seed = 99;
  const ArchConfig b = arch_from_json(arch_to_json(a));
  EXPECT_EQ(arch_to_json(a), arch_to_json(b));
  EXPECT_EQ(b.base_width, 1);
  EXPECT_EQ(b.head_kernel, 1);
}

}  // namespace
}  // namespace analogic

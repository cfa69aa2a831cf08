// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Translation generators with gist and depth heads, patch discriminators,
//! the frozen perceptual feature map, and the ModelState that ties them
//! together.
//!
//! Parameter sharing is by aliasing: the A->A' and B->B' translators are the
//! same Generator object (gen_forward), and so are A'->A and B'->B
//! (gen_backward). Within a generator the M, N and depth heads sit on one
//! trunk; only the final layer of each head is private.

#ifndef ANALOGIC_NETWORKS_HPP
#define ANALOGIC_NETWORKS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "analogic/autograd.hpp"
#include "analogic/gist.hpp"
#include "analogic/optim.hpp"

namespace analogic {

struct ArchConfig {
  int base_width = 16;
  int n_down = 2;
  int n_res = 2;
  int height = 32;
  int width = 64;
  int stem_kernel = 7;
  int head_kernel = 3;
  int disc_width = 16;
  int disc_layers = 2;
  int disc_kernel = 4;
  std::uint64_t seed = 7;
  double init_std = 0.02;

  int downsampling_factor() const { return 1 << n_down; }

  void validate() const {
    if (base_width < 1 || n_down < 0 || n_res < 0 || disc_width < 1 || disc_layers < 1)
      throw ConfigError("architecture widths and depths must be positive");
    if (stem_kernel % 2 == 0 || head_kernel % 2 == 0)
      throw ConfigError("stem and head kernels must be odd");
    if (height < 1 || width < 1) throw ConfigError("image size must be positive");
    const int f = downsampling_factor();
    if (height % f != 0 || width % f != 0)
      throw ConfigError("image size " + std::to_string(width) + "x" + std::to_string(height) +
                        " is not divisible by the generator downsampling factor " +
                        std::to_string(f));
    if (height < 2 || width < 2) throw ConfigError("image too small for the discriminator");
  }

  //! Miniature used by the gradient checker (under 500 trainable
  //! parameters across all five networks).
  static ArchConfig miniature() {
    ArchConfig a;
    a.base_width = 1;
    a.n_down = 1;
    a.n_res = 1;
    a.height = 8;
    a.width = 8;
    a.stem_kernel = 3;
    a.head_kernel = 1;
    a.disc_width = 1;
    a.disc_layers = 1;
    a.disc_kernel = 3;
    a.init_std = 0.5;
    return a;
  }
};

template <typename Scalar>
using ParamVisitor = std::function<void(const std::string&, ad::Var<Scalar>&)>;

template <typename Scalar>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(Index in_ch, Index out_ch, ad::ConvGeometry geom, bool with_bias, std::mt19937_64& rng,
         double stddev, bool trainable = true)
      : geom_(geom) {
    auto w = Tensor<Scalar>::matrix(in_ch * geom.kernel * geom.kernel, out_ch);
    std::normal_distribution<double> dist(0.0, stddev);
    for (Index j = 0; j < w.data().cols(); ++j)
      for (Index i = 0; i < w.data().rows(); ++i) w.data()(i, j) = static_cast<Scalar>(dist(rng));
    weight_ = trainable ? ad::parameter(std::move(w)) : ad::constant(std::move(w));
    if (with_bias) bias_ = ad::parameter(Tensor<Scalar>::matrix(1, out_ch));
  }

  ad::Var<Scalar> operator()(const ad::Var<Scalar>& x) const {
    return ad::conv2d(x, weight_, bias_, geom_);
  }

  //! Convolution over precomputed patches of the same geometry.
  ad::Var<Scalar> operator()(const ad::Patches<Scalar>& p) const {
    return ad::project(p, weight_, bias_);
  }

  const ad::ConvGeometry& geometry() const { return geom_; }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& f) {
    f(prefix + ".weight", weight_);
    if (bias_) f(prefix + ".bias", bias_);
  }

  ad::Var<Scalar>& weight() { return weight_; }

 private:
  ad::ConvGeometry geom_{};
  ad::Var<Scalar> weight_;
  ad::Var<Scalar> bias_;
};

template <typename Scalar>
struct GeneratorOutput {
  ad::Var<Scalar> alignment;  // M
  ad::Var<Scalar> residual;   // N
  ad::Var<Scalar> depth;

  Gist<Scalar> gist() const { return {alignment->value, residual->value}; }
};

//! Encoder / residual transformer / decoder trunk with three final layers:
//! M through a positive mapping (1 at zero pre-activation), N through tanh,
//! and a linear one-channel depth map.
template <typename Scalar>
class Generator {
 public:
  Generator() = default;
  Generator(const ArchConfig& a, std::mt19937_64& rng) : arch_(a) {
    const double sd = a.init_std;
    Index ch = a.base_width;
    stem_ = Conv2d<Scalar>(3, ch, {a.stem_kernel, 1, a.stem_kernel / 2}, false, rng, sd);
    for (int i = 0; i < a.n_down; ++i) {
      down_.emplace_back(ch, ch * 2, ad::ConvGeometry{3, 2, 1}, false, rng, sd);
      ch *= 2;
    }
    for (int i = 0; i < a.n_res; ++i) {
      res_.emplace_back(Conv2d<Scalar>(ch, ch, {3, 1, 1}, false, rng, sd),
                        Conv2d<Scalar>(ch, ch, {3, 1, 1}, false, rng, sd));
    }
    for (int i = 0; i < a.n_down; ++i) {
      up_.emplace_back(ch, ch / 2, ad::ConvGeometry{3, 1, 1}, false, rng, sd);
      ch /= 2;
    }
    const ad::ConvGeometry head{a.head_kernel, 1, a.head_kernel / 2};
    head_m_ = Conv2d<Scalar>(ch, 3, head, true, rng, sd);
    head_n_ = Conv2d<Scalar>(ch, 3, head, true, rng, sd);
    head_depth_ = Conv2d<Scalar>(ch, 1, head, true, rng, sd);
  }

  ad::Var<Scalar> trunk(const ad::Var<Scalar>& x) const {
    const Shape& s = x->value.shape();
    if (s.channels != 3 || s.height != arch_.height || s.width != arch_.width)
      throw ShapeError("generator expects Nx3x" + std::to_string(arch_.height) + "x" +
                       std::to_string(arch_.width) + " input, got " + s.str());
    auto h = ad::relu(ad::instance_norm(stem_(x)));
    for (const auto& d : down_) h = ad::relu(ad::instance_norm(d(h)));
    for (const auto& [c1, c2] : res_) {
      auto r = ad::relu(ad::instance_norm(c1(h)));
      h = ad::add(h, ad::instance_norm(c2(r)));
    }
    for (const auto& u : up_) h = ad::relu(ad::instance_norm(u(ad::upsample2x(h))));
    return h;
  }

  GeneratorOutput<Scalar> operator()(const ad::Var<Scalar>& x) const {
    // the three final layers read the same patches of the trunk output
    const auto p = ad::patches(trunk(x), head_m_.geometry());
    return {ad::positive_unit(head_m_(p)), ad::tanh(head_n_(p)), head_depth_(p)};
  }

  Gist<Scalar> forward_gist(const Tensor<Scalar>& x) const { return (*this)(ad::constant(x)).gist(); }

  Tensor<Scalar> forward_depth(const Tensor<Scalar>& x) const {
    return head_depth_(trunk(ad::constant(x)))->value;
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& f) {
    visit_trunk(prefix, f);
    visit_heads(prefix, f);
  }

  void visit_trunk(const std::string& prefix, const ParamVisitor<Scalar>& f) {
    stem_.visit(prefix + ".stem", f);
    for (std::size_t i = 0; i < down_.size(); ++i)
      down_[i].visit(prefix + ".down" + std::to_string(i), f);
    for (std::size_t i = 0; i < res_.size(); ++i) {
      res_[i].first.visit(prefix + ".res" + std::to_string(i) + ".conv_a", f);
      res_[i].second.visit(prefix + ".res" + std::to_string(i) + ".conv_b", f);
    }
    for (std::size_t i = 0; i < up_.size(); ++i) up_[i].visit(prefix + ".up" + std::to_string(i), f);
  }

  void visit_heads(const std::string& prefix, const ParamVisitor<Scalar>& f) {
    head_m_.visit(prefix + ".head_m", f);
    head_n_.visit(prefix + ".head_n", f);
    head_depth_.visit(prefix + ".head_depth", f);
  }

  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_{};
  Conv2d<Scalar> stem_;
  std::vector<Conv2d<Scalar>> down_;
  std::vector<std::pair<Conv2d<Scalar>, Conv2d<Scalar>>> res_;
  std::vector<Conv2d<Scalar>> up_;
  Conv2d<Scalar> head_m_, head_n_, head_depth_;
};

//! Patch discriminator: strided conv stack ending in a one-channel score
//! map (logits).
template <typename Scalar>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(Index in_channels, const ArchConfig& a, std::mt19937_64& rng)
      : in_channels_(in_channels) {
    const double sd = a.init_std;
    const ad::ConvGeometry strided{a.disc_kernel, 2, 1};
    Index ch = a.disc_width;
    layers_.emplace_back(in_channels, ch, strided, true, rng, sd);
    for (int i = 1; i < a.disc_layers; ++i) {
      layers_.emplace_back(ch, ch * 2, strided, false, rng, sd);
      ch *= 2;
    }
    score_ = Conv2d<Scalar>(ch, 1, {3, 1, 1}, true, rng, sd);
  }

  ad::Var<Scalar> operator()(const ad::Var<Scalar>& x) const {
    if (x->value.channels() != in_channels_)
      throw ShapeError("discriminator expects " + std::to_string(in_channels_) +
                       " input channels, got " + std::to_string(x->value.channels()));
    const Scalar slope(0.2);
    auto h = ad::leaky_relu(layers_.front()(x), slope);
    for (std::size_t i = 1; i < layers_.size(); ++i)
      h = ad::leaky_relu(ad::instance_norm(layers_[i](h)), slope);
    return score_(h);
  }

  //! Gist discriminators see M and N stacked along channels.
  ad::Var<Scalar> operator()(const ad::Var<Scalar>& m, const ad::Var<Scalar>& n) const {
    return (*this)(ad::concat_channels(m, n));
  }

  void visit(const std::string& prefix, const ParamVisitor<Scalar>& f) {
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].visit(prefix + ".conv" + std::to_string(i), f);
    score_.visit(prefix + ".score", f);
  }

  Index in_channels() const { return in_channels_; }

 private:
  Index in_channels_ = 0;
  std::vector<Conv2d<Scalar>> layers_;
  Conv2d<Scalar> score_;
};

enum class FeatureKind { random_conv, identity };

//! Frozen feature map for the perceptual term. The default is a seed-fixed
//! random four-layer conv/ReLU stack; identity is used by tests.
template <typename Scalar>
class FeatureExtractor {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5eedf00dULL;

  explicit FeatureExtractor(FeatureKind kind = FeatureKind::random_conv,
                            std::uint64_t seed = kDefaultSeed)
      : kind_(kind) {
    if (kind == FeatureKind::identity) return;
    std::mt19937_64 rng(seed);
    const struct {
      Index in, out, stride;
    } spec[] = {{3, 8, 1}, {8, 16, 2}, {16, 16, 1}, {16, 32, 2}};
    for (const auto& l : spec) {
      const double he = std::sqrt(2.0 / static_cast<double>(l.in * 9));
      layers_.emplace_back(l.in, l.out, ad::ConvGeometry{3, l.stride, 1}, false, rng, he, false);
    }
  }

  ad::Var<Scalar> operator()(const ad::Var<Scalar>& x) const {
    auto h = x;
    for (const auto& l : layers_) h = ad::relu(l(h));
    return h;
  }

  FeatureKind kind() const { return kind_; }

 private:
  FeatureKind kind_;
  std::vector<Conv2d<Scalar>> layers_;
};

template <typename Scalar>
struct ModelState {
  ArchConfig arch;
  Generator<Scalar> gen_forward;   // A->A' and B->B'
  Generator<Scalar> gen_backward;  // A'->A and B'->B
  Discriminator<Scalar> disc_gist_fwd;
  Discriminator<Scalar> disc_gist_bwd;
  Discriminator<Scalar> disc_target;
  Adam<Scalar> gen_optimizer;
  Adam<Scalar> disc_optimizer;
  long step = 0;
  std::string config_json = "{}";

  // The four translator roles resolve to two objects.
  const Generator<Scalar>& translator_aa() const { return gen_forward; }
  const Generator<Scalar>& translator_bb() const { return gen_forward; }
  const Generator<Scalar>& translator_a_a() const { return gen_backward; }
  const Generator<Scalar>& translator_b_b() const { return gen_backward; }

  void visit_generators(const ParamVisitor<Scalar>& f) {
    gen_forward.visit("gen_forward", f);
    gen_backward.visit("gen_backward", f);
  }
  void visit_discriminators(const ParamVisitor<Scalar>& f) {
    disc_gist_fwd.visit("disc_gist_fwd", f);
    disc_gist_bwd.visit("disc_gist_bwd", f);
    disc_target.visit("disc_target", f);
  }
  void visit_parameters(const ParamVisitor<Scalar>& f) {
    visit_generators(f);
    visit_discriminators(f);
  }

  std::vector<std::pair<std::string, ad::Var<Scalar>>> generator_parameters() {
    std::vector<std::pair<std::string, ad::Var<Scalar>>> out;
    visit_generators([&](const std::string& n, ad::Var<Scalar>& v) { out.emplace_back(n, v); });
    return out;
  }
  std::vector<std::pair<std::string, ad::Var<Scalar>>> discriminator_parameters() {
    std::vector<std::pair<std::string, ad::Var<Scalar>>> out;
    visit_discriminators([&](const std::string& n, ad::Var<Scalar>& v) { out.emplace_back(n, v); });
    return out;
  }
  std::vector<std::pair<std::string, ad::Var<Scalar>>> parameters() {
    auto out = generator_parameters();
    auto d = discriminator_parameters();
    out.insert(out.end(), d.begin(), d.end());
    return out;
  }

  void zero_grad() {
    visit_parameters([](const std::string&, ad::Var<Scalar>& v) { v->grad = Tensor<Scalar>(); });
  }
};

template <typename Scalar>
Index count_parameters(const std::vector<std::pair<std::string, ad::Var<Scalar>>>& params) {
  Index n = 0;
  for (const auto& p : params) n += p.second->value.size();
  return n;
}

//! Builds an initialised model. Every network draws from its own stream
//! derived from arch.seed so that adding a network never reshuffles the
//! others.
template <typename Scalar>
ModelState<Scalar> build_model(const ArchConfig& arch, const AdamConfig& opt = {}) {
  arch.validate();
  ModelState<Scalar> m;
  m.arch = arch;
  auto stream = [&](std::uint64_t k) { return std::mt19937_64(arch.seed * 1000003ULL + k); };
  auto r0 = stream(1), r1 = stream(2), r2 = stream(3), r3 = stream(4), r4 = stream(5);
  m.gen_forward = Generator<Scalar>(arch, r0);
  m.gen_backward = Generator<Scalar>(arch, r1);
  m.disc_gist_fwd = Discriminator<Scalar>(6, arch, r2);
  m.disc_gist_bwd = Discriminator<Scalar>(6, arch, r3);
  m.disc_target = Discriminator<Scalar>(3, arch, r4);
  m.gen_optimizer = Adam<Scalar>(opt);
  m.disc_optimizer = Adam<Scalar>(opt);
  return m;
}

}  // namespace analogic

#endif  // ANALOGIC_NETWORKS_HPP

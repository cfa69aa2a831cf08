// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Loss terms for analogical translation and their weighted assembly.
//!
//! Each term has a low-level form over graph variables (so tests can force
//! gists, depths or discriminator outputs) and a model-level form over a
//! TranslationGraph, the shared forward pass of both translators on one
//! batch. Batch has no slot for a target-foggy image: nothing here can read
//! one.

#ifndef ANALOGIC_OBJECTIVES_HPP
#define ANALOGIC_OBJECTIVES_HPP

#include <map>
#include <optional>
#include <string>

#include "analogic/networks.hpp"

namespace analogic {

struct LossWeights {
  double gist_adv = 3.0;
  double cyc_adv = 1.0;
  double sup = 10.0;
  double rec = 10.0;
  double dep = 10.0;
  double percep = 10.0;

  static LossWeights zeros() { return {0, 0, 0, 0, 0, 0}; }

  void validate() const {
    for (double w : {gist_adv, cyc_adv, sup, rec, dep, percep})
      if (!(w >= 0.0)) throw ConfigError("loss weights must be non-negative");
  }
};

//! One training batch: aligned source pairs, target clear images, and depth
//! maps in normalised units (metres / far plane).
template <typename Scalar>
struct Batch {
  Tensor<Scalar> x_a;
  Tensor<Scalar> x_a_prime;
  Tensor<Scalar> x_b;
  Tensor<Scalar> depth_s;
  Tensor<Scalar> depth_t;

  void validate() const {
    if (x_a.empty() || x_a_prime.empty()) throw ConfigError("batch is missing the source pair");
    require_same_shape(x_a.shape(), x_a_prime.shape(), "batch source pair");
    if (!x_b.empty()) require_same_shape(x_a.shape(), x_b.shape(), "batch target image");
  }
};

//! Which translator passes an objective needs.
struct GraphNeeds {
  bool source = true;
  bool target = true;
  bool target_back = true;

  static GraphNeeds from(const LossWeights& w) {
    GraphNeeds n;
    n.source = w.sup > 0 || w.gist_adv > 0 || w.dep > 0;
    n.target = w.gist_adv > 0 || w.rec > 0 || w.cyc_adv > 0 || w.percep > 0 || w.dep > 0;
    n.target_back = w.gist_adv > 0 || w.rec > 0 || w.cyc_adv > 0 || w.dep > 0;
    return n;
  }
};

template <typename Scalar>
struct TranslationGraph {
  ad::Var<Scalar> x_a, x_a_prime, x_b;
  std::optional<GeneratorOutput<Scalar>> fwd_a;        // G_AA'(x_a)
  std::optional<GeneratorOutput<Scalar>> bwd_a;        // G_A'A(x_a')
  std::optional<GeneratorOutput<Scalar>> fwd_b;        // G_BB'(x_b)
  std::optional<GeneratorOutput<Scalar>> bwd_b_prime;  // G_B'B(x^b')
  ad::Var<Scalar> x_b_prime;  // generated target-foggy image
  ad::Var<Scalar> x_b_rec;    // cycle reconstruction of x_b
};

template <typename Scalar>
TranslationGraph<Scalar> run_translators(const ModelState<Scalar>& model, const Batch<Scalar>& batch,
                                         GraphNeeds needs = {}) {
  batch.validate();
  TranslationGraph<Scalar> g;
  g.x_a = ad::constant(batch.x_a);
  g.x_a_prime = ad::constant(batch.x_a_prime);
  if (needs.source) {
    g.fwd_a = model.translator_aa()(g.x_a);
    g.bwd_a = model.translator_a_a()(g.x_a_prime);
  }
  if (needs.target) {
    if (batch.x_b.empty()) throw ConfigError("batch is missing the target image");
    g.x_b = ad::constant(batch.x_b);
    g.fwd_b = model.translator_bb()(g.x_b);
    g.x_b_prime = ad::affine(g.x_b, g.fwd_b->alignment, g.fwd_b->residual);
    if (needs.target_back) {
      g.bwd_b_prime = model.translator_b_b()(g.x_b_prime);
      g.x_b_rec = ad::affine(g.x_b_prime, g.bwd_b_prime->alignment, g.bwd_b_prime->residual);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Supervised term

template <typename Scalar>
ad::Var<Scalar> supervised_loss(const ad::Var<Scalar>& x_a, const ad::Var<Scalar>& x_a_prime,
                                const ad::Var<Scalar>& m_fwd, const ad::Var<Scalar>& n_fwd,
                                const ad::Var<Scalar>& m_bwd, const ad::Var<Scalar>& n_bwd) {
  return ad::add(ad::l1(ad::affine(x_a, m_fwd, n_fwd), x_a_prime),
                 ad::l1(ad::affine(x_a_prime, m_bwd, n_bwd), x_a));
}

//! Value-only form with explicit gists.
template <typename Scalar>
Scalar supervised_loss(const Tensor<Scalar>& x_a, const Tensor<Scalar>& x_a_prime,
                       const Gist<Scalar>& fwd, const Gist<Scalar>& bwd) {
  using ad::constant;
  return ad::item(supervised_loss(constant(x_a), constant(x_a_prime), constant(fwd.alignment),
                                  constant(fwd.residual), constant(bwd.alignment),
                                  constant(bwd.residual)));
}

template <typename Scalar>
ad::Var<Scalar> supervised_loss(const TranslationGraph<Scalar>& g) {
  if (!g.fwd_a || !g.bwd_a) throw ConfigError("supervised_loss needs the source translator passes");
  return supervised_loss(g.x_a, g.x_a_prime, g.fwd_a->alignment, g.fwd_a->residual,
                         g.bwd_a->alignment, g.bwd_a->residual);
}

// ---------------------------------------------------------------------------
// Adversarial terms

template <typename Scalar>
struct AdversarialTerms {
  ad::Var<Scalar> disc;  // discriminator criterion (minimised by D)
  ad::Var<Scalar> gen;   // non-saturating generator criterion
};

//! real_in is labelled real, fake_in fake. disc_detached cuts the
//! discriminator criterion from the generator graph.
template <typename Scalar, typename D>
AdversarialTerms<Scalar> adversarial_pair(const D& disc, const ad::Var<Scalar>& real_in,
                                          const ad::Var<Scalar>& fake_in, ad::GanForm form,
                                          bool disc_detached, bool want_disc = true,
                                          bool want_gen = true) {
  AdversarialTerms<Scalar> t;
  if (want_disc) {
    auto r = disc_detached ? ad::detach(real_in) : real_in;
    auto f = disc_detached ? ad::detach(fake_in) : fake_in;
    t.disc = ad::add(ad::gan_criterion(disc(r), true, form), ad::gan_criterion(disc(f), false, form));
  }
  if (want_gen) t.gen = ad::gan_criterion(disc(fake_in), true, form);
  return t;
}

//! Source gists are real, target gists fake; D_I judges the forward
//! direction and D_J the backward one.
template <typename Scalar>
AdversarialTerms<Scalar> gist_adversarial_loss(const ModelState<Scalar>& model,
                                               const TranslationGraph<Scalar>& g, ad::GanForm form,
                                               bool disc_detached, bool want_disc = true,
                                               bool want_gen = true) {
  if (!g.fwd_a || !g.bwd_a || !g.fwd_b || !g.bwd_b_prime)
    throw ConfigError("gist_adversarial_loss needs all four translator passes");
  auto cat = [](const GeneratorOutput<Scalar>& o) {
    return ad::concat_channels(o.alignment, o.residual);
  };
  auto fwd = adversarial_pair<Scalar>(model.disc_gist_fwd, cat(*g.fwd_a), cat(*g.fwd_b), form,
                                      disc_detached, want_disc, want_gen);
  auto bwd = adversarial_pair<Scalar>(model.disc_gist_bwd, cat(*g.bwd_a), cat(*g.bwd_b_prime),
                                      form, disc_detached, want_disc, want_gen);
  AdversarialTerms<Scalar> t;
  if (want_disc) t.disc = ad::add(fwd.disc, bwd.disc);
  if (want_gen) t.gen = ad::add(fwd.gen, bwd.gen);
  return t;
}

// ---------------------------------------------------------------------------
// Cycle term

template <typename Scalar>
struct CycleTerms {
  ad::Var<Scalar> rec;
  AdversarialTerms<Scalar> adv;
};

template <typename Scalar>
CycleTerms<Scalar> cycle_loss(const ModelState<Scalar>& model, const TranslationGraph<Scalar>& g,
                              ad::GanForm form, bool disc_detached, bool want_rec = true,
                              bool want_disc = true, bool want_gen = true) {
  if (!g.x_b_rec) throw ConfigError("cycle_loss needs the target cycle passes");
  CycleTerms<Scalar> t;
  if (want_rec) t.rec = ad::l1(g.x_b_rec, g.x_b);
  if (want_disc || want_gen)
    t.adv = adversarial_pair<Scalar>(model.disc_target, g.x_b, g.x_b_rec, form, disc_detached,
                                     want_disc, want_gen);
  return t;
}

//! Reconstruction error for explicit forward/backward gists on x_b.
template <typename Scalar>
Scalar cycle_reconstruction(const Tensor<Scalar>& x_b, const Gist<Scalar>& fwd,
                            const Gist<Scalar>& bwd) {
  auto x_b_prime = apply_gist(x_b, fwd);
  auto rec = apply_gist(x_b_prime, bwd);
  return (rec.array() - x_b.array()).abs().mean();
}

// ---------------------------------------------------------------------------
// Auxiliary terms

//! mean | (phi(x_a') - phi(x_a)) - (phi(x_b') - phi(x_b)) |.
template <typename Scalar>
ad::Var<Scalar> perceptual_loss(const FeatureExtractor<Scalar>& phi, const ad::Var<Scalar>& x_a,
                                const ad::Var<Scalar>& x_a_prime, const ad::Var<Scalar>& x_b,
                                const ad::Var<Scalar>& x_b_prime) {
  auto delta_source = ad::sub(phi(x_a_prime), phi(x_a));
  auto delta_target = ad::sub(phi(x_b_prime), phi(x_b));
  return ad::l1(delta_source, delta_target);
}

template <typename Scalar>
ad::Var<Scalar> perceptual_loss(const FeatureExtractor<Scalar>& phi, const TranslationGraph<Scalar>& g) {
  if (!g.x_b_prime) throw ConfigError("perceptual_loss needs the target translator pass");
  return perceptual_loss(phi, g.x_a, g.x_a_prime, g.x_b, g.x_b_prime);
}

//! Sum of four mean-L1 depth errors: x_a and x_a' against the source depth,
//! x_b and the generated x^b' against the target depth.
template <typename Scalar>
ad::Var<Scalar> depth_loss(const ad::Var<Scalar>& pred_a, const ad::Var<Scalar>& pred_a_prime,
                           const ad::Var<Scalar>& pred_b, const ad::Var<Scalar>& pred_b_prime,
                           const ad::Var<Scalar>& depth_s, const ad::Var<Scalar>& depth_t) {
  return ad::add(ad::add(ad::l1(pred_a, depth_s), ad::l1(pred_a_prime, depth_s)),
                 ad::add(ad::l1(pred_b, depth_t), ad::l1(pred_b_prime, depth_t)));
}

template <typename Scalar>
ad::Var<Scalar> depth_loss(const TranslationGraph<Scalar>& g, const Batch<Scalar>& batch) {
  if (!g.fwd_a || !g.bwd_a || !g.fwd_b || !g.bwd_b_prime)
    throw ConfigError("depth_loss needs all four translator passes");
  if (batch.depth_s.empty() || batch.depth_t.empty())
    throw ConfigError("depth_loss needs source and target depth maps");
  return depth_loss(g.fwd_a->depth, g.bwd_a->depth, g.fwd_b->depth, g.bwd_b_prime->depth,
                    ad::constant(batch.depth_s), ad::constant(batch.depth_t));
}

// ---------------------------------------------------------------------------
// Full objective

enum class ObjectivePass { generator, discriminator, both };

template <typename Scalar>
struct ObjectiveValue {
  ad::Var<Scalar> gen_total;
  ad::Var<Scalar> disc_total;
  std::map<std::string, double> breakdown;
};

namespace detail {

template <typename Scalar>
void add_weighted(ad::Var<Scalar>& total, const ad::Var<Scalar>& term, double w) {
  auto scaled = ad::scale(term, static_cast<Scalar>(w));
  total = total ? ad::add(total, scaled) : scaled;
}

}  // namespace detail

//! gen_total = w_gist_adv*gen_adv + w_sup*sup + w_rec*rec + w_cyc_adv*gen_cyc
//!           + w_dep*dep + w_percep*percep
//! disc_total = w_gist_adv*disc_adv + w_cyc_adv*disc_cyc
//! A zero weight removes its term from the graph entirely.
template <typename Scalar>
ObjectiveValue<Scalar> full_objective(const ModelState<Scalar>& model, const TranslationGraph<Scalar>& g,
                                      const Batch<Scalar>& batch, const LossWeights& w,
                                      const FeatureExtractor<Scalar>& phi,
                                      ad::GanForm form = ad::GanForm::log,
                                      ObjectivePass pass = ObjectivePass::both,
                                      bool disc_detached = false) {
  w.validate();
  const bool want_gen = pass != ObjectivePass::discriminator;
  const bool want_disc = pass != ObjectivePass::generator;
  ObjectiveValue<Scalar> out;
  for (const char* k : {"sup", "gist_adv_gen", "gist_adv_disc", "rec", "cyc_adv_gen",
                        "cyc_adv_disc", "percep", "dep"})
    out.breakdown[k] = 0.0;
  auto record = [&](const char* key, const ad::Var<Scalar>& v) {
    out.breakdown[key] = static_cast<double>(ad::item(v));
  };

  if (want_gen && w.sup > 0) {
    auto v = supervised_loss(g);
    record("sup", v);
    detail::add_weighted(out.gen_total, v, w.sup);
  }
  if (w.gist_adv > 0) {
    auto t = gist_adversarial_loss(model, g, form, disc_detached, want_disc, want_gen);
    if (want_gen) {
      record("gist_adv_gen", t.gen);
      detail::add_weighted(out.gen_total, t.gen, w.gist_adv);
    }
    if (want_disc) {
      record("gist_adv_disc", t.disc);
      detail::add_weighted(out.disc_total, t.disc, w.gist_adv);
    }
  }
  const bool want_rec = want_gen && w.rec > 0;
  const bool want_cyc_adv = w.cyc_adv > 0;
  if (want_rec || want_cyc_adv) {
    auto t = cycle_loss(model, g, form, disc_detached, want_rec, want_cyc_adv && want_disc,
                        want_cyc_adv && want_gen);
    if (want_rec) {
      record("rec", t.rec);
      detail::add_weighted(out.gen_total, t.rec, w.rec);
    }
    if (want_cyc_adv && want_gen) {
      record("cyc_adv_gen", t.adv.gen);
      detail::add_weighted(out.gen_total, t.adv.gen, w.cyc_adv);
    }
    if (want_cyc_adv && want_disc) {
      record("cyc_adv_disc", t.adv.disc);
      detail::add_weighted(out.disc_total, t.adv.disc, w.cyc_adv);
    }
  }
  if (want_gen && w.dep > 0) {
    auto v = depth_loss(g, batch);
    record("dep", v);
    detail::add_weighted(out.gen_total, v, w.dep);
  }
  if (want_gen && w.percep > 0) {
    auto v = perceptual_loss(phi, g);
    record("percep", v);
    detail::add_weighted(out.gen_total, v, w.percep);
  }
  if (!out.gen_total) out.gen_total = ad::scalar_constant<Scalar>(0);
  if (!out.disc_total) out.disc_total = ad::scalar_constant<Scalar>(0);
  out.breakdown["gen_total"] = static_cast<double>(ad::item(out.gen_total));
  out.breakdown["disc_total"] = static_cast<double>(ad::item(out.disc_total));
  return out;
}

}  // namespace analogic

#endif  // ANALOGIC_OBJECTIVES_HPP

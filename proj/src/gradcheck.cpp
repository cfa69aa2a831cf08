// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include "analogic/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "analogic/fog.hpp"

namespace analogic {

const std::vector<std::string>& gradcheck_losses() {
  static const std::vector<std::string> names{"sup", "gist_adv", "cyc", "percep", "dep", "full"};
  return names;
}

LossWeights gradcheck_weights(const std::string& loss_name) {
  LossWeights w = LossWeights::zeros();
  if (loss_name == "sup")
    w.sup = 1;
  else if (loss_name == "gist_adv")
    w.gist_adv = 1;
  else if (loss_name == "cyc")
    w.rec = w.cyc_adv = 1;
  else if (loss_name == "percep")
    w.percep = 1;
  else if (loss_name == "dep")
    w.dep = 1;
  else if (loss_name == "full")
    w = LossWeights{};
  else
    throw ConfigError("unknown loss '" + loss_name +
                      "' (expected sup, gist_adv, cyc, percep, dep or full)");
  return w;
}

namespace {

Batch<double> miniature_batch(const ArchConfig& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> pix(0.05, 0.95), dep(1.0, 9.0);
  const Index n = 2;
  auto image = [&] {
    Tensor<double> t(Shape{n, 3, arch.height, arch.width});
    for (Index i = 0; i < t.size(); ++i) t.data().data()[i] = pix(rng);
    return t;
  };
  auto depth = [&] {
    Tensor<double> t(Shape{n, 1, arch.height, arch.width});
    for (Index i = 0; i < t.size(); ++i) t.data().data()[i] = dep(rng);
    return t;
  };
  Batch<double> b;
  b.x_a = image();
  b.x_b = image();
  const Tensor<double> d_s = depth();
  // The foggy source is rendered per sample with the closed form.
  std::vector<Tensor<double>> foggy;
  for (Index i = 0; i < n; ++i)
    foggy.push_back(render_fog(slice_batch(b.x_a, i), slice_batch(d_s, i), FogParams{}));
  b.x_a_prime = stack_batch(foggy);
  b.depth_s = d_s;
  b.depth_s.array() /= 10.0;
  b.depth_t = depth();
  b.depth_t.array() /= 10.0;
  return b;
}

}  // namespace

GradcheckResult gradcheck(const std::string& loss_name, std::uint64_t seed,
                          const LossWeights& weights) {
  weights.validate();
  ArchConfig arch = ArchConfig::miniature();
  arch.seed = seed;
  ModelState<double> model = build_model<double>(arch);
  // Zero-initialised biases put every dead-feature pixel exactly on the
  // identity gist, i.e. on the kink of the L1 terms. Checking at a generic
  // point means drawing the biases too.
  {
    std::mt19937_64 rng(seed * 31 + 17);
    std::normal_distribution<double> nd(0.0, 0.1);
    model.visit_parameters([&](const std::string& name, ad::Var<double>& p) {
      if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0)
        for (Index k = 0; k < p->value.size(); ++k) p->value.data().data()[k] = nd(rng);
    });
  }
  const Batch<double> batch = miniature_batch(arch, seed);
  const FeatureExtractor<double> phi;
  const GraphNeeds needs = GraphNeeds::from(weights);

  auto evaluate = [&] {
    const auto g = run_translators(model, batch, needs);
    return full_objective(model, g, batch, weights, phi, ad::GanForm::log, ObjectivePass::both,
                          false);
  };

  auto params = model.parameters();
  GradcheckResult res;
  res.loss = loss_name;
  res.parameters = count_parameters(params);

  for (int which = 0; which < 2; ++which) {
    const char* scalar = which == 0 ? "gen_total" : "disc_total";
    auto pick = [&](const ObjectiveValue<double>& v) {
      return which == 0 ? v.gen_total : v.disc_total;
    };

    model.zero_grad();
    auto v = evaluate();
    ad::backward(pick(v));

    for (auto& [name, p] : params) {
      const Tensor<double> analytic =
          p->has_grad() ? p->grad : Tensor<double>(p->value.shape());
      for (Index k = 0; k < p->value.size(); ++k) {
        double& theta = p->value.data().data()[k];
        const double saved = theta;
        theta = saved + kGradcheckStep;
        const double up = ad::item(pick(evaluate()));
        theta = saved - kGradcheckStep;
        const double down = ad::item(pick(evaluate()));
        theta = saved;

        const double numeric = (up - down) / (2.0 * kGradcheckStep);
        const double a = analytic.data().data()[k];
        const double denom = std::max({std::abs(a), std::abs(numeric), kGradcheckFloor});
        const double rel = std::abs(a - numeric) / denom;
        ++res.checked;
        if (res.worst.empty() || rel > res.max_rel_error) {
          res.max_rel_error = rel;
          res.worst = std::string(scalar) + ":" + name + "[" + std::to_string(k) + "]";
          res.worst_analytic = a;
          res.worst_numeric = numeric;
        }
      }
    }
  }
  model.zero_grad();
  return res;
}

}  // namespace analogic

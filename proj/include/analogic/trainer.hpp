// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Minimax training loop: configuration, deterministic batching, the single
//! alternating update, checkpointed training runs and inference.
//!
//! A step performs one discriminator update on the discriminator criterion
//! (generator outputs detached) followed by one generator update on the
//! generator criterion evaluated against the freshly updated discriminators.
//! The two optimisers own disjoint parameter sets.

#ifndef ANALOGIC_TRAINER_HPP
#define ANALOGIC_TRAINER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "analogic/dataset.hpp"
#include "analogic/objectives.hpp"

namespace analogic {

struct AblationFlags {
  bool use_gist_adv = true;
  bool use_cyc = true;
  bool use_percep = true;
  bool use_dep = true;
  bool use_sup = true;

  //! Applies a comma-separated list such as "gist_adv,cyc". Throws
  //! ConfigError on unknown names.
  void disable(const std::string& csv);
};

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 4;
  long steps = 4000;
  int width = 64;
  int height = 32;
  LossWeights weights;
  std::uint64_t seed = 7;
  AblationFlags ablation;
  long checkpoint_interval = 1000;
  ad::GanForm gan_form = ad::GanForm::log;
  //! Deterministic runs keep wall-clock out of metrics.jsonl (it goes to
  //! timing.jsonl) so that the metrics log is reproducible byte for byte.
  bool deterministic = true;
  FeatureKind perceptual = FeatureKind::random_conv;
  //! Network shape. width/height above override the image size here.
  ArchConfig arch;

  void validate() const;

  //! Loss weights after ablation. use_cyc covers both the reconstruction
  //! and the target adversarial term.
  LossWeights effective_weights() const;

  ArchConfig resolved_arch() const;
  AdamConfig adam() const { return AdamConfig{learning_rate, beta1, beta2, 1e-8}; }

  std::string to_json() const;
  //! Keys missing from the document keep their current values; unknown keys
  //! throw ConfigError.
  void merge_json(const std::string& text);
};

std::string to_string(ad::GanForm f);
ad::GanForm gan_form_from_string(const std::string& s);
std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

struct MetricsRecord {
  long step = 0;  // optimiser steps completed after this record's update
  std::map<std::string, double> losses;
  double grad_norm_gen = 0.0;
  double grad_norm_disc = 0.0;
  double wall_clock = 0.0;  // seconds since the run (or resume) started
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;

  //! One NDJSON line. Wall-clock is omitted when include_time is false.
  std::string to_json(bool include_time) const;
  static MetricsRecord from_json(const std::string& line);
};

//! Train-split images held in memory. Held-out entries are never loaded.
template <typename Scalar>
struct TrainingData {
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  std::vector<Tensor<Scalar>> source_clear;
  std::vector<Tensor<Scalar>> source_foggy;
  std::vector<Tensor<Scalar>> source_depth;  // metres / far plane
  std::vector<Tensor<Scalar>> target_clear;
  std::vector<Tensor<Scalar>> target_depth;  // metres / far plane

  Index epoch_length() const {
    return static_cast<Index>(std::min(source_clear.size(), target_clear.size()));
  }
};

TrainingData<float> load_training_data(const DatasetManifest& manifest);

//! Sample indices for one batch. Each epoch draws an independent
//! permutation of each split seeded by (seed, epoch), so the batch at any
//! step is a pure function of (seed, step) and resumes exactly.
struct BatchIndices {
  std::vector<Index> source;
  std::vector<Index> target;
};
BatchIndices batch_indices(std::uint64_t seed, long step, int batch_size, Index n_source,
                           Index n_target);

template <typename Scalar>
Batch<Scalar> make_batch(const TrainingData<Scalar>& data, const BatchIndices& idx) {
  auto gather = [](const std::vector<Tensor<Scalar>>& pool, const std::vector<Index>& which) {
    std::vector<Tensor<Scalar>> parts;
    parts.reserve(which.size());
    for (Index i : which) parts.push_back(pool[static_cast<std::size_t>(i)]);
    return stack_batch(parts);
  };
  Batch<Scalar> b;
  b.x_a = gather(data.source_clear, idx.source);
  b.x_a_prime = gather(data.source_foggy, idx.source);
  b.depth_s = gather(data.source_depth, idx.source);
  b.x_b = gather(data.target_clear, idx.target);
  b.depth_t = gather(data.target_depth, idx.target);
  return b;
}

namespace detail {

template <typename Scalar>
double grad_norm(const std::vector<std::pair<std::string, ad::Var<Scalar>>>& params) {
  double s = 0.0;
  for (const auto& [name, p] : params)
    if (p->has_grad()) s += static_cast<double>(p->grad.data().squaredNorm());
  return std::sqrt(s);
}

inline void require_finite(const std::map<std::string, double>& losses, long step) {
  for (const auto& [k, v] : losses)
    if (!std::isfinite(v)) throw NumericError(k, step);
}

}  // namespace detail

//! One alternating update. Mutates the model in place and returns the
//! record for the step. Throws NumericError naming the first non-finite
//! term; the model is left untouched by the failing half-step.
template <typename Scalar>
MetricsRecord train_step(ModelState<Scalar>& model, const Batch<Scalar>& batch,
                         const LossWeights& w, const FeatureExtractor<Scalar>& phi,
                         ad::GanForm form = ad::GanForm::log) {
  const long step = model.step;
  MetricsRecord rec;
  const GraphNeeds needs = GraphNeeds::from(w);
  const auto graph = run_translators(model, batch, needs);

  if (w.gist_adv > 0 || w.cyc_adv > 0) {
    auto d = full_objective(model, graph, batch, w, phi, form, ObjectivePass::discriminator, true);
    detail::require_finite(d.breakdown, step);
    model.zero_grad();
    ad::backward(d.disc_total);
    auto params = model.discriminator_parameters();
    rec.grad_norm_disc = detail::grad_norm(params);
    if (!std::isfinite(rec.grad_norm_disc)) throw NumericError("disc_grad", step);
    model.disc_optimizer.step(params);
    for (const char* k : {"gist_adv_disc", "cyc_adv_disc", "disc_total"}) rec.losses[k] = d.breakdown[k];
  } else {
    for (const char* k : {"gist_adv_disc", "cyc_adv_disc", "disc_total"}) rec.losses[k] = 0.0;
  }

  auto g = full_objective(model, graph, batch, w, phi, form, ObjectivePass::generator, false);
  detail::require_finite(g.breakdown, step);
  model.zero_grad();
  ad::backward(g.gen_total);
  auto params = model.generator_parameters();
  rec.grad_norm_gen = detail::grad_norm(params);
  if (!std::isfinite(rec.grad_norm_gen)) throw NumericError("gen_grad", step);
  model.gen_optimizer.step(params);
  model.zero_grad();
  for (const char* k : {"sup", "gist_adv_gen", "rec", "cyc_adv_gen", "percep", "dep", "gen_total"})
    rec.losses[k] = g.breakdown[k];

  model.step = step + 1;
  rec.step = model.step;
  return rec;
}

struct TrainOptions {
  //! Resume from this checkpoint. metrics.jsonl in the output directory is
  //! truncated to the checkpoint's step before appending.
  std::optional<std::filesystem::path> resume;
  //! Called after every step (progress reporting).
  std::function<void(const MetricsRecord&)> on_step;
};

//! Runs cfg.steps optimiser steps in total (counting resumed ones) and
//! writes checkpoints, metrics.jsonl and the final checkpoint into out_dir.
//! Returns the final checkpoint path.
std::filesystem::path train(const DatasetManifest& manifest, const TrainConfig& cfg,
                            const std::filesystem::path& out_dir, const TrainOptions& opts = {});

//! Reads all records of a metrics log.
std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);

//! Translates a batch with gen_forward at domainness z, clamped to [0, 1].
template <typename Scalar>
Tensor<Scalar> translate(const ModelState<Scalar>& model, const Tensor<Scalar>& images,
                         Domainness z) {
  if (images.shape().height != model.arch.height || images.shape().width != model.arch.width ||
      images.shape().channels != 3)
    throw ConfigError("image shape " + images.shape().str() + " does not match the model's " +
                      std::to_string(model.arch.width) + "x" + std::to_string(model.arch.height));
  if (z.value() == 0.0) return images;
  const Gist<Scalar> g = model.gen_forward.forward_gist(images);
  Tensor<Scalar> out = interpolate_domain(images, g, z);
  out.array() = out.array().max(Scalar(0)).min(Scalar(1));
  return out;
}

//! Calls f(first, count) over consecutive chunks of at most n samples.
void for_each_chunk(Index total, Index n, const std::function<void(Index, Index)>& f);

//! Translates any number of images in memory-bounded chunks.
Tensor<float> translate_images(const ModelState<float>& model, const std::vector<Image>& images,
                               Domainness z);

}  // namespace analogic

#endif  // ANALOGIC_TRAINER_HPP

// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Oracle-grounded evaluation on the held-out target split.
//!
//! The held-out split carries the fog parameters used to render its ground
//! truth, so predicted gists can be scored against the closed form
//! M = exp(-beta d), N = A (1 - exp(-beta d)) and translated images against
//! the rendered foggy image.

#ifndef ANALOGIC_EVALUATE_HPP
#define ANALOGIC_EVALUATE_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "analogic/dataset.hpp"
#include "analogic/networks.hpp"

namespace analogic {

//! Statement written into every report header.
extern const char* const kReproducibilityStatement;

//! Number of held-out entries (taken from the front of the split) reserved
//! for choosing z; reports computed with a calibrated z cover the rest.
inline constexpr int kValidationSlice = 16;

struct PerImageMetrics {
  std::string id;
  double zero_shot_l1 = 0.0;
  double baseline_l1 = 0.0;
  double gist_M_mae = 0.0;
  double gist_N_mae = 0.0;
  double depth_corr = 0.0;
};

struct EvalReport {
  double z = 0.0;
  std::string z_source = "given";  // "given", "preset" or "calibrated"
  double zero_shot_l1 = 0.0;
  double baseline_l1 = 0.0;
  double gist_M_mae = 0.0;
  double gist_N_mae = 0.0;
  double depth_corr = 0.0;  // pooled over every evaluated pixel
  std::vector<PerImageMetrics> per_image;
  std::vector<std::string> notes;

  std::string to_json() const;
};

//! Produces a gist for a clear image. The entry gives access to oracle
//! information for reference providers; model providers ignore it.
using GistProvider = std::function<Gist<double>(const ManifestEntry&, const Image& clear)>;

GistProvider model_gist_provider(const ModelState<float>& model);
//! Uses the entry's fog parameters and quantized depth.
GistProvider oracle_gist_provider(const DatasetManifest& manifest);

//! Held-out entries in manifest order, optionally restricted to
//! [first, first + count).
std::vector<const ManifestEntry*> heldout_entries(const DatasetManifest& manifest, int first = 0,
                                                  int count = -1);

struct ZeroShotOptions {
  //! Raises ArtifactMismatch if this training log ever batched a held-out id.
  std::optional<std::filesystem::path> metrics_log;
  //! Writes input | translated | ground truth | abs-diff per image.
  std::optional<std::filesystem::path> contact_sheet_dir;
};

//! Scores translations of the given held-out entries at domainness z.
EvalReport evaluate_zero_shot(const GistProvider& provider, const DatasetManifest& manifest,
                              const std::vector<const ManifestEntry*>& entries, Domainness z,
                              const ZeroShotOptions& opts = {});

struct GistOracleScores {
  double gist_M_mae = 0.0;
  double gist_N_mae = 0.0;
  Index images = 0;
};

//! Mean absolute gist error against the closed form over the given entries
//! (which must carry fog parameters).
GistOracleScores evaluate_gist_oracle(const GistProvider& provider, const DatasetManifest& manifest,
                                      const std::vector<const ManifestEntry*>& entries);

//! Mean |translate(x, z) - x| for each z. z_list must be sorted and in [0, 1].
std::vector<double> sweep_interpolation(const Gist<double>& gist, const Image& image,
                                        const std::vector<double>& z_list);

struct Calibration {
  double z = 0.0;
  std::vector<double> grid;
  std::vector<double> l1;  // validation zero_shot_l1 per grid point
};

//! Picks the z in grid minimising zero_shot_l1 over the validation entries.
Calibration calibrate_z(const GistProvider& provider, const DatasetManifest& manifest,
                        const std::vector<const ManifestEntry*>& validation,
                        const std::vector<double>& grid);

//! Default calibration grid: 0, 0.05, ..., 1 plus the two presets.
std::vector<double> default_z_grid();

//! Throws ArtifactMismatch if any held-out id occurs in the metrics log.
void audit_split(const DatasetManifest& manifest, const std::filesystem::path& metrics_log);

//! Pearson correlation; 0 when either input has zero variance.
double pearson(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b);

}  // namespace analogic

#endif  // ANALOGIC_EVALUATE_HPP

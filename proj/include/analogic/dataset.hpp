// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Toy corpus generation and the JSON manifest that indexes it.
//!
//! Layout of a built corpus:
//!   manifest.json
//!   source/<id>_{clear,foggy,depth}.png    paired A / A' samples
//!   target/<id>_{clear,depth}.png          unpaired B samples
//!   heldout/<id>_{clear,foggy,depth}.png   B with ground-truth B' (evaluation only)

#ifndef ANALOGIC_DATASET_HPP
#define ANALOGIC_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "analogic/fog.hpp"
#include "analogic/image_io.hpp"

namespace analogic {

inline constexpr const char* kManifestVersion = "analogic-manifest/1";

enum class Split { train, heldout_oracle };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string id;
  SceneStyle style = SceneStyle::source;
  Split split = Split::train;
  std::string clear_path;
  std::optional<std::string> foggy_path;
  std::string depth_path;
  std::optional<FogParams> fog;
  std::uint64_t seed = 0;
};

struct DatasetConfig {
  int width = 64;
  int height = 32;
  int source_pairs = 256;
  int target_train = 256;
  int target_heldout = 64;
  // 0.3 - 1.5 attenuation lengths over the 10 m scene depth.
  double beta_min = 0.03;
  double beta_max = 0.15;
  double airlight_min = 0.7;
  double airlight_max = 0.95;
  double far_plane = 10.0;
  int objects_min = 2;
  int objects_max = 6;
  double target_depth_noise = 0.0;  // multiplicative, target train entries only
  std::uint64_t seed = 7;

  void validate() const;

  std::string to_json() const;
  //! Keys missing from the document keep their current values; unknown keys
  //! throw ConfigError.
  void merge_json(const std::string& text);
};

struct DatasetManifest {
  std::string version = kManifestVersion;
  std::filesystem::path root;  // directory holding manifest.json
  int width = 0;
  int height = 0;
  DepthQuantization depth_quantization;
  DatasetConfig config;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::string& rel) const { return root / rel; }

  std::vector<const ManifestEntry*> select(SceneStyle style, Split split) const;

  Image load_clear(const ManifestEntry& e) const;
  Image load_foggy(const ManifestEntry& e) const;
  DepthMap load_depth(const ManifestEntry& e) const;
};

//! Writes PNG assets and manifest.json under out_dir. Assets are pure
//! functions of the config: foggy renders use the already-quantised clear
//! image and depth, so stored B' is exactly reproducible from stored inputs.
DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

//! Parses and validates a manifest; every referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace analogic

#endif  // ANALOGIC_DATASET_HPP

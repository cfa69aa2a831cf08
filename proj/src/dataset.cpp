// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include "analogic/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "json.hpp"

namespace analogic {

using nlohmann::json;

std::string to_string(Split s) { return s == Split::train ? "train" : "heldout_oracle"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "heldout_oracle") return Split::heldout_oracle;
  throw ConfigError("unknown split '" + s + "'");
}

void DatasetConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("dataset image size must be positive");
  if (source_pairs < 0 || target_train < 0 || target_heldout < 0)
    throw ConfigError("dataset counts must be non-negative");
  if (!(beta_min > 0.0) || beta_max < beta_min) throw ConfigError("invalid beta range");
  if (!(airlight_min >= 0.0) || airlight_max > 1.0 || airlight_max < airlight_min)
    throw ConfigError("invalid airlight range");
  if (!(far_plane > kNearPlane)) throw ConfigError("far plane must exceed 0.1 m");
  if (objects_min < 0 || objects_max < objects_min) throw ConfigError("invalid object range");
  if (target_depth_noise < 0.0) throw ConfigError("depth noise must be non-negative");
}

std::vector<const ManifestEntry*> DatasetManifest::select(SceneStyle style, Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.style == style && e.split == split) out.push_back(&e);
  return out;
}

Image DatasetManifest::load_clear(const ManifestEntry& e) const {
  return read_png_rgb(resolve(e.clear_path));
}

Image DatasetManifest::load_foggy(const ManifestEntry& e) const {
  if (!e.foggy_path) throw ConfigError("entry '" + e.id + "' has no foggy image");
  return read_png_rgb(resolve(*e.foggy_path));
}

DepthMap DatasetManifest::load_depth(const ManifestEntry& e) const {
  return read_png_depth(resolve(e.depth_path), depth_quantization);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t entry_seed(std::uint64_t base, std::uint64_t group, std::uint64_t index) {
  return splitmix64(splitmix64(base ^ (group << 56)) + index);
}

std::string padded(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return buf;
}

json config_to_json(const DatasetConfig& c) {
  return json{{"width", c.width},
              {"height", c.height},
              {"source_pairs", c.source_pairs},
              {"target_train", c.target_train},
              {"target_heldout", c.target_heldout},
              {"beta_min", c.beta_min},
              {"beta_max", c.beta_max},
              {"airlight_min", c.airlight_min},
              {"airlight_max", c.airlight_max},
              {"far_plane", c.far_plane},
              {"objects_min", c.objects_min},
              {"objects_max", c.objects_max},
              {"target_depth_noise", c.target_depth_noise},
              {"seed", c.seed}};
}

DatasetConfig config_from_json(const json& j) {
  DatasetConfig c;
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.source_pairs = j.at("source_pairs").get<int>();
  c.target_train = j.at("target_train").get<int>();
  c.target_heldout = j.at("target_heldout").get<int>();
  c.beta_min = j.at("beta_min").get<double>();
  c.beta_max = j.at("beta_max").get<double>();
  c.airlight_min = j.at("airlight_min").get<double>();
  c.airlight_max = j.at("airlight_max").get<double>();
  c.far_plane = j.at("far_plane").get<double>();
  c.objects_min = j.at("objects_min").get<int>();
  c.objects_max = j.at("objects_max").get<int>();
  c.target_depth_noise = j.at("target_depth_noise").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string DatasetConfig::to_json() const { return config_to_json(*this).dump(2); }

void DatasetConfig::merge_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed dataset config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("dataset config must be a JSON object");
  json merged = config_to_json(*this);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!merged.contains(it.key())) throw ConfigError("unknown key '" + it.key() + "' in dataset config");
    merged[it.key()] = it.value();
  }
  try {
    *this = config_from_json(merged);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid dataset config value: ") + e.what());
  }
}

DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"source", "target", "heldout"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw IoError("cannot create '" + (out_dir / sub).string() + "': " + ec.message());
  }

  DatasetManifest m;
  m.root = out_dir;
  m.width = cfg.width;
  m.height = cfg.height;
  m.depth_quantization = DepthQuantization{kNearPlane, cfg.far_plane, 16};
  m.config = cfg;

  struct Group {
    const char* dir;
    const char* prefix;
    SceneStyle style;
    Split split;
    int count;
    bool foggy;
  };
  const Group groups[] = {
      {"source", "src", SceneStyle::source, Split::train, cfg.source_pairs, true},
      {"target", "tgt", SceneStyle::target, Split::train, cfg.target_train, false},
      {"heldout", "held", SceneStyle::target, Split::heldout_oracle, cfg.target_heldout, true},
  };

  std::uint64_t group_index = 0;
  for (const auto& g : groups) {
    ++group_index;
    for (int i = 0; i < g.count; ++i) {
      ManifestEntry e;
      e.id = std::string(g.prefix) + "-" + padded(i);
      e.style = g.style;
      e.split = g.split;
      e.seed = entry_seed(cfg.seed, group_index, static_cast<std::uint64_t>(i));

      std::mt19937_64 rng(splitmix64(e.seed));
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      SceneSpec spec;
      spec.seed = e.seed;
      spec.width = cfg.width;
      spec.height = cfg.height;
      spec.style = g.style;
      spec.far_plane = cfg.far_plane;
      spec.object_count =
          cfg.objects_min + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                         cfg.objects_max - cfg.objects_min + 1));
      Scene scene = generate_scene(spec);
      const Image clear = quantize8(scene.image);
      DepthMap depth = quantize_depth(scene.depth, m.depth_quantization);

      const std::string stem = std::string(g.dir) + "/" + e.id;
      e.clear_path = stem + "_clear.png";
      e.depth_path = stem + "_depth.png";
      write_png_rgb(out_dir / e.clear_path, clear);

      if (g.foggy) {
        FogParams p;
        p.beta = cfg.beta_min + (cfg.beta_max - cfg.beta_min) * u01(rng);
        const double a = cfg.airlight_min + (cfg.airlight_max - cfg.airlight_min) * u01(rng);
        p.airlight = {a, a, a};
        e.fog = p;
        e.foggy_path = stem + "_foggy.png";
        write_png_rgb(out_dir / *e.foggy_path, render_fog(clear, depth, p));
      } else if (cfg.target_depth_noise > 0.0) {
        std::normal_distribution<double> n(0.0, cfg.target_depth_noise);
        for (Index k = 0; k < depth.data().rows(); ++k)
          depth.data()(k, 0) = std::clamp(depth.data()(k, 0) * (1.0 + n(rng)), kNearPlane, cfg.far_plane);
      }
      write_png_depth(out_dir / e.depth_path, depth, m.depth_quantization);
      m.entries.push_back(std::move(e));
    }
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json j{{"id", e.id},
           {"style", to_string(e.style)},
           {"split", to_string(e.split)},
           {"clear_path", e.clear_path},
           {"depth_path", e.depth_path},
           {"seed", e.seed}};
    j["foggy_path"] = e.foggy_path ? json(*e.foggy_path) : json(nullptr);
    j["fog_params"] = e.fog ? json{{"beta", e.fog->beta}, {"airlight", e.fog->airlight}} : json(nullptr);
    entries.push_back(std::move(j));
  }
  json doc{{"version", m.version},
           {"width", m.width},
           {"height", m.height},
           {"depth_quantization",
            {{"bits", m.depth_quantization.bits},
             {"near", m.depth_quantization.near},
             {"far", m.depth_quantization.far},
             {"encoding", "linear, value = near + (far - near) * q / 65535"}}},
           {"config", config_to_json(m.config)},
           {"entries", std::move(entries)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
  DatasetManifest m;
  try {
    m.version = doc.at("version").get<std::string>();
    if (m.version != kManifestVersion)
      throw ArtifactMismatch("unsupported manifest version '" + m.version + "'");
    m.root = path.parent_path();
    m.width = doc.at("width").get<int>();
    m.height = doc.at("height").get<int>();
    const auto& q = doc.at("depth_quantization");
    m.depth_quantization = DepthQuantization{q.at("near").get<double>(), q.at("far").get<double>(),
                                             q.at("bits").get<int>()};
    m.config = config_from_json(doc.at("config"));
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.style = style_from_string(j.at("style").get<std::string>());
      e.split = split_from_string(j.at("split").get<std::string>());
      e.clear_path = j.at("clear_path").get<std::string>();
      e.depth_path = j.at("depth_path").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      if (!j.at("foggy_path").is_null()) e.foggy_path = j.at("foggy_path").get<std::string>();
      if (!j.at("fog_params").is_null()) {
        FogParams p;
        p.beta = j["fog_params"].at("beta").get<double>();
        p.airlight = j["fog_params"].at("airlight").get<std::array<double, 3>>();
        e.fog = p;
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
  for (const auto& e : m.entries) {
    for (const std::string* rel : {&e.clear_path, &e.depth_path})
      if (!std::filesystem::exists(m.resolve(*rel)))
        throw IoError("manifest entry '" + e.id + "' references missing file '" +
                      m.resolve(*rel).string() + "'");
    if (e.foggy_path && !std::filesystem::exists(m.resolve(*e.foggy_path)))
      throw IoError("manifest entry '" + e.id + "' references missing file '" +
                    m.resolve(*e.foggy_path).string() + "'");
    if (e.split == Split::heldout_oracle && (!e.foggy_path || !e.fog))
      throw ArtifactMismatch("held-out entry '" + e.id + "' lacks ground-truth fog");
  }
  return m;
}

}  // namespace analogic

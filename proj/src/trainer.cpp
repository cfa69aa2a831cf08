// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include "analogic/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "analogic/checkpoint.hpp"
#include "json.hpp"

namespace analogic {

using nlohmann::json;

void AblationFlags::disable(const std::string& csv) {
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t") + 1);
    if (name.empty()) continue;
    if (name == "gist_adv")
      use_gist_adv = false;
    else if (name == "cyc")
      use_cyc = false;
    else if (name == "percep")
      use_percep = false;
    else if (name == "dep")
      use_dep = false;
    else if (name == "sup")
      use_sup = false;
    else
      throw ConfigError("unknown ablation '" + name +
                        "' (expected gist_adv, cyc, percep, dep or sup)");
  }
}

std::string to_string(ad::GanForm f) { return f == ad::GanForm::log ? "log" : "least_squares"; }

ad::GanForm gan_form_from_string(const std::string& s) {
  if (s == "log") return ad::GanForm::log;
  if (s == "least_squares") return ad::GanForm::least_squares;
  throw ConfigError("unknown gan_form '" + s + "'");
}

std::string to_string(FeatureKind k) { return k == FeatureKind::identity ? "identity" : "random_conv"; }

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "random_conv") return FeatureKind::random_conv;
  if (s == "identity") return FeatureKind::identity;
  throw ConfigError("unknown perceptual feature map '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("optimizer betas must lie in [0, 1)");
  if (steps <= 0) throw ConfigError("steps must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
  weights.validate();
  resolved_arch().validate();
}

LossWeights TrainConfig::effective_weights() const {
  LossWeights w = weights;
  if (!ablation.use_gist_adv) w.gist_adv = 0;
  if (!ablation.use_cyc) w.rec = w.cyc_adv = 0;
  if (!ablation.use_percep) w.percep = 0;
  if (!ablation.use_dep) w.dep = 0;
  if (!ablation.use_sup) w.sup = 0;
  return w;
}

ArchConfig TrainConfig::resolved_arch() const {
  ArchConfig a = arch;
  a.width = width;
  a.height = height;
  a.seed = seed;
  return a;
}

namespace {

json weights_json(const LossWeights& w) {
  return json{{"gist_adv", w.gist_adv}, {"cyc_adv", w.cyc_adv}, {"sup", w.sup},
              {"rec", w.rec},           {"dep", w.dep},         {"percep", w.percep}};
}

json config_json(const TrainConfig& c) {
  const ArchConfig& a = c.arch;
  return json{
      {"learning_rate", c.learning_rate},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"batch_size", c.batch_size},
      {"steps", c.steps},
      {"width", c.width},
      {"height", c.height},
      {"weights", weights_json(c.weights)},
      {"seed", c.seed},
      {"ablation",
       {{"use_gist_adv", c.ablation.use_gist_adv},
        {"use_cyc", c.ablation.use_cyc},
        {"use_percep", c.ablation.use_percep},
        {"use_dep", c.ablation.use_dep},
        {"use_sup", c.ablation.use_sup}}},
      {"effective_weights", weights_json(c.effective_weights())},
      {"checkpoint_interval", c.checkpoint_interval},
      {"gan_form", to_string(c.gan_form)},
      {"deterministic", c.deterministic},
      {"perceptual", to_string(c.perceptual)},
      {"arch",
       {{"base_width", a.base_width},
        {"n_down", a.n_down},
        {"n_res", a.n_res},
        {"stem_kernel", a.stem_kernel},
        {"head_kernel", a.head_kernel},
        {"disc_width", a.disc_width},
        {"disc_layers", a.disc_layers},
        {"disc_kernel", a.disc_kernel},
        {"init_std", a.init_std}}}};
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

std::string TrainConfig::to_json() const { return config_json(*this).dump(2); }

void TrainConfig::merge_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  try {
    reject_unknown(j,
                   {"learning_rate", "beta1", "beta2", "batch_size", "steps", "width", "height",
                    "weights", "seed", "ablation", "effective_weights", "checkpoint_interval",
                    "gan_form", "deterministic", "perceptual", "arch"},
                   "training config");
    take(j, "learning_rate", learning_rate);
    take(j, "beta1", beta1);
    take(j, "beta2", beta2);
    take(j, "batch_size", batch_size);
    take(j, "steps", steps);
    take(j, "width", width);
    take(j, "height", height);
    take(j, "seed", seed);
    take(j, "checkpoint_interval", checkpoint_interval);
    take(j, "deterministic", deterministic);
    if (j.contains("gan_form")) gan_form = gan_form_from_string(j["gan_form"].get<std::string>());
    if (j.contains("perceptual"))
      perceptual = feature_kind_from_string(j["perceptual"].get<std::string>());
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      reject_unknown(w, {"gist_adv", "cyc_adv", "sup", "rec", "dep", "percep"}, "weights");
      take(w, "gist_adv", weights.gist_adv);
      take(w, "cyc_adv", weights.cyc_adv);
      take(w, "sup", weights.sup);
      take(w, "rec", weights.rec);
      take(w, "dep", weights.dep);
      take(w, "percep", weights.percep);
    }
    if (j.contains("ablation")) {
      const auto& a = j["ablation"];
      reject_unknown(a, {"use_gist_adv", "use_cyc", "use_percep", "use_dep", "use_sup"}, "ablation");
      take(a, "use_gist_adv", ablation.use_gist_adv);
      take(a, "use_cyc", ablation.use_cyc);
      take(a, "use_percep", ablation.use_percep);
      take(a, "use_dep", ablation.use_dep);
      take(a, "use_sup", ablation.use_sup);
    }
    if (j.contains("arch")) {
      const auto& a = j["arch"];
      reject_unknown(a,
                     {"base_width", "n_down", "n_res", "stem_kernel", "head_kernel", "disc_width",
                      "disc_layers", "disc_kernel", "init_std"},
                     "arch");
      take(a, "base_width", arch.base_width);
      take(a, "n_down", arch.n_down);
      take(a, "n_res", arch.n_res);
      take(a, "stem_kernel", arch.stem_kernel);
      take(a, "head_kernel", arch.head_kernel);
      take(a, "disc_width", arch.disc_width);
      take(a, "disc_layers", arch.disc_layers);
      take(a, "disc_kernel", arch.disc_kernel);
      take(a, "init_std", arch.init_std);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid training config value: ") + e.what());
  }
}

std::string MetricsRecord::to_json(bool include_time) const {
  json j{{"step", step},
         {"losses", losses},
         {"grad_norm_gen", grad_norm_gen},
         {"grad_norm_disc", grad_norm_disc},
         {"source_ids", source_ids},
         {"target_ids", target_ids}};
  if (include_time) j["wall_clock"] = wall_clock;
  return j.dump();
}

MetricsRecord MetricsRecord::from_json(const std::string& line) {
  const json j = json::parse(line);
  MetricsRecord r;
  r.step = j.at("step").get<long>();
  r.losses = j.at("losses").get<std::map<std::string, double>>();
  r.grad_norm_gen = j.at("grad_norm_gen").get<double>();
  r.grad_norm_disc = j.at("grad_norm_disc").get<double>();
  r.source_ids = j.at("source_ids").get<std::vector<std::string>>();
  r.target_ids = j.at("target_ids").get<std::vector<std::string>>();
  if (j.contains("wall_clock")) r.wall_clock = j["wall_clock"].get<double>();
  return r;
}

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics log '" + path.string() + "'");
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(MetricsRecord::from_json(line));
    } catch (const json::exception& e) {
      throw IoError("malformed metrics line in '" + path.string() + "': " + e.what());
    }
  }
  return out;
}

TrainingData<float> load_training_data(const DatasetManifest& manifest) {
  const auto src = manifest.select(SceneStyle::source, Split::train);
  const auto tgt = manifest.select(SceneStyle::target, Split::train);
  if (src.empty()) throw ConfigError("manifest has no source training pairs");
  if (tgt.empty()) throw ConfigError("manifest has no target training images");
  const double far = manifest.depth_quantization.far;

  TrainingData<float> d;
  for (const ManifestEntry* e : src) {
    if (!e->foggy_path) throw ArtifactMismatch("source entry '" + e->id + "' has no foggy image");
    d.source_ids.push_back(e->id);
    d.source_clear.push_back(manifest.load_clear(*e).cast<float>());
    d.source_foggy.push_back(manifest.load_foggy(*e).cast<float>());
    DepthMap depth = manifest.load_depth(*e);
    depth.array() /= far;
    d.source_depth.push_back(depth.cast<float>());
  }
  for (const ManifestEntry* e : tgt) {
    d.target_ids.push_back(e->id);
    d.target_clear.push_back(manifest.load_clear(*e).cast<float>());
    DepthMap depth = manifest.load_depth(*e);
    depth.array() /= far;
    d.target_depth.push_back(depth.cast<float>());
  }
  return d;
}

namespace {

std::vector<Index> epoch_permutation(std::uint64_t seed, long epoch, std::uint64_t stream, Index n) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace

BatchIndices batch_indices(std::uint64_t seed, long step, int batch_size, Index n_source,
                           Index n_target) {
  const Index epoch_len = std::min(n_source, n_target);
  if (epoch_len <= 0) throw ConfigError("cannot batch from an empty split");
  BatchIndices b;
  long cached_epoch = -1;
  std::vector<Index> ps, pt;
  for (int i = 0; i < batch_size; ++i) {
    const long global = step * batch_size + i;
    const long epoch = global / epoch_len;
    const Index pos = static_cast<Index>(global % epoch_len);
    if (epoch != cached_epoch) {
      ps = epoch_permutation(seed, epoch, 1, n_source);
      pt = epoch_permutation(seed, epoch, 2, n_target);
      cached_epoch = epoch;
    }
    b.source.push_back(ps[static_cast<std::size_t>(pos)]);
    b.target.push_back(pt[static_cast<std::size_t>(pos)]);
  }
  return b;
}

void for_each_chunk(Index total, Index n, const std::function<void(Index, Index)>& f) {
  for (Index first = 0; first < total; first += n) f(first, std::min(n, total - first));
}

Tensor<float> translate_images(const ModelState<float>& model, const std::vector<Image>& images,
                               Domainness z) {
  std::vector<Tensor<float>> parts;
  for_each_chunk(static_cast<Index>(images.size()), 16, [&](Index first, Index count) {
    std::vector<Tensor<float>> in;
    for (Index i = first; i < first + count; ++i)
      in.push_back(images[static_cast<std::size_t>(i)].cast<float>());
    const Tensor<float> out = translate(model, stack_batch(in), z);
    for (Index i = 0; i < count; ++i) parts.push_back(slice_batch(out, i));
  });
  return stack_batch(parts);
}

namespace {

void truncate_metrics(const std::filesystem::path& path, long keep_through) {
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> kept;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (json::parse(line).at("step").get<long>() <= keep_through) kept.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : kept) out << l << "\n";
  if (!out) throw IoError("cannot rewrite '" + path.string() + "'");
}

void tune_allocator() {
#if defined(__GLIBC__)
  // The autograd tape allocates and frees many megabyte-sized buffers per
  // step. Keeping them on the heap avoids repeated mmap/page-fault cycles.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace

std::filesystem::path train(const DatasetManifest& manifest, const TrainConfig& cfg,
                            const std::filesystem::path& out_dir, const TrainOptions& opts) {
  cfg.validate();
  if (manifest.select(SceneStyle::source, Split::train).empty())
    throw ConfigError("manifest has no source training pairs");
  if (manifest.select(SceneStyle::target, Split::train).empty())
    throw ConfigError("manifest has no target training images");
  if (manifest.width != cfg.width || manifest.height != cfg.height)
    throw ConfigError("manifest images are " + std::to_string(manifest.width) + "x" +
                      std::to_string(manifest.height) + " but the config asks for " +
                      std::to_string(cfg.width) + "x" + std::to_string(cfg.height));

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  tune_allocator();

  const ArchConfig arch = cfg.resolved_arch();
  ModelState<float> model;
  if (opts.resume) {
    model = load_checkpoint<float>(*opts.resume);
    if (arch_to_json(model.arch) != arch_to_json(arch))
      throw ArtifactMismatch("checkpoint architecture does not match the training config");
    if (model.step > cfg.steps)
      throw ConfigError("checkpoint is already past the requested step count");
  } else {
    model = build_model<float>(arch, cfg.adam());
  }
  model.config_json = config_json(cfg).dump();

  const TrainingData<float> data = load_training_data(manifest);
  const FeatureExtractor<float> phi(cfg.perceptual);
  const LossWeights w = cfg.effective_weights();

  const fs::path metrics_path = out_dir / "metrics.jsonl";
  const fs::path timing_path = out_dir / "timing.jsonl";
  if (opts.resume) {
    truncate_metrics(metrics_path, model.step);
    truncate_metrics(timing_path, model.step);
  } else {
    fs::remove(metrics_path, ec);
    fs::remove(timing_path, ec);
  }
  std::ofstream metrics(metrics_path, std::ios::app);
  if (!metrics) throw IoError("cannot open '" + metrics_path.string() + "'");
  std::ofstream timing;
  if (cfg.deterministic) {
    timing.open(timing_path, std::ios::app);
    if (!timing) throw IoError("cannot open '" + timing_path.string() + "'");
  }

  const auto start = std::chrono::steady_clock::now();
  const Index n_src = static_cast<Index>(data.source_clear.size());
  const Index n_tgt = static_cast<Index>(data.target_clear.size());
  fs::path last;
  while (model.step < cfg.steps) {
    const BatchIndices idx = batch_indices(cfg.seed, model.step, cfg.batch_size, n_src, n_tgt);
    const Batch<float> batch = make_batch(data, idx);
    MetricsRecord rec = train_step(model, batch, w, phi, cfg.gan_form);
    rec.wall_clock =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (Index i : idx.source) rec.source_ids.push_back(data.source_ids[static_cast<std::size_t>(i)]);
    for (Index i : idx.target) rec.target_ids.push_back(data.target_ids[static_cast<std::size_t>(i)]);

    metrics << rec.to_json(!cfg.deterministic) << "\n";
    if (cfg.deterministic)
      timing << json{{"step", rec.step}, {"wall_clock", rec.wall_clock}}.dump() << "\n";
    if (!metrics) throw IoError("failed writing '" + metrics_path.string() + "'");
    if (opts.on_step) opts.on_step(rec);

    const bool periodic = cfg.checkpoint_interval > 0 && model.step % cfg.checkpoint_interval == 0;
    if (periodic || model.step == cfg.steps) {
      metrics.flush();
      last = out_dir / checkpoint_name(model.step);
      save_checkpoint(model, last);
    }
  }
  if (last.empty()) {
    last = out_dir / checkpoint_name(model.step);
    save_checkpoint(model, last);
  }
  return last;
}

}  // namespace analogic

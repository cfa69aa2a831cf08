// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include "analogic/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "analogic/checkpoint.hpp"
#include "analogic/evaluate.hpp"
#include "analogic/gradcheck.hpp"
#include "analogic/trainer.hpp"
#include "json.hpp"

namespace analogic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kSections{"gen-data", "train",    "translate",
                                      "interpolate", "evaluate", "gradcheck"};

// Returns the subcommand's section of the config file (empty object when no
// file was given or the section is absent).
json config_section(const std::string& path, const std::string& section) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config file '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!kSections.count(it.key()))
      throw ConfigError("unknown section '" + it.key() + "' in config file");
  if (!doc.contains(section)) return json::object();
  if (!doc[section].is_object()) throw ConfigError("section '" + section + "' must be an object");
  return doc[section];
}

// Overlays a flat config section onto defaults, rejecting unknown keys and
// type changes.
json merge_flat(json defaults, const json& section, const std::string& where) {
  for (auto it = section.begin(); it != section.end(); ++it) {
    if (!defaults.contains(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where + " config");
    const json& d = defaults[it.key()];
    const bool both_numbers = d.is_number() && it.value().is_number();
    if (!both_numbers && d.type() != it.value().type() && !d.is_null())
      throw ConfigError("key '" + it.key() + "' in " + where + " config has the wrong type");
    defaults[it.key()] = it.value();
  }
  return defaults;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (text.empty() || text.back() != '\n') out << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void echo_config(const fs::path& dir, const json& resolved) {
  write_text(dir / "config.resolved.json", resolved.dump(2));
}

std::pair<int, int> parse_size(const std::string& s) {
  static const std::regex re(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ConfigError("size must look like WxH, got '" + s + "'");
  return {std::stoi(m[1]), std::stoi(m[2])};
}

std::string size_string(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

// Checks an image size against the default generator's downsampling factor
// so that invalid sizes are rejected before any data is written.
void require_trainable_size(int w, int h, const ArchConfig& arch) {
  ArchConfig a = arch;
  a.width = w;
  a.height = h;
  a.validate();
}

template <typename T>
void flag_override(const CLI::Option* opt, const T& value, T& dst) {
  if (opt->count() > 0) dst = value;
}

std::vector<fs::path> list_pngs(const fs::path& input) {
  std::vector<fs::path> out;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
  } else if (fs::exists(input)) {
    out.push_back(input);
  }
  if (out.empty()) throw IoError("no PNG images found at '" + input.string() + "'");
  return out;
}

std::string z_tag(double z) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << z;
  return ss.str();
}

// gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::string out, size, config;
  int source_pairs = 0, target = 0, heldout = 0;
  std::uint64_t seed = 0;
  double beta_min = 0, beta_max = 0, airlight_min = 0, airlight_max = 0, far_plane = 0, depth_noise = 0;
  CLI::Option *o_size, *o_src, *o_tgt, *o_held, *o_seed, *o_bmin, *o_bmax, *o_amin, *o_amax,
      *o_far, *o_noise;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  DatasetConfig cfg;
  const json section = config_section(a.config, "gen-data");
  if (section.contains("size")) {
    auto [w, h] = parse_size(section["size"].get<std::string>());
    cfg.width = w;
    cfg.height = h;
  }
  json rest = section;
  rest.erase("size");
  cfg.merge_json(rest.dump());
  if (a.o_size->count()) std::tie(cfg.width, cfg.height) = parse_size(a.size);
  flag_override(a.o_src, a.source_pairs, cfg.source_pairs);
  flag_override(a.o_tgt, a.target, cfg.target_train);
  flag_override(a.o_held, a.heldout, cfg.target_heldout);
  flag_override(a.o_seed, a.seed, cfg.seed);
  flag_override(a.o_bmin, a.beta_min, cfg.beta_min);
  flag_override(a.o_bmax, a.beta_max, cfg.beta_max);
  flag_override(a.o_amin, a.airlight_min, cfg.airlight_min);
  flag_override(a.o_amax, a.airlight_max, cfg.airlight_max);
  flag_override(a.o_far, a.far_plane, cfg.far_plane);
  flag_override(a.o_noise, a.depth_noise, cfg.target_depth_noise);
  cfg.validate();
  require_trainable_size(cfg.width, cfg.height, ArchConfig{});

  const fs::path dir = a.out;
  ensure_dir(dir);
  const DatasetManifest m = build_dataset(cfg, dir);
  echo_config(dir, json::parse(cfg.to_json()));
  out << "manifest " << (dir / "manifest.json").string() << "\n"
      << "entries " << m.entries.size() << " (source " << cfg.source_pairs << ", target "
      << cfg.target_train << ", heldout " << cfg.target_heldout << ")\n";
  return kExitOk;
}

// train --------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, config, ablate, gan_form, resume, size;
  long steps = 0, checkpoint_interval = 0;
  int batch_size = 0;
  double lr = 0;
  std::uint64_t seed = 0;
  bool fast = false;
  double w_gist_adv = 0, w_cyc_adv = 0, w_sup = 0, w_rec = 0, w_dep = 0, w_percep = 0;
  CLI::Option *o_steps, *o_ckpt, *o_bs, *o_lr, *o_seed, *o_ablate, *o_gan, *o_fast, *o_size,
      *o_wg, *o_wc, *o_ws, *o_wr, *o_wd, *o_wp;
};

TrainConfig resolve_train(const TrainArgs& a, const DatasetManifest& m) {
  TrainConfig cfg;
  cfg.width = m.width;
  cfg.height = m.height;
  cfg.merge_json(config_section(a.config, "train").dump());
  flag_override(a.o_steps, a.steps, cfg.steps);
  flag_override(a.o_ckpt, a.checkpoint_interval, cfg.checkpoint_interval);
  flag_override(a.o_bs, a.batch_size, cfg.batch_size);
  flag_override(a.o_lr, a.lr, cfg.learning_rate);
  flag_override(a.o_seed, a.seed, cfg.seed);
  flag_override(a.o_wg, a.w_gist_adv, cfg.weights.gist_adv);
  flag_override(a.o_wc, a.w_cyc_adv, cfg.weights.cyc_adv);
  flag_override(a.o_ws, a.w_sup, cfg.weights.sup);
  flag_override(a.o_wr, a.w_rec, cfg.weights.rec);
  flag_override(a.o_wd, a.w_dep, cfg.weights.dep);
  flag_override(a.o_wp, a.w_percep, cfg.weights.percep);
  if (a.o_gan->count()) cfg.gan_form = gan_form_from_string(a.gan_form);
  if (a.o_fast->count()) cfg.deterministic = !a.fast;
  if (a.o_size->count()) std::tie(cfg.width, cfg.height) = parse_size(a.size);
  if (a.o_ablate->count()) cfg.ablation.disable(a.ablate);
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const DatasetManifest m = load_manifest(a.data);
  const TrainConfig cfg = resolve_train(a, m);
  const fs::path dir = a.out;
  ensure_dir(dir);
  json resolved = json::parse(cfg.to_json());
  resolved["data"] = a.data;
  echo_config(dir, resolved);

  TrainOptions opts;
  if (!a.resume.empty()) opts.resume = fs::path(a.resume);
  const long report_every = std::max<long>(1, cfg.steps / 20);
  opts.on_step = [&](const MetricsRecord& r) {
    if (r.step % report_every == 0 || r.step == cfg.steps)
      out << "step " << r.step << "/" << cfg.steps << " gen_total " << r.losses.at("gen_total")
          << " disc_total " << r.losses.at("disc_total") << " (" << std::fixed
          << std::setprecision(1) << r.wall_clock << " s)" << std::defaultfloat
          << std::setprecision(6) << "\n"
          << std::flush;
  };
  const fs::path ckpt = train(m, cfg, dir, opts);
  out << "checkpoint " << ckpt.string() << "\n"
      << "metrics " << (dir / "metrics.jsonl").string() << "\n";
  return kExitOk;
}

// translate / interpolate ----------------------------------------------------

struct TranslateArgs {
  std::string checkpoint, input, out, config;
  double z = kDomainnessSynscapes;
  CLI::Option* o_z;
};

int cmd_translate(const TranslateArgs& a, std::ostream& out) {
  json r = merge_flat(json{{"z", kDomainnessSynscapes}}, config_section(a.config, "translate"),
                      "translate");
  if (a.o_z->count()) r["z"] = a.z;
  const Domainness z(r["z"].get<double>());
  const ModelState<float> model = load_checkpoint<float>(a.checkpoint);
  std::vector<fs::path> inputs;
  std::vector<std::string> skipped;
  std::vector<Image> images;
  const bool whole_dir = fs::is_directory(a.input);
  for (const auto& p : list_pngs(a.input)) {
    try {
      images.push_back(read_png_rgb(p));
      inputs.push_back(p);
    } catch (const IoError&) {
      // dataset directories also hold 16-bit depth maps
      if (!whole_dir) throw;
      skipped.push_back(p.string());
    }
  }
  if (images.empty()) throw IoError("no 8-bit RGB images found at '" + a.input + "'");

  const fs::path dir = a.out;
  ensure_dir(dir);
  r["checkpoint"] = a.checkpoint;
  r["input"] = a.input;
  echo_config(dir, r);
  const Tensor<float> result = translate_images(model, images, z);
  json listing = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path dst = dir / (inputs[i].stem().string() + "_z" + z_tag(z.value()) + ".png");
    write_png_rgb(dst, slice_batch(result, Index(i)).cast<double>());
    listing.push_back({{"input", inputs[i].string()}, {"output", dst.string()}});
  }
  write_text(dir / "translations.json",
             json{{"z", z.value()}, {"images", listing}, {"skipped", skipped}}.dump(2));
  out << "translated " << inputs.size() << " image(s) at z = " << z.value() << " into "
      << dir.string() << "\n";
  if (!skipped.empty()) out << "skipped " << skipped.size() << " non-RGB PNG(s)\n";
  return kExitOk;
}

struct InterpolateArgs {
  std::string checkpoint, input, out, config;
  int z_steps = 11;
  CLI::Option* o_steps;
};

int cmd_interpolate(const InterpolateArgs& a, std::ostream& out) {
  json r = merge_flat(json{{"z_steps", 11}}, config_section(a.config, "interpolate"), "interpolate");
  if (a.o_steps->count()) r["z_steps"] = a.z_steps;
  const int n = r["z_steps"].get<int>();
  if (n < 2) throw ConfigError("z_steps must be at least 2");
  const ModelState<float> model = load_checkpoint<float>(a.checkpoint);
  const Image image = read_png_rgb(a.input);
  if (image.height() != model.arch.height || image.width() != model.arch.width)
    throw ConfigError("image is " + size_string(int(image.width()), int(image.height())) +
                      " but the checkpoint expects " +
                      size_string(model.arch.width, model.arch.height));

  std::vector<double> zs;
  for (int i = 0; i < n; ++i) zs.push_back(static_cast<double>(i) / (n - 1));
  const Gist<float> gf = model.gen_forward.forward_gist(image.cast<float>());
  const Gist<double> g{gf.alignment.cast<double>(), gf.residual.cast<double>()};
  const std::vector<double> curve = sweep_interpolation(g, image, zs);

  const fs::path dir = a.out;
  ensure_dir(dir);
  r["checkpoint"] = a.checkpoint;
  r["input"] = a.input;
  echo_config(dir, r);
  std::vector<Image> frames;
  std::ostringstream csv;
  csv << "z,fog_effect\n" << std::setprecision(17);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    Image f = interpolate_domain(image, g, Domainness(zs[i]));
    f.array() = f.array().max(0.0).min(1.0);
    frames.push_back(f);
    csv << zs[i] << "," << curve[i] << "\n";
  }
  write_png_rgb(dir / "filmstrip.png", hconcat(frames));
  write_text(dir / "fog_effect.csv", csv.str());
  out << "filmstrip " << (dir / "filmstrip.png").string() << "\n"
      << "curve " << (dir / "fog_effect.csv").string() << "\n";
  return kExitOk;
}

// evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  std::string checkpoint, data, out, config, z, metrics;
  bool sheets = false;
  CLI::Option *o_z, *o_sheets;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  // z is a number or the string "calibrate", so its default carries no type.
  json r = merge_flat(json{{"z", nullptr}, {"contact_sheets", false}},
                      config_section(a.config, "evaluate"), "evaluate");
  if (a.o_z->count()) r["z"] = a.z;
  if (r["z"].is_null()) r["z"] = kDomainnessSynscapes;
  if (a.o_sheets->count()) r["contact_sheets"] = a.sheets;
  const DatasetManifest m = load_manifest(a.data);
  const ModelState<float> model = load_checkpoint<float>(a.checkpoint);
  if (m.width != model.arch.width || m.height != model.arch.height)
    throw ArtifactMismatch("manifest images are " + size_string(m.width, m.height) +
                           " but the checkpoint was trained at " +
                           size_string(model.arch.width, model.arch.height));
  if (heldout_entries(m).empty()) throw ConfigError("manifest has no held-out entries");
  const GistProvider provider = model_gist_provider(model);

  const fs::path dir = a.out;
  ensure_dir(dir);
  ZeroShotOptions opts;
  fs::path log = a.metrics.empty() ? fs::path(a.checkpoint).parent_path() / "metrics.jsonl"
                                   : fs::path(a.metrics);
  if (fs::exists(log)) opts.metrics_log = log;
  else if (!a.metrics.empty()) throw IoError("metrics log '" + a.metrics + "' not found");
  if (r["contact_sheets"].get<bool>()) opts.contact_sheet_dir = dir / "sheets";

  const std::string zs = r["z"].is_string() ? r["z"].get<std::string>() : r["z"].dump();
  EvalReport report;
  if (zs == "calibrate") {
    const auto validation = heldout_entries(m, 0, kValidationSlice);
    const auto rest = heldout_entries(m, kValidationSlice);
    if (rest.empty()) throw ConfigError("calibration needs more than 16 held-out entries");
    const Calibration c = calibrate_z(provider, m, validation, default_z_grid());
    report = evaluate_zero_shot(provider, m, rest, Domainness(c.z), opts);
    report.z_source = "calibrated";
    report.notes.push_back("z chosen by minimising zero_shot_l1 on the first " +
                           std::to_string(kValidationSlice) +
                           " held-out entries (validation slice); metrics cover the remaining " +
                           std::to_string(rest.size()));
  } else {
    double z = 0;
    try {
      std::size_t used = 0;
      z = std::stod(zs, &used);
      if (used != zs.size()) throw std::invalid_argument(zs);
    } catch (const std::exception&) {
      throw ConfigError("--z must be a number in [0, 1] or 'calibrate', got '" + zs + "'");
    }
    report = evaluate_zero_shot(provider, m, heldout_entries(m), Domainness(z), opts);
    report.z_source = (z == kDomainnessCityscapes || z == kDomainnessSynscapes) ? "preset" : "given";
  }
  if (!opts.metrics_log) report.notes.push_back("no training log found; split audit skipped");
  else report.notes.push_back("split audit passed against " + opts.metrics_log->string());
  const auto src = m.select(SceneStyle::source, Split::train);
  if (!src.empty()) {
    const GistOracleScores s = evaluate_gist_oracle(provider, m, src);
    report.notes.push_back("source-split gist oracle: M mae " + std::to_string(s.gist_M_mae) +
                           ", N mae " + std::to_string(s.gist_N_mae));
  }

  r["checkpoint"] = a.checkpoint;
  r["data"] = a.data;
  echo_config(dir, r);
  write_text(dir / "report.json", report.to_json());
  out << kReproducibilityStatement << "\n"
      << "z " << report.z << " (" << report.z_source << ")\n"
      << "zero_shot_l1 " << report.zero_shot_l1 << "\n"
      << "baseline_l1 " << report.baseline_l1 << "\n"
      << "gist_M_mae " << report.gist_M_mae << "\n"
      << "gist_N_mae " << report.gist_N_mae << "\n"
      << "depth_corr " << report.depth_corr << "\n"
      << "report " << (dir / "report.json").string() << "\n";
  return kExitOk;
}

// gradcheck ----------------------------------------------------------------

struct GradcheckArgs {
  std::string loss, out, config;
  std::uint64_t seed = 1;
  CLI::Option *o_loss, *o_seed;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  json r = merge_flat(json{{"loss", "full"}, {"seed", 1}}, config_section(a.config, "gradcheck"),
                      "gradcheck");
  if (a.o_loss->count()) r["loss"] = a.loss;
  if (a.o_seed->count()) r["seed"] = a.seed;
  const std::string loss = r["loss"].get<std::string>();
  const auto seed = r["seed"].get<std::uint64_t>();
  std::vector<std::string> names = loss == "all" ? gradcheck_losses() : std::vector{loss};
  for (const auto& n : names) gradcheck_weights(n);  // validates before any work

  json results = json::array();
  bool ok = true;
  for (const auto& n : names) {
    const auto t0 = std::chrono::steady_clock::now();
    const GradcheckResult g = gradcheck(n, seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && g.passed();
    out << n << " max_rel_error " << g.max_rel_error << (g.passed() ? " PASS" : " FAIL") << " ("
        << g.parameters << " params, " << g.checked << " comparisons, worst " << g.worst << ")\n";
    results.push_back({{"loss", n},
                       {"max_rel_error", g.max_rel_error},
                       {"passed", g.passed()},
                       {"parameters", g.parameters},
                       {"comparisons", g.checked},
                       {"worst", g.worst},
                       {"worst_analytic", g.worst_analytic},
                       {"worst_numeric", g.worst_numeric},
                       {"seconds", secs}});
  }
  const fs::path dir = a.out;
  ensure_dir(dir);
  echo_config(dir, r);
  write_text(dir / "gradcheck.json",
             json{{"tolerance", kGradcheckTolerance}, {"step", kGradcheckStep}, {"results", results}}
                 .dump(2));
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"analogic: analogical image translation on a synthetic fog testbed"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "analogic 1.0.0");

  GenDataArgs g;
  auto* gd = app.add_subcommand("gen-data", "Render the synthetic dataset and its manifest");
  gd->add_option("--out", g.out, "Output directory")->required();
  gd->add_option("--config", g.config, "JSON config file");
  g.o_size = gd->add_option("--size", g.size, "Image size WxH (default 64x32)");
  g.o_src = gd->add_option("--source-pairs", g.source_pairs, "Clear/foggy source pairs");
  g.o_tgt = gd->add_option("--target", g.target, "Clear target training images");
  g.o_held = gd->add_option("--heldout", g.heldout, "Held-out target images with ground truth");
  g.o_seed = gd->add_option("--seed", g.seed, "Dataset seed");
  g.o_bmin = gd->add_option("--beta-min", g.beta_min, "Minimum attenuation (1/m)");
  g.o_bmax = gd->add_option("--beta-max", g.beta_max, "Maximum attenuation (1/m)");
  g.o_amin = gd->add_option("--airlight-min", g.airlight_min, "Minimum airlight");
  g.o_amax = gd->add_option("--airlight-max", g.airlight_max, "Maximum airlight");
  g.o_far = gd->add_option("--far-plane", g.far_plane, "Far plane (m)");
  g.o_noise = gd->add_option("--depth-noise", g.depth_noise,
                             "Relative noise on target training depth");

  TrainArgs t;
  auto* tr = app.add_subcommand("train", "Train the translator");
  tr->add_option("--data", t.data, "Dataset manifest")->required();
  tr->add_option("--out", t.out, "Run directory")->required();
  tr->add_option("--config", t.config, "JSON config file");
  tr->add_option("--resume", t.resume, "Checkpoint to resume from");
  t.o_steps = tr->add_option("--steps", t.steps, "Total optimiser steps");
  t.o_ckpt = tr->add_option("--checkpoint-interval", t.checkpoint_interval, "Steps between checkpoints");
  t.o_bs = tr->add_option("--batch-size", t.batch_size, "Samples per step");
  t.o_lr = tr->add_option("--lr", t.lr, "Learning rate");
  t.o_seed = tr->add_option("--seed", t.seed, "Initialisation and batching seed");
  t.o_ablate = tr->add_option("--ablate", t.ablate, "Comma list of gist_adv,cyc,percep,dep,sup");
  t.o_gan = tr->add_option("--gan-form", t.gan_form, "log or least_squares");
  t.o_fast = tr->add_flag("--fast", t.fast, "Write wall-clock into metrics.jsonl");
  t.o_size = tr->add_option("--size", t.size, "Image size WxH (must match the manifest)");
  t.o_wg = tr->add_option("--w-gist-adv", t.w_gist_adv, "Gist adversarial weight");
  t.o_wc = tr->add_option("--w-cyc-adv", t.w_cyc_adv, "Cycle adversarial weight");
  t.o_ws = tr->add_option("--w-sup", t.w_sup, "Supervised weight");
  t.o_wr = tr->add_option("--w-rec", t.w_rec, "Cycle reconstruction weight");
  t.o_wd = tr->add_option("--w-dep", t.w_dep, "Depth weight");
  t.o_wp = tr->add_option("--w-percep", t.w_percep, "Perceptual weight");

  TranslateArgs tl;
  auto* ts = app.add_subcommand("translate", "Translate clear images towards the foggy style");
  ts->add_option("--checkpoint", tl.checkpoint, "Checkpoint file")->required();
  ts->add_option("--input", tl.input, "PNG file or directory")->required();
  ts->add_option("--out", tl.out, "Output directory")->required();
  ts->add_option("--config", tl.config, "JSON config file");
  tl.o_z = ts->add_option("--z", tl.z, "Domainness in [0, 1] (default 0.9; 0.88 also preset)");

  InterpolateArgs ip;
  auto* it = app.add_subcommand("interpolate", "Sweep domainness for one image");
  it->add_option("--checkpoint", ip.checkpoint, "Checkpoint file")->required();
  it->add_option("--input", ip.input, "PNG file")->required();
  it->add_option("--out", ip.out, "Output directory")->required();
  it->add_option("--config", ip.config, "JSON config file");
  ip.o_steps = it->add_option("--z-steps", ip.z_steps, "Number of evenly spaced z values");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score zero-shot translation on the held-out split");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset manifest")->required();
  e->add_option("--out", ev.out, "Report directory")->required();
  e->add_option("--config", ev.config, "JSON config file");
  e->add_option("--metrics", ev.metrics, "Training log for the split audit");
  ev.o_z = e->add_option("--z", ev.z, "Domainness, or 'calibrate'");
  ev.o_sheets = e->add_flag("--contact-sheets", ev.sheets, "Write per-image contact sheets");

  GradcheckArgs gc;
  auto* gk = app.add_subcommand("gradcheck", "Finite-difference check of the objectives");
  gc.o_loss = gk->add_option("--loss", gc.loss, "sup, gist_adv, cyc, percep, dep, full or all");
  gc.o_seed = gk->add_option("--seed", gc.seed, "Miniature model seed");
  gk->add_option("--out", gc.out, "Output directory")->default_val(".");
  gk->add_option("--config", gc.config, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    app.exit(s, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    app.exit(pe, out, err);
    return kExitConfig;
  }

  try {
    if (gd->parsed()) return cmd_gen_data(g, out);
    if (tr->parsed()) return cmd_train(t, out);
    if (ts->parsed()) return cmd_translate(tl, out);
    if (it->parsed()) return cmd_interpolate(ip, out);
    if (e->parsed()) return cmd_evaluate(ev, out);
    if (gk->parsed()) return cmd_gradcheck(gc, out);
  } catch (const ConfigError& x) {
    err << "config error: " << x.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& x) {
    err << "config error: " << x.what() << "\n";
    return kExitConfig;
  } catch (const IoError& x) {
    err << "I/O error: " << x.what() << "\n";
    return kExitIo;
  } catch (const NumericError& x) {
    err << "numeric error: " << x.what() << " (term " << x.term << ", step " << x.step << ")\n";
    return kExitNumeric;
  } catch (const ArtifactMismatch& x) {
    err << "artifact mismatch: " << x.what() << "\n";
    return kExitMismatch;
  } catch (const std::exception& x) {
    err << "error: " << x.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace analogic

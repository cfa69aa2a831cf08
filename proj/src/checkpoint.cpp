// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include "analogic/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

namespace analogic {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'A', 'N', 'L', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kContainerVersion = 1;

template <typename Scalar>
constexpr const char* dtype_name() {
  return sizeof(Scalar) == 4 ? "f32" : "f64";
}

json arch_json(const ArchConfig& a) {
  return json{{"base_width", a.base_width},   {"n_down", a.n_down},
              {"n_res", a.n_res},             {"height", a.height},
              {"width", a.width},             {"stem_kernel", a.stem_kernel},
              {"head_kernel", a.head_kernel}, {"disc_width", a.disc_width},
              {"disc_layers", a.disc_layers}, {"disc_kernel", a.disc_kernel},
              {"seed", a.seed},               {"init_std", a.init_std}};
}

ArchConfig arch_parse(const json& j) {
  ArchConfig a;
  a.base_width = j.at("base_width").get<int>();
  a.n_down = j.at("n_down").get<int>();
  a.n_res = j.at("n_res").get<int>();
  a.height = j.at("height").get<int>();
  a.width = j.at("width").get<int>();
  a.stem_kernel = j.at("stem_kernel").get<int>();
  a.head_kernel = j.at("head_kernel").get<int>();
  a.disc_width = j.at("disc_width").get<int>();
  a.disc_layers = j.at("disc_layers").get<int>();
  a.disc_kernel = j.at("disc_kernel").get<int>();
  a.seed = j.at("seed").get<std::uint64_t>();
  a.init_std = j.at("init_std").get<double>();
  return a;
}

json adam_json(const AdamConfig& c, long t) {
  return json{{"t", t},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps}};
}

AdamConfig adam_parse(const json& j) {
  return AdamConfig{j.at("learning_rate").get<double>(), j.at("beta1").get<double>(),
                    j.at("beta2").get<double>(), j.at("eps").get<double>()};
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

std::string checkpoint_name(long step) { return "ckpt_" + std::to_string(step) + ".analogic"; }

std::string arch_to_json(const ArchConfig& a) { return arch_json(a).dump(); }

ArchConfig arch_from_json(const std::string& text) { return arch_parse(json::parse(text)); }

template <typename Scalar>
void save_checkpoint(ModelState<Scalar>& model, const std::filesystem::path& path) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  for (auto& [name, var] : model.parameters()) tensors.emplace_back(name, &var->value.data());
  for (Adam<Scalar>* opt : {&model.gen_optimizer, &model.disc_optimizer})
    for (auto& [name, mom] : opt->moments()) {
      tensors.emplace_back("adam.first/" + name, &mom.first.data());
      tensors.emplace_back("adam.second/" + name, &mom.second.data());
    }

  json table = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : tensors) {
    table.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m->size()) * sizeof(Scalar);
  }
  json config = json::object();
  if (!model.config_json.empty()) config = json::parse(model.config_json);
  json header{{"format", kCheckpointFormat},
              {"dtype", dtype_name<Scalar>()},
              {"step", model.step},
              {"arch", arch_json(model.arch)},
              {"config", config},
              {"optimizer",
               {{"gen", adam_json(model.gen_optimizer.config(), model.gen_optimizer.steps())},
                {"disc", adam_json(model.disc_optimizer.config(), model.disc_optimizer.steps())}}},
              {"tensors", table}};
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint '" + path.string() + "'");
  os.write(kMagic.data(), kMagic.size());
  write_pod(os, kContainerVersion);
  write_pod(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : tensors)
    os.write(reinterpret_cast<const char*>(m->data()),
             static_cast<std::streamsize>(m->size() * sizeof(Scalar)));
  if (!os) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

template <typename Scalar>
ModelState<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ArtifactMismatch("'" + path.string() + "' is not a checkpoint");
  if (read_pod<std::uint32_t>(is) != kContainerVersion)
    throw ArtifactMismatch("unsupported checkpoint container version");
  const auto len = read_pod<std::uint64_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw ArtifactMismatch("truncated checkpoint header in '" + path.string() + "'");
  const std::streamoff payload = is.tellg();

  json header = json::parse(text);
  if (header.at("format") != kCheckpointFormat)
    throw ArtifactMismatch("unknown checkpoint format in '" + path.string() + "'");
  if (header.at("dtype") != dtype_name<Scalar>())
    throw ArtifactMismatch("checkpoint dtype " + header.at("dtype").get<std::string>() +
                           " does not match the requested precision");

  const auto& opt = header.at("optimizer");
  ModelState<Scalar> model =
      build_model<Scalar>(arch_parse(header.at("arch")), adam_parse(opt.at("gen")));
  model.disc_optimizer = Adam<Scalar>(adam_parse(opt.at("disc")));
  model.gen_optimizer.set_steps(opt.at("gen").at("t").get<long>());
  model.disc_optimizer.set_steps(opt.at("disc").at("t").get<long>());
  model.step = header.at("step").get<long>();
  model.config_json = header.at("config").dump();

  std::map<std::string, json> table;
  for (const auto& t : header.at("tensors")) table[t.at("name").get<std::string>()] = t;

  auto read_into = [&](const json& t, Tensor<Scalar>& dst) {
    const Index rows = t.at("rows").get<Index>(), cols = t.at("cols").get<Index>();
    if (dst.empty()) dst = Tensor<Scalar>::matrix(rows, cols);
    if (dst.data().rows() != rows || dst.data().cols() != cols)
      throw ArtifactMismatch("tensor '" + t.at("name").get<std::string>() +
                             "' has an unexpected shape");
    is.seekg(payload + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
    is.read(reinterpret_cast<char*>(dst.data().data()),
            static_cast<std::streamsize>(dst.data().size() * sizeof(Scalar)));
    if (!is) throw ArtifactMismatch("truncated checkpoint payload in '" + path.string() + "'");
  };

  for (auto& [name, var] : model.parameters()) {
    auto it = table.find(name);
    if (it == table.end()) throw ArtifactMismatch("checkpoint lacks parameter '" + name + "'");
    read_into(it->second, var->value);
  }
  auto restore_moments = [&](Adam<Scalar>& adam,
                             const std::vector<std::pair<std::string, ad::Var<Scalar>>>& params) {
    for (const auto& [name, var] : params) {
      auto f = table.find("adam.first/" + name);
      auto s = table.find("adam.second/" + name);
      if (f == table.end() || s == table.end()) continue;
      auto& mom = adam.moments()[name];
      mom.first = Tensor<Scalar>(var->value.shape());
      mom.second = Tensor<Scalar>(var->value.shape());
      read_into(f->second, mom.first);
      read_into(s->second, mom.second);
    }
  };
  restore_moments(model.gen_optimizer, model.generator_parameters());
  restore_moments(model.disc_optimizer, model.discriminator_parameters());
  return model;
}

template void save_checkpoint<float>(ModelState<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(ModelState<double>&, const std::filesystem::path&);
template ModelState<float> load_checkpoint<float>(const std::filesystem::path&);
template ModelState<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace analogic

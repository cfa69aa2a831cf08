// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//!   offset 0   8 bytes   magic "ANLGCKPT"
//!   offset 8   u32       container version (1)
//!   offset 12  u64       header length L in bytes
//!   offset 20  L bytes   UTF-8 JSON header
//!   offset 20+L          payload: raw tensors, column-major, dtype from header
//!
//! The header holds "format" ("analogic-checkpoint/1"), "dtype" ("f32" or
//! "f64"), "step", "arch", "config" (training config snapshot), "optimizer"
//! ({"gen": {"t": ...}, "disc": {"t": ...}}) and "tensors", a list of
//! {"name", "rows", "cols", "offset"} with offset relative to the payload
//! start. Parameter names are hierarchical ("gen_forward.res0.conv_a.weight");
//! Adam moments are stored as "adam.first/<name>" and "adam.second/<name>".
//! Convolution weights are (in_channels * k * k) x out_channels matrices with
//! row index (c * k + ky) * k + kx.

#ifndef ANALOGIC_CHECKPOINT_HPP
#define ANALOGIC_CHECKPOINT_HPP

#include <filesystem>
#include <string>

#include "analogic/networks.hpp"

namespace analogic {

inline constexpr const char* kCheckpointFormat = "analogic-checkpoint/1";

std::string checkpoint_name(long step);

std::string arch_to_json(const ArchConfig& a);
ArchConfig arch_from_json(const std::string& text);

template <typename Scalar>
void save_checkpoint(ModelState<Scalar>& model, const std::filesystem::path& path);

template <typename Scalar>
ModelState<Scalar> load_checkpoint(const std::filesystem::path& path);

//! Independent deep copy (parameters and optimiser state).
template <typename Scalar>
ModelState<Scalar> clone_model(ModelState<Scalar>& src) {
  ModelState<Scalar> dst = build_model<Scalar>(src.arch, src.gen_optimizer.config());
  auto from = src.parameters();
  auto to = dst.parameters();
  for (std::size_t i = 0; i < from.size(); ++i) to[i].second->value = from[i].second->value;
  dst.gen_optimizer = src.gen_optimizer;
  dst.disc_optimizer = src.disc_optimizer;
  dst.step = src.step;
  dst.config_json = src.config_json;
  return dst;
}

}  // namespace analogic

#endif  // ANALOGIC_CHECKPOINT_HPP

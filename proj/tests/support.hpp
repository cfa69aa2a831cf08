// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ANALOGIC_TESTS_SUPPORT_HPP
#define ANALOGIC_TESTS_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "analogic/tensor.hpp"

namespace analogic::test {

template <typename Scalar = double>
Tensor<Scalar> random_tensor(const Shape& s, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<Scalar> t(s);
  for (Index i = 0; i < t.size(); ++i) t.data().data()[i] = static_cast<Scalar>(u(rng));
  return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("analogic-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

template <typename Scalar>
bool bitwise_equal(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return a.shape() == b.shape() && a.data() == b.data();
}

}  // namespace analogic::test

#endif  // ANALOGIC_TESTS_SUPPORT_HPP

// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ANALOGIC_ERRORS_HPP
#define ANALOGIC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace analogic {

// Each error family maps to one stable CLI exit code (see cli.hpp).

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  NumericError(std::string term, long step)
      : std::runtime_error("non-finite value in '" + term + "' at step " +
                           std::to_string(step)),
        term(std::move(term)),
        step(step) {}
  std::string term;
  long step;
};

struct ArtifactMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace analogic

#endif  // ANALOGIC_ERRORS_HPP

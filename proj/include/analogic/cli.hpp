// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Command-line front end. One binary, subcommands gen-data, train,
//! translate, interpolate, evaluate and gradcheck.
//!
//! Settings resolve as flag > config file > default. The config file is JSON
//! with one object per subcommand, e.g. {"train": {"steps": 500}}; unknown
//! sections or keys are rejected. Each subcommand writes the settings it
//! actually used to config.resolved.json in its output directory.

#ifndef ANALOGIC_CLI_HPP
#define ANALOGIC_CLI_HPP

#include <iosfwd>

namespace analogic {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumeric = 4,
  kExitMismatch = 5,
};

//! Parses arguments, runs the subcommand and maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace analogic

#endif  // ANALOGIC_CLI_HPP

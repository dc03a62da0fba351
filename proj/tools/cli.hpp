// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strokesynth/optimize.hpp"

namespace strokesynth {

/// Thrown by parse_cli when --help is requested; carries the rendered text.
struct HelpRequested {
    std::string text;
};

/// Which embedding network drives the run.
struct EncoderChoice {
    enum class Kind { kToy, kOnnx };
    Kind kind = Kind::kToy;
    std::uint64_t toy_seed = 0;
    std::string onnx_path;
};

/// A fully resolved invocation. Explicit flags win over --config file values,
/// which win over built-in defaults.
struct CliConfig {
    std::string style_path;
    std::string text_embedding_path;
    std::string out_dir;
    EncoderChoice encoder;
    std::int64_t save_every = 0; // 0 disables timelapse frames
    RunConfig run;
};

/// Parses argv-style arguments (program name excluded). Throws HelpRequested
/// for --help, ConfigError for any usage problem (including a malformed
/// --config file), and IoError when the --config file does not exist.
CliConfig parse_cli(const std::vector<std::string>& args);

/// Parses, runs, and writes final.png, final.svg, drawing.json, losses.csv,
/// and timings.json into the --out directory (plus frames/ when --save-every
/// is positive). Returns the process exit code: 0 success, 1 missing input or
/// runtime failure, 2 usage error.
int run_command(const std::vector<std::string>& args);

} // namespace strokesynth

// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0
//
// File I/O for run artifacts: PNG images, SVG renders of a drawing, and the
// per-iteration loss history. Every writer goes through a temp-file-and-rename
// so interrupted runs never leave truncated artifacts behind.

#pragma once

#include <string>
#include <vector>

#include "strokesynth/optimize.hpp"
#include "strokesynth/scene.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth {

/// Decodes a PNG into a (3,H,W) tensor in [0,1]. Gray and palette images
/// expand to RGB; an alpha channel is composited over white. Throws IoError
/// when the file is missing, UnsupportedError for 16-bit files, and
/// ParseError for anything libpng rejects.
Tensor decode_png(const std::string& path);

/// Writes img (3,H,W), values clamped to [0,1], as an 8-bit RGB PNG.
void encode_png(const Tensor& img, const std::string& path);

/// One path element per stroke in paint order: `M .. C ..` trajectory data,
/// stroke-width twice the radius, round caps and joins, RGB stroke color with
/// the alpha as stroke-opacity, no fill, over a background rect.
std::string drawing_to_svg(const Drawing& d);
void export_svg(const Drawing& d, const std::string& path);

/// Loss history as `iter,content,style,combined,phase` rows (one per
/// iteration, %.9g floats, literal `nan` for terms the phase skipped).
std::string history_to_csv(const std::vector<IterationRecord>& history);
void export_history_csv(const std::vector<IterationRecord>& history, const std::string& path);

/// Writes `contents` to `path` via a sibling temp file and atomic rename.
void write_file_atomic(const std::string& path, const std::string& contents);

} // namespace strokesynth

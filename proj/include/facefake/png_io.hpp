#pragma once

#include <filesystem>

#include "facefake/image.hpp"

namespace facefake {

/// Reads an 8-bit PNG into an unnormalized ImageBuffer. Gray stays single
/// channel, everything else (palette, RGBA, 16-bit) is converted to RGB.
ImageBuffer read_png(const std::filesystem::path& path);

/// Writes an unnormalized ImageBuffer as an 8-bit gray or RGB PNG.
/// Intensities are rounded to the nearest integer. Output bytes are a
/// deterministic function of the pixels.
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace facefake

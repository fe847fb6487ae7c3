#pragma once

#include <filesystem>

#include "udh/image.hpp"

namespace udh {

/// Loads a PNG or PGM (P2/P5) file as a single-channel image in [0, 1].
/// Color inputs are reduced with Rec. 601 luma weights.
Image read_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG (or PGM when the extension is .pgm);
/// values are clamped to [0, 1]. Only channel 0 is written.
void write_image(const std::filesystem::path& path, const Image& img);

}  // namespace udh

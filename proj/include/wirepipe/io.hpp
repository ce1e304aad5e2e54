#pragma once

#include "wirepipe/image.hpp"

#include <filesystem>

namespace wirepipe {

/// Reads an 8- or 16-bit PNG (gray, gray+alpha, palette, RGB or RGBA) into a
/// 1- or 3-channel float image in [0,1]; alpha is dropped.
ImageBuf read_png(const std::filesystem::path& path);

/// Writes a 1- or 3-channel image as PNG; bit_depth is 8 or 16.
void write_png(const std::filesystem::path& path, const ImageBuf& img, int bit_depth = 8);

/// Masks travel as 8-bit gray PNG with values {0, 255}.
MaskBuf read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const MaskBuf& mask);

/// Portable Float Map ("Pf" gray / "PF" RGB), little-endian, bottom-up rows.
ImageBuf read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImageBuf& img);

/// Probability maps serialize as the wire-class plane in a 1-channel PFM
/// (the background plane is its complement).
void write_prob_pfm(const std::filesystem::path& path, const ProbMap& probs);
ProbMap read_prob_pfm(const std::filesystem::path& path);

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write_bytes(const std::filesystem::path& path, const void* data, std::size_t size);

}  // namespace wirepipe

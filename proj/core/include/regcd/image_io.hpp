#pragma once

#include <string>

#include "regcd/raster.hpp"

namespace regcd {

/// Decode an 8-bit PNG (gray or RGB) or binary NetPBM (P5/P6) file. The
/// format is detected from the magic bytes, not the extension. Unsupported
/// properties (bit depth, color type, maxval) raise DecodeError naming the
/// offending property.
Raster load_raster(const std::string& path);

/// Write as 8-bit PNG, gray or RGB depending on channel count.
void save_png(const Raster& img, const std::string& path);

/// Write as binary NetPBM, P5 for gray and P6 for RGB.
void save_pnm(const Raster& img, const std::string& path);

} // namespace regcd

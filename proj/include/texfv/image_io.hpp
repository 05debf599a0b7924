#pragma once

#include <string>
#include <utility>

#include "texfv/raster.hpp"

namespace texfv {

struct LoadedImage {
    Raster gray;  // luma, [0, 1]
    RgbImage rgb; // original 8-bit sRGB
};

/// Reads a PNG or JPEG file (sniffed by signature, not extension).
/// Errors: IoError (unreadable/corrupt), UnsupportedFormat.
LoadedImage load_image(const std::string& path);

/// Writes an 8-bit RGB PNG. Output bytes are a pure function of the pixels.
void save_png(const std::string& path, const RgbImage& image);

} // namespace texfv

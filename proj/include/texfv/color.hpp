#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "texfv/raster.hpp"

namespace texfv {

struct Lab {
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// sRGB (8-bit, D65) <-> CIELAB. Forward matrix and white point use the
/// 4-decimal reference constants tabulated in the README.
Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<std::uint8_t, 3> lab_to_srgb(const Lab& lab);
double lab_distance_sq(const Lab& x, const Lab& y);

struct PaletteColor {
    std::string name;
    std::array<std::uint8_t, 3> rgb;
};

/// The fixed 11-name clothing palette.
const std::vector<PaletteColor>& color_palette();

/// Name of the palette anchor nearest to `lab` (CIELAB distance).
const std::string& nearest_palette_name(const Lab& lab);

struct ColorEntry {
    std::string palette_name;
    std::array<std::uint8_t, 3> rgb; // cluster centroid in sRGB
    double proportion = 0.0;
};

struct ColorReport {
    std::int64_t image_id = -1;
    std::vector<ColorEntry> entries; // descending proportion
};

struct DominantColorOptions {
    int max_iter = 50;
    double min_proportion = 0.05; // clusters below this merge into the nearest
};

/// Seeded k-means (k-means++ init) over pixels in CIELAB. Pixels are
/// canonicalized (sorted) first, so the report is independent of pixel
/// order. Errors: EmptyRaster, InvalidArgument.
ColorReport dominant_colors(const RgbImage& image, int k, std::uint64_t seed,
                            const DominantColorOptions& options = {});

} // namespace texfv

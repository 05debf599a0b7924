#pragma once

#include <cstdint>
#include <vector>

namespace texfv {

/// Grayscale raster, row-major, values in [0, 1].
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<double> data; // width * height

    Raster() = default;
    Raster(int w, int h, double fill = 0.0)
        : width(w), height(h), data(std::size_t(w) * std::size_t(h), fill) {}

    double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

/// Interleaved 8-bit sRGB image, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // 3 * width * height, RGB order

    RgbImage() = default;
    RgbImage(int w, int h)
        : width(w), height(h), data(std::size_t(3) * w * h, 0) {}

    std::uint8_t* pixel(int x, int y) { return &data[3 * (std::size_t(y) * width + x)]; }
    const std::uint8_t* pixel(int x, int y) const { return &data[3 * (std::size_t(y) * width + x)]; }
    bool empty() const { return data.empty(); }
};

/// Rec.601 luma of 8-bit sRGB values, scaled to [0, 1].
inline double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

Raster to_grayscale(const RgbImage& rgb);

/// Bilinear interpolation at continuous coordinates (x, y), where integer
/// coordinates address pixel centers. Coordinates are clamped to the image.
double bilinear_sample(const Raster& raster, double x, double y);

/// Resize by `factor` (> 0); output dims are max(1, round(dim * factor)).
/// Sampling is center-aligned; factor 1.0 returns a value-identical raster.
/// Throws DegenerateOutput if the output would be empty.
Raster resize_bilinear(const Raster& raster, double factor);

} // namespace texfv

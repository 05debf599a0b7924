#include "texfv/raster.hpp"

#include <algorithm>
#include <cmath>

#include "texfv/errors.hpp"

namespace texfv {

Raster to_grayscale(const RgbImage& rgb) {
    Raster out(rgb.width, rgb.height);
    const std::uint8_t* p = rgb.data.data();
    for (std::size_t i = 0; i < out.size(); ++i, p += 3) {
        out.data[i] = luma(p[0], p[1], p[2]);
    }
    return out;
}

double bilinear_sample(const Raster& raster, double x, double y) {
    x = std::clamp(x, 0.0, double(raster.width - 1));
    y = std::clamp(y, 0.0, double(raster.height - 1));
    const int x0 = std::min(int(x), raster.width - 1);
    const int y0 = std::min(int(y), raster.height - 1);
    const int x1 = std::min(x0 + 1, raster.width - 1);
    const int y1 = std::min(y0 + 1, raster.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = raster.at(x0, y0) * (1.0 - fx) + raster.at(x1, y0) * fx;
    const double bot = raster.at(x0, y1) * (1.0 - fx) + raster.at(x1, y1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

Raster resize_bilinear(const Raster& raster, double factor) {
    if (factor <= 0.0) fail("DegenerateOutput", "resize factor must be > 0");
    if (raster.empty()) fail("DegenerateOutput", "cannot resize an empty raster");

    const int out_w = std::max(1, int(std::lround(raster.width * factor)));
    const int out_h = std::max(1, int(std::lround(raster.height * factor)));

    if (out_w == raster.width && out_h == raster.height) {
        return raster; // identity; value-identical by contract
    }

    Raster out(out_w, out_h);
    const double sx = double(raster.width) / out_w;
    const double sy = double(raster.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            out.at(x, y) = bilinear_sample(raster, src_x, src_y);
        }
    }
    return out;
}

} // namespace texfv

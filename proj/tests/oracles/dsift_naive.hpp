#pragma once

// Naive per-pixel Dense SIFT reference: loops every (descriptor, pixel,
// cell, orientation) combination and evaluates the hat-function weights
// inline. No lookup tables or incremental tricks; kept independent of the
// library implementation it checks.

#include <cmath>
#include <vector>

#include "texfv/dsift.hpp"
#include "texfv/raster.hpp"

namespace oracles {

inline texfv::DescriptorMatrix naive_dsift(const texfv::Raster& raster,
                                           const texfv::DsiftParams& params) {
    const int orientations = params.num_orientations;
    const int bins = params.spatial_bins;
    const int bin_size = params.bin_size_px;
    const int support = bins * bin_size;
    const int dim = orientations * bins * bins;
    const int w = raster.width;
    const int h = raster.height;
    const double two_pi = 2.0 * M_PI;

    std::vector<std::vector<double>> descriptors;
    for (int y0 = 1; y0 + support - 1 <= h - 2; y0 += params.step_px) {
        for (int x0 = 1; x0 + support - 1 <= w - 2; x0 += params.step_px) {
            std::vector<double> desc(std::size_t(dim), 0.0);
            for (int dy = 0; dy < support; ++dy) {
                for (int dx = 0; dx < support; ++dx) {
                    const int x = x0 + dx;
                    const int y = y0 + dy;
                    const double gx = 0.5 * (raster.at(x + 1, y) - raster.at(x - 1, y));
                    const double gy = 0.5 * (raster.at(x, y + 1) - raster.at(x, y - 1));
                    const double magnitude = std::sqrt(gx * gx + gy * gy);
                    if (magnitude == 0.0) continue;
                    double theta = std::atan2(gy, gx);
                    if (theta < 0.0) theta += two_pi;
                    const double fo = theta * orientations / two_pi;
                    const double fx = (dx - 0.5 * (bin_size - 1)) / bin_size;
                    const double fy = (dy - 0.5 * (bin_size - 1)) / bin_size;

                    for (int cy = 0; cy < bins; ++cy) {
                        const double wy = std::max(0.0, 1.0 - std::abs(fy - cy));
                        if (wy == 0.0) continue;
                        for (int cx = 0; cx < bins; ++cx) {
                            const double wx = std::max(0.0, 1.0 - std::abs(fx - cx));
                            if (wx == 0.0) continue;
                            for (int o = 0; o < orientations; ++o) {
                                const double direct = std::abs(fo - o);
                                const double circular =
                                    std::min(direct, orientations - direct);
                                const double wo = std::max(0.0, 1.0 - circular);
                                if (wo == 0.0) continue;
                                desc[std::size_t((cy * bins + cx) * orientations + o)] +=
                                    magnitude * wx * wy * wo;
                            }
                        }
                    }
                }
            }

            double norm = 0.0;
            for (double v : desc) norm += v * v;
            if (norm > 0.0) {
                norm = std::sqrt(norm);
                for (double& v : desc) v /= norm;
                double renorm = 0.0;
                for (double& v : desc) {
                    v = std::min(v, params.clamp_threshold);
                    renorm += v * v;
                }
                if (renorm > 0.0) {
                    renorm = std::sqrt(renorm);
                    for (double& v : desc) v /= renorm;
                }
            }
            descriptors.push_back(std::move(desc));
        }
    }

    texfv::DescriptorMatrix out;
    out.dim = dim;
    out.count = descriptors.size();
    out.data.reserve(out.count * std::size_t(dim));
    for (const auto& d : descriptors) {
        out.data.insert(out.data.end(), d.begin(), d.end());
    }
    out.scale_of.assign(out.count, 0);
    return out;
}

} // namespace oracles

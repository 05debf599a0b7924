#include "texfv/dsift.hpp"

#include <algorithm>
#include <cmath>

#include "texfv/errors.hpp"
#include "texfv/serial.hpp"

namespace texfv {

void DsiftParams::validate() const {
    if (num_orientations < 1 || spatial_bins < 1 || bin_size_px < 1 || step_px < 1) {
        fail("InvalidArgument", "dsift parameters must be positive");
    }
    if (clamp_threshold <= 0.0) {
        fail("InvalidArgument", "clamp_threshold must be > 0");
    }
    const auto& s = scales.empty() ? default_scales() : scales;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] <= 0.0) fail("InvalidArgument", "scales must be > 0");
        if (i > 0 && s[i] <= s[i - 1]) {
            fail("InvalidArgument", "scales must be strictly increasing");
        }
    }
}

std::vector<double> default_scales() {
    const int n = 10;
    const double lo = 0.125;
    const double hi = 3.0;
    std::vector<double> scales(n);
    const double ratio = std::pow(hi / lo, 1.0 / (n - 1));
    for (int i = 0; i < n; ++i) scales[i] = lo * std::pow(ratio, i);
    scales.back() = hi; // exact endpoint
    return scales;
}

void DescriptorMatrix::append(const DescriptorMatrix& other, std::uint8_t scale_index) {
    if (dim == 0) dim = other.dim;
    data.insert(data.end(), other.data.begin(), other.data.end());
    scale_of.insert(scale_of.end(), other.count, scale_index);
    count += other.count;
}

std::size_t dsift_axis_count(int extent, const DsiftParams& params) {
    // anchors at 1 + i*step with the support ending at or before extent - 2
    const int last = extent - 1 - params.support_px();
    if (last < 1) return 0;
    return std::size_t((last - 1) / params.step_px) + 1;
}

std::size_t dsift_grid_count(int width, int height, const DsiftParams& params) {
    return dsift_axis_count(width, params) * dsift_axis_count(height, params);
}

namespace {

struct OrientationSample {
    double magnitude = 0.0;
    int bin0 = 0;
    int bin1 = 0;
    double w0 = 0.0;
    double w1 = 0.0;
};

struct SpatialWeight {
    int cell0 = -1;
    int cell1 = -1;
    double w0 = 0.0;
    double w1 = 0.0;
};

void normalize_clamp_renormalize(double* d, int dim, double clamp) {
    double norm_sq = 0.0;
    for (int i = 0; i < dim; ++i) norm_sq += d[i] * d[i];
    if (norm_sq <= 0.0) return; // zero descriptor stays zero
    double inv = 1.0 / std::sqrt(norm_sq);
    for (int i = 0; i < dim; ++i) d[i] *= inv;

    norm_sq = 0.0;
    for (int i = 0; i < dim; ++i) {
        d[i] = std::min(d[i], clamp);
        norm_sq += d[i] * d[i];
    }
    if (norm_sq <= 0.0) return;
    inv = 1.0 / std::sqrt(norm_sq);
    for (int i = 0; i < dim; ++i) d[i] *= inv;
}

} // namespace

DescriptorMatrix extract_dsift_single(const Raster& raster, const DsiftParams& params) {
    params.validate();
    const int w = raster.width;
    const int h = raster.height;
    if (w < params.min_raster_px() || h < params.min_raster_px()) {
        fail("RasterTooSmall", "raster " + std::to_string(w) + "x" + std::to_string(h) +
                                   " cannot fit one " + std::to_string(params.support_px()) +
                                   "px support region");
    }

    const int orientations = params.num_orientations;
    const int bins = params.spatial_bins;
    const int bin_size = params.bin_size_px;
    const int support = params.support_px();
    const int dim = params.descriptor_dim();

    // per-pixel gradient magnitude and interpolated orientation bins
    std::vector<OrientationSample> samples(std::size_t(w) * h);
    const double two_pi = 2.0 * M_PI;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double gx = 0.5 * (raster.at(x + 1, y) - raster.at(x - 1, y));
            const double gy = 0.5 * (raster.at(x, y + 1) - raster.at(x, y - 1));
            OrientationSample& s = samples[std::size_t(y) * w + x];
            s.magnitude = std::sqrt(gx * gx + gy * gy);
            if (s.magnitude == 0.0) continue;
            double theta = std::atan2(gy, gx);
            if (theta < 0.0) theta += two_pi;
            const double fo = theta * orientations / two_pi;
            int o0 = int(fo);
            if (o0 >= orientations) o0 = orientations - 1;
            s.bin0 = o0;
            s.bin1 = (o0 + 1) % orientations;
            s.w1 = fo - o0;
            s.w0 = 1.0 - s.w1;
        }
    }

    // spatial interpolation weights as a function of offset within the support
    std::vector<SpatialWeight> spatial(static_cast<std::size_t>(support));
    for (int d = 0; d < support; ++d) {
        const double f = (d - 0.5 * (bin_size - 1)) / bin_size;
        const int c0 = int(std::floor(f));
        const double frac = f - c0;
        SpatialWeight& sw = spatial[std::size_t(d)];
        if (c0 >= 0 && c0 < bins) {
            sw.cell0 = c0;
            sw.w0 = 1.0 - frac;
        }
        if (c0 + 1 >= 0 && c0 + 1 < bins) {
            sw.cell1 = c0 + 1;
            sw.w1 = frac;
        }
    }

    const std::size_t nx = dsift_axis_count(w, params);
    const std::size_t ny = dsift_axis_count(h, params);

    DescriptorMatrix out;
    out.dim = dim;
    out.count = nx * ny;
    out.data.assign(out.count * std::size_t(dim), 0.0);
    out.scale_of.assign(out.count, 0);

    std::size_t column = 0;
    for (std::size_t gy = 0; gy < ny; ++gy) {
        const int y0 = 1 + int(gy) * params.step_px;
        for (std::size_t gx = 0; gx < nx; ++gx, ++column) {
            const int x0 = 1 + int(gx) * params.step_px;
            double* desc = out.column(column);

            for (int dy = 0; dy < support; ++dy) {
                const SpatialWeight& wy = spatial[std::size_t(dy)];
                if (wy.cell0 < 0 && wy.cell1 < 0) continue;
                const OrientationSample* row = &samples[std::size_t(y0 + dy) * w + x0];
                for (int dx = 0; dx < support; ++dx) {
                    const OrientationSample& s = row[dx];
                    if (s.magnitude == 0.0) continue;
                    const SpatialWeight& wx = spatial[std::size_t(dx)];

                    const double m0 = s.magnitude * s.w0;
                    const double m1 = s.magnitude * s.w1;
                    for (int cy_pick = 0; cy_pick < 2; ++cy_pick) {
                        const int cy = cy_pick == 0 ? wy.cell0 : wy.cell1;
                        if (cy < 0) continue;
                        const double wyv = cy_pick == 0 ? wy.w0 : wy.w1;
                        for (int cx_pick = 0; cx_pick < 2; ++cx_pick) {
                            const int cx = cx_pick == 0 ? wx.cell0 : wx.cell1;
                            if (cx < 0) continue;
                            const double wxy = wyv * (cx_pick == 0 ? wx.w0 : wx.w1);
                            double* cell = desc + (std::size_t(cy) * bins + cx) * orientations;
                            cell[s.bin0] += m0 * wxy;
                            cell[s.bin1] += m1 * wxy;
                        }
                    }
                }
            }

            normalize_clamp_renormalize(desc, dim, params.clamp_threshold);
        }
    }
    return out;
}

MultiscaleResult extract_dsift_multiscale(const Raster& raster, const DsiftParams& params) {
    params.validate();
    DsiftParams p = params;
    if (p.scales.empty()) p.scales = default_scales();
    if (p.scales.size() > 256) fail("InvalidArgument", "at most 256 scales supported");

    MultiscaleResult result;
    result.descriptors.dim = p.descriptor_dim();
    for (std::size_t si = 0; si < p.scales.size(); ++si) {
        const double factor = p.scales[si];
        const int out_w = std::max(1, int(std::lround(raster.width * factor)));
        const int out_h = std::max(1, int(std::lround(raster.height * factor)));
        if (dsift_grid_count(out_w, out_h, p) == 0) {
            result.skipped_scales.push_back(int(si));
            continue;
        }
        const Raster resized = resize_bilinear(raster, factor);
        const DescriptorMatrix single = extract_dsift_single(resized, p);
        result.descriptors.append(single, std::uint8_t(si));
    }
    if (result.descriptors.count == 0) {
        fail("AllScalesSkipped", "no scale produced a raster large enough for one descriptor");
    }
    return result;
}

void save_descriptors(const std::string& path, const DescriptorMatrix& descriptors) {
    auto out = open_output(path);
    write_magic(out, "DSF1");
    write_le<std::uint32_t>(out, std::uint32_t(descriptors.dim));
    write_le<std::uint64_t>(out, std::uint64_t(descriptors.count));
    for (double v : descriptors.data) write_le<float>(out, float(v));
    for (std::uint8_t s : descriptors.scale_of) write_le<std::uint8_t>(out, s);
    if (!out) fail("IoError", "write failed: " + path);
}

DescriptorMatrix load_descriptors(const std::string& path) {
    auto in = open_input(path);
    expect_magic(in, "DSF1", "descriptor");
    DescriptorMatrix m;
    m.dim = int(read_le<std::uint32_t>(in));
    m.count = std::size_t(read_le<std::uint64_t>(in));
    m.data.resize(std::size_t(m.dim) * m.count);
    for (double& v : m.data) v = read_le<float>(in);
    m.scale_of.resize(m.count);
    for (std::uint8_t& s : m.scale_of) s = read_le<std::uint8_t>(in);
    return m;
}

} // namespace texfv

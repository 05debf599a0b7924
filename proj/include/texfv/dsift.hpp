#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texfv/raster.hpp"

namespace texfv {

struct DsiftParams {
    int num_orientations = 8;
    int spatial_bins = 4;  // per axis; 8 * 4 * 4 = 128 dims
    int bin_size_px = 6;
    int step_px = 4;
    std::vector<double> scales; // strictly increasing; default_scales() if empty
    double clamp_threshold = 0.2;

    int descriptor_dim() const { return num_orientations * spatial_bins * spatial_bins; }
    /// Side of the square support region in pixels.
    int support_px() const { return spatial_bins * bin_size_px; }
    /// Smallest raster side that fits one support region plus the 1-pixel
    /// gradient margin on each side.
    int min_raster_px() const { return support_px() + 2; }

    void validate() const; // throws InvalidArgument on bad field values
};

/// 10 geometrically spaced scales from 0.125 to 3.0 inclusive.
std::vector<double> default_scales();

/// Column-major descriptor set: dim x count, one scale index per column.
struct DescriptorMatrix {
    int dim = 0;
    std::size_t count = 0;
    std::vector<double> data;        // dim * count, column-major
    std::vector<std::uint8_t> scale_of; // per-descriptor scale index

    const double* column(std::size_t i) const { return data.data() + std::size_t(dim) * i; }
    double* column(std::size_t i) { return data.data() + std::size_t(dim) * i; }

    void append(const DescriptorMatrix& other, std::uint8_t scale_index);
};

/// Number of descriptor anchors along an axis of length `extent` pixels.
/// Anchors start at offset 1 (gradient margin) and advance by step_px while
/// the full support region stays inside the margin.
std::size_t dsift_axis_count(int extent, const DsiftParams& params);
std::size_t dsift_grid_count(int width, int height, const DsiftParams& params);

/// Dense SIFT over a regular grid at a single scale. Descriptors are emitted
/// in raster order (y outer, x inner). Each one is L2-normalized, clamped at
/// clamp_threshold, and re-normalized; all-zero gradient patches stay zero.
/// Errors: RasterTooSmall.
DescriptorMatrix extract_dsift_single(const Raster& raster, const DsiftParams& params);

struct MultiscaleResult {
    DescriptorMatrix descriptors;
    std::vector<int> skipped_scales; // indices into params.scales
};

/// Concatenation of extract_dsift_single over each resized raster, ascending
/// scale order. Scales whose resized raster cannot fit one support region are
/// skipped and reported. Errors: AllScalesSkipped.
MultiscaleResult extract_dsift_multiscale(const Raster& raster, const DsiftParams& params);

/// DSF1 container: magic, u32 dim, u64 count, float32 column-major data,
/// u8 scale index per column. Little-endian.
void save_descriptors(const std::string& path, const DescriptorMatrix& descriptors);
DescriptorMatrix load_descriptors(const std::string& path);

} // namespace texfv

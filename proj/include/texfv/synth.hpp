#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "texfv/manifest.hpp"
#include "texfv/raster.hpp"

namespace texfv {

/// The procedurally expressible texture classes.
enum class PatternKind { Checked, Striped, PolkaDotted, Zigzagged, None };

struct SynthSpec {
    std::vector<std::string> classes = {"Checked", "Striped", "Polka-dotted", "Zigzagged",
                                        "None"};
    int articles_per_class = 6;
    int configs_per_article = 16;
    int image_size = 256; // square, >= 128
    std::uint64_t seed = 42;
    double noise_sigma = 0.02;          // additive Gaussian, per channel
    double illumination_falloff = 0.3;  // radial LED falloff strength
};

/// Seeded per-article pattern parameters. Color pairs are drawn from a fixed
/// list shared across classes, so pixel statistics alone do not separate the
/// patterned classes.
struct ArticleParams {
    int label_id = 0;
    PatternKind kind = PatternKind::None;
    double period_px = 32.0;     // base pattern period at scale x1
    double duty = 0.5;           // stripes: ink fraction; checks: u-axis duty
    double duty2 = 0.5;          // checks: v-axis duty
    double dot_radius_px = 6.0;
    double zig_amplitude_px = 12.0;
    double zig_thickness_px = 4.0;
    double zig_row_period_px = 24.0;
    double base_angle_rad = 0.0;
    std::array<std::uint8_t, 3> fg{0, 0, 0};
    std::array<std::uint8_t, 3> bg{255, 255, 255};
    std::string fg_name = "black";
    std::string bg_name = "white";
};

PatternKind pattern_kind_for_label(int label_id); // throws for the 4 photographic classes

ArticleParams sample_article(int label_id, int article_index, std::uint64_t seed);

/// Renders one of the 16 capture configurations: bit 0 azimuth {90°,45°},
/// bit 1 distance {5cm/x1, 12cm/x0.42 pattern scale}, bit 2 inclination
/// {90°, 45° as an affine shear}, bit 3 tension {taut, hanging as a
/// sinusoidal warp}. Errors: UnrenderableConfig (period exceeds the image).
RgbImage render_article_config(const ArticleParams& article, int config, int image_size,
                               double noise_sigma, double illumination_falloff,
                               std::uint64_t noise_seed);

/// Generates the dataset under out_dir (images/ plus manifest.csv) and
/// returns the manifest. Output bytes are a pure function of the spec.
Manifest generate_synth(const SynthSpec& spec, const std::string& out_dir, int workers = 1);

} // namespace texfv

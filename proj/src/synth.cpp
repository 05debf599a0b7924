#include "texfv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "texfv/errors.hpp"
#include "texfv/image_io.hpp"
#include "texfv/parallel.hpp"
#include "texfv/rng.hpp"
#include "texfv/text.hpp"

namespace fs = std::filesystem;

namespace texfv {

namespace {

struct ColorPair {
    std::array<std::uint8_t, 3> bg;
    std::array<std::uint8_t, 3> fg;
    const char* bg_name;
    const char* fg_name;
};

// palette-anchor pairs with clear luma contrast (DSIFT works on luma);
// shared across every class so histograms overlap between patterns
const ColorPair kColorPairs[] = {
    {{255, 255, 255}, {0, 0, 0}, "white", "black"},
    {{255, 255, 255}, {0, 0, 255}, "white", "blue"},
    {{255, 255, 255}, {255, 0, 0}, "white", "red"},
    {{0, 0, 0}, {0, 128, 0}, "black", "green"},
    {{0, 0, 255}, {255, 255, 0}, "blue", "yellow"},
    {{255, 192, 203}, {128, 0, 128}, "pink", "purple"},
    {{0, 0, 0}, {0, 255, 255}, "black", "cyan"},
    {{255, 255, 255}, {128, 128, 128}, "white", "gray"},
};
constexpr std::size_t kNumColorPairs = sizeof(kColorPairs) / sizeof(kColorPairs[0]);

double frac(double x) { return x - std::floor(x); }

/// Ink coverage in [0, 1] of the base pattern at texture coordinates (u, v).
double pattern_value(const ArticleParams& p, double u, double v) {
    switch (p.kind) {
    case PatternKind::Striped:
        return frac(u / p.period_px) < p.duty ? 1.0 : 0.0;
    case PatternKind::Checked: {
        const bool su = frac(u / p.period_px) < p.duty;
        const bool sv = frac(v / p.period_px) < p.duty2;
        return su != sv ? 1.0 : 0.0;
    }
    case PatternKind::PolkaDotted: {
        const double uu = frac(u / p.period_px) * p.period_px - 0.5 * p.period_px;
        const double vv = frac(v / p.period_px) * p.period_px - 0.5 * p.period_px;
        const double d = std::sqrt(uu * uu + vv * vv);
        return std::clamp(p.dot_radius_px + 0.5 - d, 0.0, 1.0);
    }
    case PatternKind::Zigzagged: {
        const double s = frac(u / p.period_px);
        const double tri = s < 0.5 ? 4.0 * s - 1.0 : 3.0 - 4.0 * s; // in [-1, 1]
        const double center = p.zig_amplitude_px * tri;
        const double q = p.zig_row_period_px;
        const double d = std::abs(frac((v - center) / q + 0.5) * q - 0.5 * q);
        return std::clamp(p.zig_thickness_px + 0.5 - d, 0.0, 1.0);
    }
    case PatternKind::None:
        return 0.0;
    }
    return 0.0;
}

} // namespace

PatternKind pattern_kind_for_label(int label_id) {
    switch (label_id) {
    case 0: return PatternKind::Checked;
    case 5: return PatternKind::None;
    case 6: return PatternKind::PolkaDotted;
    case 7: return PatternKind::Striped;
    case 8: return PatternKind::Zigzagged;
    default:
        fail("InvalidArgument", "class '" + label_name(label_id) +
                                    "' needs photographic texture and cannot be synthesized");
    }
}

ArticleParams sample_article(int label_id, int article_index, std::uint64_t seed) {
    Rng rng(derive_seed(seed, std::uint64_t(label_id), std::uint64_t(article_index)));

    ArticleParams p;
    p.label_id = label_id;
    p.kind = pattern_kind_for_label(label_id);
    // the pair index cycles so every class sees the same palette multiset
    const ColorPair& pair = kColorPairs[std::size_t(article_index) % kNumColorPairs];
    p.bg = pair.bg;
    p.fg = pair.fg;
    p.bg_name = pair.bg_name;
    p.fg_name = pair.fg_name;

    p.base_angle_rad = rng.uniform(0.0, M_PI / 6.0);
    p.period_px = rng.uniform(18.0, 44.0);
    p.duty = rng.uniform(0.3, 0.7);
    p.duty2 = rng.uniform(0.35, 0.65);
    p.dot_radius_px = p.period_px * rng.uniform(0.16, 0.34);
    p.zig_amplitude_px = p.period_px * rng.uniform(0.3, 0.7);
    p.zig_row_period_px = p.period_px * rng.uniform(0.45, 0.9);
    p.zig_thickness_px = std::min(rng.uniform(2.5, 6.5), 0.35 * p.zig_row_period_px);
    return p;
}

RgbImage render_article_config(const ArticleParams& article, int config, int image_size,
                               double noise_sigma, double illumination_falloff,
                               std::uint64_t noise_seed) {
    if (config < 0 || config > 15) fail("InvalidArgument", "config must be in 0..15");
    if (article.kind != PatternKind::None && article.period_px > double(image_size)) {
        fail("UnrenderableConfig",
             "pattern period " + format_double(article.period_px) + "px exceeds the " +
                 std::to_string(image_size) + "px image");
    }

    const bool azimuth_45 = (config & 1) != 0;
    const bool far_distance = (config & 2) != 0;
    const bool inclined = (config & 4) != 0;
    const bool hanging = (config & 8) != 0;

    const double theta = article.base_angle_rad + (azimuth_45 ? M_PI / 4.0 : M_PI / 2.0);
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double inv_scale = far_distance ? 1.0 / 0.42 : 1.0;
    const double warp_amp = hanging ? 0.03 * image_size : 0.0;
    const double warp_period = 0.5 * image_size;
    const double half = 0.5 * image_size;
    const double falloff_norm = 1.0 / (2.0 * half * half);

    const double bg[3] = {article.bg[0] / 255.0, article.bg[1] / 255.0, article.bg[2] / 255.0};
    const double fg[3] = {article.fg[0] / 255.0, article.fg[1] / 255.0, article.fg[2] / 255.0};

    Rng noise(noise_seed);
    RgbImage image(image_size, image_size);
    for (int y = 0; y < image_size; ++y) {
        const double cy = y - half;
        for (int x = 0; x < image_size; ++x) {
            const double cx = x - half;

            double u = cx + warp_amp * std::sin(2.0 * M_PI * cy / warp_period);
            double v = cy;
            const double ru = u * cos_t + v * sin_t;
            const double rv = -u * sin_t + v * cos_t;
            u = ru;
            v = rv;
            if (inclined) u += 0.5 * v; // 45 degree tilt as an affine shear
            u *= inv_scale;
            v *= inv_scale;

            const double ink = pattern_value(article, u, v);
            const double light = 1.0 - illumination_falloff * (cx * cx + cy * cy) * falloff_norm;

            std::uint8_t* px = image.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                double value = (bg[ch] + (fg[ch] - bg[ch]) * ink) * light;
                if (noise_sigma > 0.0) value += noise.normal(0.0, noise_sigma);
                px[ch] = std::uint8_t(std::clamp(std::lround(value * 255.0), 0L, 255L));
            }
        }
    }
    return image;
}

Manifest generate_synth(const SynthSpec& spec, const std::string& out_dir, int workers) {
    if (spec.classes.empty()) fail("InvalidArgument", "synth spec needs at least one class");
    if (spec.image_size < 128) fail("InvalidArgument", "image_size must be >= 128");
    if (spec.articles_per_class < 1 || spec.configs_per_article < 1 ||
        spec.configs_per_article > 16) {
        fail("InvalidArgument", "articles_per_class >= 1 and configs_per_article in 1..16");
    }

    // canonical class order: ascending label id, duplicates rejected
    std::vector<int> labels;
    for (const auto& name : spec.classes) {
        const int label = label_id_from_name(name);
        pattern_kind_for_label(label);
        labels.push_back(label);
    }
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
        fail("InvalidArgument", "duplicate class in synth spec");
    }

    fs::create_directories(fs::path(out_dir) / "images");

    struct Job {
        ArticleParams article;
        int config = 0;
        std::string file_name;
        std::int64_t image_id = 0;
    };
    std::vector<Job> jobs;
    for (std::size_t ci = 0; ci < labels.size(); ++ci) {
        for (int a = 0; a < spec.articles_per_class; ++a) {
            const ArticleParams article = sample_article(labels[ci], a, spec.seed);
            for (int cfg = 0; cfg < spec.configs_per_article; ++cfg) {
                Job job;
                job.article = article;
                job.config = cfg;
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%s_a%02d_c%02d.png",
                              label_name(labels[ci]).c_str(), a, cfg);
                std::string name(buf);
                for (char& c : name) c = char(std::tolower(c));
                job.file_name = name;
                job.image_id =
                    std::int64_t((ci * std::size_t(spec.articles_per_class) + std::size_t(a)) *
                                     std::size_t(spec.configs_per_article) +
                                 std::size_t(cfg));
                jobs.push_back(std::move(job));
            }
        }
    }

    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        const Job& job = jobs[i];
        const std::uint64_t noise_seed =
            derive_seed(spec.seed, 0x6e6f6973ULL, std::uint64_t(job.image_id));
        const RgbImage image =
            render_article_config(job.article, job.config, spec.image_size, spec.noise_sigma,
                                  spec.illumination_falloff, noise_seed);
        save_png((fs::path(out_dir) / "images" / job.file_name).string(), image);
    });

    Manifest manifest;
    manifest.base_dir = out_dir;
    for (const Job& job : jobs) {
        const bool azimuth_45 = (job.config & 1) != 0;
        const bool far_distance = (job.config & 2) != 0;
        const bool inclined = (job.config & 4) != 0;
        const bool hanging = (job.config & 8) != 0;

        ImageRecord rec;
        rec.image_id = job.image_id;
        rec.label_id = job.article.label_id;
        rec.distance_cm = far_distance ? 12.0 : 5.0;
        rec.inclination_deg = inclined ? 45.0 : 90.0;
        rec.azimuth_deg = azimuth_45 ? 45.0 : 90.0;
        rec.scale_ppcm = 640.0 / (0.8 * rec.distance_cm);
        rec.lighting = 200;
        rec.taut = !hanging;
        rec.notes = "synthetic " + label_name(job.article.label_id) + " article config " +
                    std::to_string(job.config);
        rec.colors.push_back(job.article.bg_name);
        if (job.article.kind != PatternKind::None) rec.colors.push_back(job.article.fg_name);
        rec.image_path = "images/" + job.file_name;
        manifest.records.push_back(std::move(rec));
    }
    manifest.rebuild_counts();
    write_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
    return manifest;
}

} // namespace texfv

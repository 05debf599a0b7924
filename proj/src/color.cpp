#include "texfv/color.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "texfv/errors.hpp"
#include "texfv/rng.hpp"

namespace texfv {

namespace {

// sRGB D65 reference constants, 4 decimals. The white point is the row sum
// of the forward matrix so that pure white maps to L=100, a=b=0 exactly.
constexpr double kRgbToXyz[3][3] = {
    {0.4124, 0.3576, 0.1805},
    {0.2126, 0.7152, 0.0722},
    {0.0193, 0.1192, 0.9505},
};
constexpr double kXyzToRgb[3][3] = {
    {3.2406, -1.5372, -0.4986},
    {-0.9689, 1.8758, 0.0415},
    {0.0557, -0.2040, 1.0570},
};
constexpr double kWhite[3] = {0.9505, 1.0000, 1.0890};
constexpr double kLabDelta = 6.0 / 29.0;

double srgb_decode(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double c) {
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
    return t > kLabDelta * kLabDelta * kLabDelta
               ? std::cbrt(t)
               : t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    return t > kLabDelta ? t * t * t : 3.0 * kLabDelta * kLabDelta * (t - 4.0 / 29.0);
}

} // namespace

Lab srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double lin[3] = {srgb_decode(r8 / 255.0), srgb_decode(g8 / 255.0),
                           srgb_decode(b8 / 255.0)};
    double xyz[3];
    for (int i = 0; i < 3; ++i) {
        xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] + kRgbToXyz[i][2] * lin[2];
    }
    const double fx = lab_f(xyz[0] / kWhite[0]);
    const double fy = lab_f(xyz[1] / kWhite[1]);
    const double fz = lab_f(xyz[2] / kWhite[2]);
    return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<std::uint8_t, 3> lab_to_srgb(const Lab& lab) {
    const double fy = (lab.l + 16.0) / 116.0;
    const double fx = fy + lab.a / 500.0;
    const double fz = fy - lab.b / 200.0;
    const double xyz[3] = {kWhite[0] * lab_f_inv(fx), kWhite[1] * lab_f_inv(fy),
                           kWhite[2] * lab_f_inv(fz)};
    std::array<std::uint8_t, 3> out{};
    for (int i = 0; i < 3; ++i) {
        const double lin =
            kXyzToRgb[i][0] * xyz[0] + kXyzToRgb[i][1] * xyz[1] + kXyzToRgb[i][2] * xyz[2];
        const double v = srgb_encode(std::clamp(lin, 0.0, 1.0));
        out[std::size_t(i)] = std::uint8_t(std::clamp(std::lround(v * 255.0), 0L, 255L));
    }
    return out;
}

double lab_distance_sq(const Lab& x, const Lab& y) {
    const double dl = x.l - y.l;
    const double da = x.a - y.a;
    const double db = x.b - y.b;
    return dl * dl + da * da + db * db;
}

const std::vector<PaletteColor>& color_palette() {
    static const std::vector<PaletteColor> palette = {
        {"red", {255, 0, 0}},      {"orange", {255, 165, 0}}, {"yellow", {255, 255, 0}},
        {"green", {0, 128, 0}},    {"cyan", {0, 255, 255}},   {"blue", {0, 0, 255}},
        {"purple", {128, 0, 128}}, {"pink", {255, 192, 203}}, {"white", {255, 255, 255}},
        {"gray", {128, 128, 128}}, {"black", {0, 0, 0}},
    };
    return palette;
}

const std::string& nearest_palette_name(const Lab& lab) {
    static const std::vector<Lab> anchors = [] {
        std::vector<Lab> out;
        for (const auto& p : color_palette()) {
            out.push_back(srgb_to_lab(p.rgb[0], p.rgb[1], p.rgb[2]));
        }
        return out;
    }();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const double d = lab_distance_sq(lab, anchors[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return color_palette()[best].name;
}

namespace {

struct Cluster {
    Lab centroid;
    std::size_t count = 0;
};

std::uint32_t pack_rgb(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 16) | (std::uint32_t(p[1]) << 8) | std::uint32_t(p[2]);
}

} // namespace

ColorReport dominant_colors(const RgbImage& image, int k, std::uint64_t seed,
                            const DominantColorOptions& options) {
    if (image.empty()) fail("EmptyRaster", "dominant_colors requires a nonempty image");
    if (k < 1) fail("InvalidArgument", "k must be >= 1");

    const std::size_t n = std::size_t(image.width) * std::size_t(image.height);

    // canonical pixel order: sorted by packed RGB, so the report does not
    // depend on how the caller laid out the pixels
    std::vector<std::uint32_t> packed(n);
    for (std::size_t i = 0; i < n; ++i) packed[i] = pack_rgb(&image.data[3 * i]);
    std::sort(packed.begin(), packed.end());

    std::vector<Lab> pixels(n);
    for (std::size_t i = 0; i < n; ++i) {
        pixels[i] = srgb_to_lab(std::uint8_t(packed[i] >> 16), std::uint8_t(packed[i] >> 8),
                                std::uint8_t(packed[i]));
    }

    // k-means++ seeding
    Rng rng(derive_seed(seed, 0x636f6cULL)); // "col" stream
    std::vector<Lab> centroids;
    centroids.push_back(pixels[std::size_t(rng.uniform_u64(n))]);
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = lab_distance_sq(pixels[i], centroids[0]);
    while (int(centroids.size()) < k) {
        double total = 0.0;
        for (double d : dist2) total += d;
        std::size_t pick;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::size_t(rng.uniform_u64(n));
        }
        centroids.push_back(pixels[pick]);
        for (std::size_t i = 0; i < n; ++i) {
            dist2[i] = std::min(dist2[i], lab_distance_sq(pixels[i], centroids.back()));
        }
    }

    // Lloyd iterations; ties go to the lowest cluster index
    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < int(centroids.size()); ++c) {
                const double d = lab_distance_sq(pixels[i], centroids[std::size_t(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<Lab> sums(centroids.size());
        std::vector<std::size_t> counts(centroids.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            Lab& s = sums[std::size_t(assign[i])];
            s.l += pixels[i].l;
            s.a += pixels[i].a;
            s.b += pixels[i].b;
            ++counts[std::size_t(assign[i])];
        }
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (counts[c] == 0) continue; // empty cluster keeps its centroid
            centroids[c] =
                Lab{sums[c].l / counts[c], sums[c].a / counts[c], sums[c].b / counts[c]};
        }
    }

    std::vector<Cluster> clusters;
    {
        std::vector<std::size_t> counts(centroids.size(), 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[std::size_t(assign[i])];
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (counts[c] > 0) clusters.push_back(Cluster{centroids[c], counts[c]});
        }
    }

    // merge clusters below the proportion floor into their nearest survivor
    while (clusters.size() > 1) {
        std::size_t smallest = 0;
        for (std::size_t c = 1; c < clusters.size(); ++c) {
            if (clusters[c].count < clusters[smallest].count) smallest = c;
        }
        if (double(clusters[smallest].count) / double(n) >= options.min_proportion) break;

        std::size_t target = smallest == 0 ? 1 : 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (c == smallest) continue;
            const double d = lab_distance_sq(clusters[c].centroid, clusters[smallest].centroid);
            if (d < best_d) {
                best_d = d;
                target = c;
            }
        }
        Cluster& dst = clusters[target];
        const Cluster& src = clusters[smallest];
        const double total = double(dst.count + src.count);
        dst.centroid = Lab{(dst.centroid.l * dst.count + src.centroid.l * src.count) / total,
                           (dst.centroid.a * dst.count + src.centroid.a * src.count) / total,
                           (dst.centroid.b * dst.count + src.centroid.b * src.count) / total};
        dst.count += src.count;
        clusters.erase(clusters.begin() + long(smallest));
    }

    ColorReport report;
    for (const auto& c : clusters) {
        ColorEntry entry;
        entry.rgb = lab_to_srgb(c.centroid);
        entry.palette_name = nearest_palette_name(c.centroid);
        entry.proportion = double(c.count) / double(n);
        report.entries.push_back(std::move(entry));
    }
    std::sort(report.entries.begin(), report.entries.end(),
              [](const ColorEntry& a, const ColorEntry& b) {
                  if (a.proportion != b.proportion) return a.proportion > b.proportion;
                  return pack_rgb(a.rgb.data()) < pack_rgb(b.rgb.data());
              });
    return report;
}

} // namespace texfv

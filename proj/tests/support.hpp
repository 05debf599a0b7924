#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <doctest.h>

#include "texfv/errors.hpp"
#include "texfv/manifest.hpp"
#include "texfv/raster.hpp"

namespace testsupport {

/// Temp directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("texfv_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

private:
    std::filesystem::path path_;
};

/// Expects fn() to throw texfv::Error with the given code.
template <typename Fn>
void expect_error(const std::string& code, Fn&& fn) {
    try {
        fn();
        FAIL_CHECK("expected error " << code << " but nothing was thrown");
    } catch (const texfv::Error& e) {
        CHECK(e.code() == code);
    }
}

inline const std::vector<std::size_t>& table1_counts() {
    static const std::vector<std::size_t> counts = {88, 40, 88, 32, 48, 48, 48, 64, 64};
    return counts;
}

/// In-memory manifest shaped like the 520-image dataset (no files behind it).
inline texfv::Manifest table1_manifest() {
    texfv::Manifest m;
    std::int64_t id = 0;
    for (int label = 0; label < 9; ++label) {
        for (std::size_t i = 0; i < table1_counts()[std::size_t(label)]; ++i) {
            texfv::ImageRecord r;
            r.image_id = id++;
            r.label_id = label;
            r.distance_cm = (i % 2) ? 12.0 : 5.0;
            r.inclination_deg = (i % 4 < 2) ? 90.0 : 45.0;
            r.azimuth_deg = (i % 8 < 4) ? 90.0 : 45.0;
            r.scale_ppcm = 640.0 / (0.8 * r.distance_cm);
            r.lighting = 200;
            r.taut = (i % 16) < 8;
            r.notes = "row " + std::to_string(id);
            r.colors = {"blue", "white"};
            r.image_path = "images/" + std::to_string(r.image_id) + ".png";
            m.records.push_back(std::move(r));
        }
    }
    m.rebuild_counts();
    return m;
}

inline texfv::Raster constant_raster(int w, int h, double value) {
    return texfv::Raster(w, h, value);
}

/// Vertical stripes with the given period, values alternating lo/hi.
inline texfv::Raster stripe_raster(int w, int h, int period, double lo = 0.0, double hi = 1.0) {
    texfv::Raster r(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            r.at(x, y) = (x / period) % 2 == 0 ? lo : hi;
        }
    }
    return r;
}

inline texfv::Raster random_raster(int w, int h, std::uint64_t seed) {
    texfv::Raster r(w, h);
    std::mt19937_64 engine(seed);
    for (double& v : r.data) {
        v = double(engine() >> 11) * 0x1.0p-53;
    }
    return r;
}

inline texfv::RgbImage solid_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    texfv::RgbImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto* p = img.pixel(x, y);
            p[0] = r;
            p[1] = g;
            p[2] = b;
        }
    }
    return img;
}

} // namespace testsupport

#include <cmath>
#include <fstream>

#include <doctest.h>

#include "oracles/dsift_naive.hpp"
#include "support.hpp"
#include "texfv/dsift.hpp"

using namespace texfv;
using testsupport::expect_error;

namespace {

// the grid arithmetic, restated independently of the library helper
std::size_t expected_axis_count(int extent, int support, int step) {
    const int last = extent - 1 - support;
    if (last < 1) return 0;
    return std::size_t((last - 1) / step) + 1;
}

} // namespace

TEST_CASE("default scale pyramid") {
    const auto scales = default_scales();
    REQUIRE(scales.size() == 10);
    CHECK(scales.front() == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(scales.back() == 3.0);
    for (std::size_t i = 1; i < scales.size(); ++i) {
        CHECK(scales[i] > scales[i - 1]);
        // geometric spacing: constant ratio
        CHECK(scales[i] / scales[i - 1] ==
              doctest::Approx(std::pow(24.0, 1.0 / 9.0)).epsilon(1e-9));
    }
    DsiftParams p;
    CHECK(p.descriptor_dim() == 128);
    CHECK(p.support_px() == 24);
}

TEST_CASE("constant raster gives all-zero descriptors") {
    const Raster r = testsupport::constant_raster(40, 36, 0.37);
    const DescriptorMatrix m = extract_dsift_single(r, DsiftParams{});
    CHECK(m.count == expected_axis_count(40, 24, 4) * expected_axis_count(36, 24, 4));
    for (double v : m.data) CHECK(v == 0.0);
}

TEST_CASE("additive intensity invariance") {
    const Raster r = testsupport::random_raster(44, 40, 11);
    Raster shifted = r;
    for (double& v : shifted.data) v += 0.25;

    const DescriptorMatrix a = extract_dsift_single(r, DsiftParams{});
    const DescriptorMatrix b = extract_dsift_single(shifted, DsiftParams{});
    REQUIRE(a.count == b.count);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(std::abs(a.data[i] - b.data[i]) <= 1e-12);
    }
}

TEST_CASE("descriptor norms and non-negativity") {
    const Raster r = testsupport::random_raster(48, 48, 5);
    const DescriptorMatrix m = extract_dsift_single(r, DsiftParams{});
    for (std::size_t c = 0; c < m.count; ++c) {
        const double* d = m.column(c);
        double norm_sq = 0.0;
        for (int i = 0; i < m.dim; ++i) {
            CHECK(d[i] >= 0.0);
            norm_sq += d[i] * d[i];
        }
        const double norm = std::sqrt(norm_sq);
        CHECK(norm <= 1.0 + 1e-6);
        if (norm > 0.0) CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("naive per-pixel oracle agreement") {
    const DsiftParams params;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const int w = 30 + int(seed) * 5;
        const int h = 48 - int(seed) * 3;
        const Raster r = testsupport::random_raster(w, h, 100 + seed);
        const DescriptorMatrix fast = extract_dsift_single(r, params);
        const DescriptorMatrix slow = oracles::naive_dsift(r, params);
        REQUIRE(fast.count == slow.count);
        REQUIRE(fast.dim == slow.dim);
        for (std::size_t i = 0; i < fast.data.size(); ++i) {
            CHECK(std::abs(fast.data[i] - slow.data[i]) <= 1e-5);
        }
    }
}

TEST_CASE("oracle agreement on a structured raster") {
    const Raster stripes = testsupport::stripe_raster(32, 32, 4);
    const DescriptorMatrix fast = extract_dsift_single(stripes, DsiftParams{});
    const DescriptorMatrix slow = oracles::naive_dsift(stripes, DsiftParams{});
    REQUIRE(fast.count == slow.count);
    for (std::size_t i = 0; i < fast.data.size(); ++i) {
        CHECK(std::abs(fast.data[i] - slow.data[i]) <= 1e-5);
    }
}

TEST_CASE("multiscale with scales = [1.0] reduces to single scale") {
    const Raster r = testsupport::random_raster(40, 40, 21);
    DsiftParams p;
    p.scales = {1.0};
    const MultiscaleResult multi = extract_dsift_multiscale(r, p);
    const DescriptorMatrix single = extract_dsift_single(r, p);
    CHECK(multi.skipped_scales.empty());
    REQUIRE(multi.descriptors.count == single.count);
    CHECK(multi.descriptors.data == single.data);
}

TEST_CASE("multiscale count matches the grid formula") {
    const int side = 640;
    const Raster r = testsupport::random_raster(side, side, 33);
    const DsiftParams p;
    const MultiscaleResult multi = extract_dsift_multiscale(r, p);

    std::size_t expected = 0;
    for (double s : default_scales()) {
        const int dim = std::max(1, int(std::lround(side * s)));
        expected += expected_axis_count(dim, p.support_px(), p.step_px) *
                    expected_axis_count(dim, p.support_px(), p.step_px);
    }
    CHECK(multi.descriptors.count == expected);
    CHECK(multi.skipped_scales.empty()); // 640 * 0.125 = 80 still fits

    // scale indices are ascending and end at the top scale
    std::uint8_t prev = 0;
    for (std::uint8_t s : multi.descriptors.scale_of) {
        CHECK(s >= prev);
        prev = s;
    }
    CHECK(multi.descriptors.scale_of.back() == 9);
}

TEST_CASE("low scales are skipped and reported") {
    const Raster r = testsupport::random_raster(64, 64, 3);
    const MultiscaleResult multi = extract_dsift_multiscale(r, DsiftParams{});
    // scales with round(64 s) < 26 cannot host one support region
    CHECK(multi.skipped_scales == std::vector<int>{0, 1, 2, 3});
    CHECK(multi.descriptors.count > 0);
}

TEST_CASE("all scales skipped on a tiny raster") {
    const Raster r = testsupport::random_raster(8, 8, 3);
    expect_error("AllScalesSkipped", [&] { extract_dsift_multiscale(r, DsiftParams{}); });
    expect_error("RasterTooSmall", [&] { extract_dsift_single(r, DsiftParams{}); });
}

TEST_CASE("extraction is deterministic") {
    const Raster r = testsupport::random_raster(70, 50, 9);
    const MultiscaleResult a = extract_dsift_multiscale(r, DsiftParams{});
    const MultiscaleResult b = extract_dsift_multiscale(r, DsiftParams{});
    CHECK(a.descriptors.data == b.descriptors.data);
    CHECK(a.descriptors.scale_of == b.descriptors.scale_of);
}

TEST_CASE("DSF1 round trip") {
    testsupport::TempDir dir("dsf");
    const Raster r = testsupport::random_raster(40, 40, 17);
    DsiftParams p;
    p.scales = {0.8, 1.0};
    const MultiscaleResult multi = extract_dsift_multiscale(r, p);

    const std::string path = dir.str("d.dsf");
    save_descriptors(path, multi.descriptors);
    const DescriptorMatrix back = load_descriptors(path);
    REQUIRE(back.dim == multi.descriptors.dim);
    REQUIRE(back.count == multi.descriptors.count);
    CHECK(back.scale_of == multi.descriptors.scale_of);
    for (std::size_t i = 0; i < back.data.size(); ++i) {
        CHECK(back.data[i] == double(float(multi.descriptors.data[i])));
    }
    expect_error("BadMagic", [&] {
        std::ofstream junk(dir.str("junk.dsf"), std::ios::binary);
        junk << "NOPE1234";
        junk.close();
        load_descriptors(dir.str("junk.dsf"));
    });
}

TEST_CASE("parameter validation") {
    DsiftParams p;
    p.scales = {0.5, 0.5};
    expect_error("InvalidArgument", [&] { p.validate(); });
    p.scales = {0.5, -1.0};
    expect_error("InvalidArgument", [&] { p.validate(); });
    p.scales.clear();
    p.step_px = 0;
    expect_error("InvalidArgument", [&] { p.validate(); });
}

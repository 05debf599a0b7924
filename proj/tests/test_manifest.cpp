#include <fstream>

#include <doctest.h>

#include "support.hpp"
#include "texfv/manifest.hpp"
#include "texfv/rng.hpp"

using namespace texfv;
using testsupport::TempDir;
using testsupport::expect_error;

namespace {

const char* kHeader = "image_id,label_id,distance_cm,inclination_deg,azimuth_deg,scale_ppcm,"
                      "lighting,tension,notes,colors,image_path\n";

std::string write_csv(const TempDir& dir, const std::string& body,
                      const std::string& name = "manifest.csv") {
    const std::string path = dir.str(name);
    std::ofstream out(path);
    out << body;
    return path;
}

} // anonymous namespace

TEST_CASE("label map is the fixed bijection") {
    const char* names[9] = {"Checked",  "Denim", "Floral",       "Knitted", "Lacelike",
                            "None",     "Polka-dotted", "Striped", "Zigzagged"};
    for (int i = 0; i < 9; ++i) {
        CHECK(label_name(i) == names[i]);
        CHECK(label_id_from_name(names[i]) == i);
    }
    expect_error("BadLabelId", [] { label_name(9); });
    expect_error("BadLabelId", [] { label_name(-1); });
    expect_error("BadLabelId", [] { label_id_from_name("Paisley"); });
}

TEST_CASE("parse a small manifest") {
    TempDir dir("manifest");
    const std::string path = write_csv(
        dir, std::string(kHeader) +
                 "0,0,5,90,90,160,200,taut,\"has, a comma\",blue;white,images/0.png\n"
                 "1,5,12,45,45,66.7,128,hanging,,red,images/1.png\n");
    const Manifest m = parse_manifest(path);
    REQUIRE(m.records.size() == 2);
    CHECK(m.records[0].image_id == 0);
    CHECK(m.records[0].notes == "has, a comma");
    CHECK(m.records[0].colors == std::vector<std::string>{"blue", "white"});
    CHECK(m.records[0].taut);
    CHECK_FALSE(m.records[1].taut);
    CHECK(m.records[1].colors == std::vector<std::string>{"red"});
    CHECK(m.class_counts.at(0) == 1);
    CHECK(m.class_counts.at(5) == 1);
    CHECK(m.missing_count() == 2); // no image files exist
}

TEST_CASE("empty data section") {
    TempDir dir("manifest");
    const Manifest m = parse_manifest(write_csv(dir, kHeader));
    CHECK(m.records.empty());
    CHECK(m.class_counts.empty());
}

TEST_CASE("parse errors name the offending row") {
    TempDir dir("manifest");
    expect_error("BadLabelId", [&] {
        parse_manifest(write_csv(dir, std::string(kHeader) +
                                          "0,9,5,90,90,160,200,taut,,blue,x.png\n"));
    });
    expect_error("DuplicateImageId", [&] {
        parse_manifest(write_csv(dir, std::string(kHeader) +
                                          "7,0,5,90,90,160,200,taut,,blue,x.png\n"
                                          "7,1,5,90,90,160,200,taut,,blue,y.png\n"));
    });
    expect_error("UnparsableNumber", [&] {
        parse_manifest(write_csv(dir, std::string(kHeader) +
                                          "0,0,abc,90,90,160,200,taut,,blue,x.png\n"));
    });
    expect_error("MissingColumn", [&] {
        parse_manifest(write_csv(dir, std::string(kHeader) + "0,0,5,90,90,160,200,taut,,blue\n"));
    });
    expect_error("MissingColumn", [&] {
        parse_manifest(write_csv(dir, "image_id,label_id\n0,0\n"));
    });
    expect_error("BadValue", [&] {
        parse_manifest(write_csv(dir, std::string(kHeader) +
                                          "0,0,5,90,90,160,200,slack,,blue,x.png\n"));
    });
    expect_error("BadValue", [&] {
        parse_manifest(write_csv(dir, std::string(kHeader) +
                                          "0,0,-5,90,90,160,200,taut,,blue,x.png\n"));
    });
}

TEST_CASE("round trip: parse(write(m)) preserves record contents") {
    TempDir dir("roundtrip");
    Manifest m = testsupport::table1_manifest();
    m.records.resize(20);
    m.rebuild_counts();
    m.records[3].notes = "quote \" and, comma";
    m.records[4].colors = {"dark blue", "off white"};

    const std::string path = dir.str("out.csv");
    write_manifest(m, path);
    const Manifest back = parse_manifest(path);
    REQUIRE(back.records.size() == m.records.size());
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        ImageRecord a = m.records[i];
        ImageRecord b = back.records[i];
        b.missing = a.missing; // existence differs; contents must not
        CHECK(a == b);
    }
    CHECK(back.class_counts == m.class_counts);
}

TEST_CASE("stratified split on the Table 1 shape at fraction 0.20") {
    const Manifest m = testsupport::table1_manifest();
    const Split split = stratified_split(m, 0.20, 99);

    const std::vector<std::size_t> expected_train = {18, 8, 18, 6, 10, 10, 10, 13, 13};
    std::map<int, std::size_t> train_per_class;
    std::map<std::int64_t, int> label_of;
    for (const auto& r : m.records) label_of[r.image_id] = r.label_id;
    for (auto id : split.train_ids) ++train_per_class[label_of.at(id)];
    for (int label = 0; label < 9; ++label) {
        CHECK(train_per_class[label] == expected_train[std::size_t(label)]);
    }

    // disjoint and complete
    CHECK(split.train_ids.size() + split.test_ids.size() == m.records.size());
    std::vector<std::int64_t> all = split.train_ids;
    all.insert(all.end(), split.test_ids.begin(), split.test_ids.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
}

TEST_CASE("split determinism and seed sensitivity") {
    const Manifest m = testsupport::table1_manifest();
    const Split a = stratified_split(m, 0.35, 7);
    const Split b = stratified_split(m, 0.35, 7);
    CHECK(a.train_ids == b.train_ids);
    CHECK(a.test_ids == b.test_ids);

    const Split c = stratified_split(m, 0.35, 8);
    CHECK(a.train_ids != c.train_ids); // overwhelmingly likely
}

TEST_CASE("split on a 10-per-class toy manifest at 0.80") {
    Manifest m;
    std::int64_t id = 0;
    for (int label = 0; label < 3; ++label) {
        for (int i = 0; i < 10; ++i) {
            ImageRecord r;
            r.image_id = id++;
            r.label_id = label;
            r.distance_cm = 5;
            r.inclination_deg = 90;
            r.azimuth_deg = 90;
            r.scale_ppcm = 160;
            m.records.push_back(r);
        }
    }
    m.rebuild_counts();
    const Split split = stratified_split(m, 0.80, 1);
    CHECK(split.train_ids.size() == 24);
    CHECK(split.test_ids.size() == 6);
}

TEST_CASE("round-half-up train counts match exact rational arithmetic") {
    // fractions are multiples of 0.05, so f*n = p*n/20 exactly
    for (int p = 4; p <= 16; ++p) {
        const double fraction = p * 0.05;
        for (std::size_t n : {2u, 10u, 32u, 40u, 48u, 64u, 88u, 13u}) {
            const std::size_t expected = (std::size_t(p) * n + 10) / 20;
            CHECK(stratified_train_count(fraction, n) == expected);
        }
    }
}

TEST_CASE("split rejects bad inputs") {
    Manifest m = testsupport::table1_manifest();
    expect_error("InvalidArgument", [&] { stratified_split(m, 0.0, 1); });
    expect_error("InvalidArgument", [&] { stratified_split(m, 1.0, 1); });

    for (auto& r : m.records) {
        if (r.label_id == 3) r.missing = true;
    }
    expect_error("EmptyClass", [&] { stratified_split(m, 0.5, 1); });
}

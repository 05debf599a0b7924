#include "texfv/manifest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "texfv/errors.hpp"
#include "texfv/rng.hpp"
#include "texfv/text.hpp"

namespace fs = std::filesystem;

namespace texfv {

namespace {

const std::array<std::string, 9> kLabelNames = {
    "Checked", "Denim", "Floral", "Knitted", "Lacelike",
    "None", "Polka-dotted", "Striped", "Zigzagged",
};

const std::array<std::string, 11> kColumns = {
    "image_id", "label_id", "distance_cm", "inclination_deg", "azimuth_deg",
    "scale_ppcm", "lighting", "tension", "notes", "colors", "image_path",
};

[[noreturn]] void row_fail(const std::string& code, std::size_t line_no,
                           const std::string& what) {
    fail(code, "row at line " + std::to_string(line_no) + ": " + what);
}

double parse_real(const std::string& field, const char* name, std::size_t line_no) {
    double v = 0.0;
    if (!parse_double(field, v)) {
        row_fail("UnparsableNumber", line_no,
                 std::string(name) + " is not a number: '" + field + "'");
    }
    return v;
}

} // namespace

const std::string& label_name(int label_id) {
    if (label_id < 0 || label_id >= int(kLabelNames.size())) {
        fail("BadLabelId", "label_id " + std::to_string(label_id) + " outside 0..8");
    }
    return kLabelNames[std::size_t(label_id)];
}

int label_id_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
        if (kLabelNames[i] == name) return int(i);
    }
    fail("BadLabelId", "unknown texture name: '" + name + "'");
}

std::size_t Manifest::missing_count() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.missing ? 1 : 0;
    return n;
}

std::string Manifest::resolved_path(const ImageRecord& r) const {
    fs::path p(r.image_path);
    if (p.is_absolute() || base_dir.empty()) return r.image_path;
    return (fs::path(base_dir) / p).string();
}

void Manifest::rebuild_counts() {
    class_counts.clear();
    for (const auto& r : records) ++class_counts[r.label_id];
}

Manifest parse_manifest(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) fail("IoError", "cannot open manifest: " + csv_path);

    Manifest manifest;
    manifest.base_dir = fs::path(csv_path).parent_path().string();

    std::string line;
    if (!std::getline(in, line)) fail("MissingColumn", "manifest has no header row");
    const auto header = split_csv_line(line);
    if (header.size() != kColumns.size()) {
        fail("MissingColumn", "expected " + std::to_string(kColumns.size()) +
                                  " columns, got " + std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
        if (trim(header[i]) != kColumns[i]) {
            fail("MissingColumn", "column " + std::to_string(i + 1) + " must be '" +
                                      kColumns[i] + "', got '" + trim(header[i]) + "'");
        }
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != kColumns.size()) {
            row_fail("MissingColumn", line_no,
                     "expected " + std::to_string(kColumns.size()) + " fields, got " +
                         std::to_string(fields.size()));
        }

        ImageRecord rec;
        if (!parse_int64(fields[0], rec.image_id) || rec.image_id < 0) {
            row_fail("UnparsableNumber", line_no,
                     "image_id is not a non-negative integer: '" + fields[0] + "'");
        }
        std::int64_t label = 0;
        if (!parse_int64(fields[1], label)) {
            row_fail("UnparsableNumber", line_no,
                     "label_id is not an integer: '" + fields[1] + "'");
        }
        if (label < 0 || label > 8) {
            row_fail("BadLabelId", line_no, "label_id " + std::to_string(label) + " outside 0..8");
        }
        rec.label_id = int(label);

        rec.distance_cm = parse_real(fields[2], "distance_cm", line_no);
        rec.inclination_deg = parse_real(fields[3], "inclination_deg", line_no);
        rec.azimuth_deg = parse_real(fields[4], "azimuth_deg", line_no);
        rec.scale_ppcm = parse_real(fields[5], "scale_ppcm", line_no);
        if (rec.distance_cm <= 0.0) row_fail("BadValue", line_no, "distance_cm must be > 0");
        if (rec.inclination_deg <= 0.0 || rec.inclination_deg > 90.0) {
            row_fail("BadValue", line_no, "inclination_deg must be in (0, 90]");
        }
        if (rec.azimuth_deg <= 0.0 || rec.azimuth_deg > 180.0) {
            row_fail("BadValue", line_no, "azimuth_deg must be in (0, 180]");
        }
        if (rec.scale_ppcm <= 0.0) row_fail("BadValue", line_no, "scale_ppcm must be > 0");

        std::int64_t lighting = 0;
        if (!parse_int64(fields[6], lighting)) {
            row_fail("UnparsableNumber", line_no,
                     "lighting is not an integer: '" + fields[6] + "'");
        }
        if (lighting < 0 || lighting > 255) {
            row_fail("BadValue", line_no, "lighting must be in 0..255");
        }
        rec.lighting = int(lighting);

        const std::string tension = trim(fields[7]);
        if (tension == "taut") rec.taut = true;
        else if (tension == "hanging") rec.taut = false;
        else row_fail("BadValue", line_no, "tension must be taut|hanging, got '" + tension + "'");

        rec.notes = fields[8];
        for (const auto& c : split(fields[9], ';')) {
            const std::string name = trim(c);
            if (!name.empty()) rec.colors.push_back(name);
        }
        rec.image_path = fields[10];
        rec.missing = !fs::exists(manifest.resolved_path(rec));

        manifest.records.push_back(std::move(rec));
    }

    std::map<std::int64_t, std::size_t> seen;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto [it, inserted] = seen.emplace(manifest.records[i].image_id, i);
        if (!inserted) {
            fail("DuplicateImageId", "image_id " + std::to_string(manifest.records[i].image_id) +
                                         " appears more than once (records " +
                                         std::to_string(it->second + 1) + " and " +
                                         std::to_string(i + 1) + ")");
        }
    }

    manifest.rebuild_counts();
    return manifest;
}

void write_manifest(const Manifest& manifest, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) fail("IoError", "cannot write manifest: " + csv_path);

    out << join({kColumns.begin(), kColumns.end()}, ",") << "\n";
    for (const auto& r : manifest.records) {
        std::vector<std::string> fields;
        fields.push_back(std::to_string(r.image_id));
        fields.push_back(std::to_string(r.label_id));
        fields.push_back(format_double(r.distance_cm));
        fields.push_back(format_double(r.inclination_deg));
        fields.push_back(format_double(r.azimuth_deg));
        fields.push_back(format_double(r.scale_ppcm));
        fields.push_back(std::to_string(r.lighting));
        fields.push_back(r.taut ? "taut" : "hanging");
        fields.push_back(r.notes);
        fields.push_back(join(r.colors, ";"));
        fields.push_back(r.image_path);
        std::vector<std::string> quoted;
        quoted.reserve(fields.size());
        for (const auto& f : fields) quoted.push_back(csv_field(f));
        out << join(quoted, ",") << "\n";
    }
    if (!out) fail("IoError", "write failed: " + csv_path);
}

std::size_t stratified_train_count(double fraction, std::size_t class_size) {
    // round-half-up, with a snap so 0.5-boundary products that land a hair
    // below the half-integer (0.35 * 10 = 3.4999...96) still round up
    const double x = fraction * double(class_size) + 0.5 + 1e-9;
    return std::size_t(std::floor(x));
}

Split stratified_split(const Manifest& manifest, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        fail("InvalidArgument", "fraction must be in (0, 1)");
    }

    std::map<int, std::vector<std::int64_t>> by_class; // manifest order within class
    for (const auto& r : manifest.records) {
        if (!r.missing) by_class[r.label_id].push_back(r.image_id);
    }
    for (const auto& [label, n] : manifest.class_counts) {
        if (n > 0 && by_class[label].empty()) {
            fail("EmptyClass", "class " + std::to_string(label) + " has no usable records");
        }
    }

    Split split;
    split.fraction = fraction;
    split.seed = seed;
    for (auto& [label, ids] : by_class) {
        Rng rng(derive_seed(seed, std::uint64_t(label)));
        rng.shuffle(ids);
        const std::size_t n_train = stratified_train_count(fraction, ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            (i < n_train ? split.train_ids : split.test_ids).push_back(ids[i]);
        }
    }
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

} // namespace texfv

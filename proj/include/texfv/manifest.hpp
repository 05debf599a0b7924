#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "texfv/image_io.hpp"

namespace texfv {

/// One row of the 11-column manifest schema plus bookkeeping.
struct ImageRecord {
    std::int64_t image_id = 0;
    int label_id = 0;          // 0..8, see label_name()
    double distance_cm = 0.0;  // > 0
    double inclination_deg = 0.0; // (0, 90]
    double azimuth_deg = 0.0;     // (0, 180]
    double scale_ppcm = 0.0;      // pixels per cm, > 0
    int lighting = 0;             // LED drive level, 0..255
    bool taut = true;             // tension: taut | hanging
    std::string notes;
    std::vector<std::string> colors;
    std::string image_path;       // as written in the CSV
    bool missing = false;         // file absent at parse time

    bool operator==(const ImageRecord&) const = default;
};

struct Manifest {
    std::vector<ImageRecord> records;
    std::map<int, std::size_t> class_counts; // label_id -> count
    std::string base_dir; // directory of the source CSV; "" if built in memory

    std::size_t missing_count() const;
    /// image_path resolved against base_dir when relative.
    std::string resolved_path(const ImageRecord& r) const;
    /// Recomputes class_counts from records (call after manual edits).
    void rebuild_counts();
};

struct Split {
    std::vector<std::int64_t> train_ids; // sorted ascending
    std::vector<std::int64_t> test_ids;  // sorted ascending
    double fraction = 0.0;
    std::uint64_t seed = 0;
};

/// Texture name for label ids 0..8; throws BadLabelId otherwise.
const std::string& label_name(int label_id);

/// Inverse of label_name (exact match); throws BadLabelId on unknown names.
int label_id_from_name(const std::string& name);

/// Parses a manifest CSV. Records whose image file does not exist are kept
/// but flagged missing. Errors: MissingColumn, BadLabelId, DuplicateImageId,
/// UnparsableNumber, BadValue, IoError; messages name the offending row.
Manifest parse_manifest(const std::string& csv_path);

/// Writes the manifest in the exact schema parse_manifest reads
/// (parse(write(m)) is the identity on record contents).
void write_manifest(const Manifest& manifest, const std::string& csv_path);

/// Per-class train count: round-half-up(fraction * class size).
std::size_t stratified_train_count(double fraction, std::size_t class_size);

/// Seeded per-class split over usable (non-missing) records. Deterministic
/// for a fixed (manifest order, fraction, seed). Errors: InvalidArgument,
/// EmptyClass.
Split stratified_split(const Manifest& manifest, double fraction, std::uint64_t seed);

inline LoadedImage load_image(const Manifest& manifest, const ImageRecord& record) {
    return load_image(manifest.resolved_path(record));
}

} // namespace texfv

#include "texfv/embed.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "texfv/errors.hpp"
#include "texfv/rng.hpp"
#include "texfv/serial.hpp"
#include "texfv/text.hpp"

namespace texfv {

const std::vector<double>& EmbeddingTable::at(std::int64_t image_id) const {
    const auto it = entries.find(image_id);
    if (it == entries.end()) {
        fail("MissingFeatures", "no embedding for image_id " + std::to_string(image_id));
    }
    return it->second;
}

namespace {

EmbeddingTable load_embeddings_binary(const std::string& path) {
    auto in = open_input(path);
    expect_magic(in, "EMB1", "embedding");
    EmbeddingTable table;
    table.dim = int(read_le<std::uint32_t>(in));
    const std::uint64_t count = read_le<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id = std::int64_t(read_le<std::uint64_t>(in));
        std::vector<double> row(static_cast<std::size_t>(table.dim));
        for (double& v : row) v = read_le<float>(in);
        if (!table.entries.emplace(id, std::move(row)).second) {
            fail("DuplicateId", "image_id " + std::to_string(id) + " appears twice");
        }
    }
    return table;
}

EmbeddingTable load_embeddings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IoError", "cannot open embeddings: " + path);

    std::string line;
    if (!std::getline(in, line)) fail("BadMagic", "embedding CSV has no header: " + path);
    const auto header = split_csv_line(line);
    if (header.size() < 2 || trim(header[0]) != "image_id") {
        fail("BadMagic", "embedding CSV header must start with image_id,v0,...: " + path);
    }
    EmbeddingTable table;
    table.dim = int(header.size()) - 1;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        std::int64_t id = 0;
        if (!parse_int64(fields[0], id)) {
            fail("DimMismatch", "line " + std::to_string(line_no) + ": bad image_id");
        }
        if (int(fields.size()) - 1 != table.dim) {
            fail("DimMismatch", "image_id " + std::to_string(id) + ": row has " +
                                    std::to_string(fields.size() - 1) + " values, header says " +
                                    std::to_string(table.dim));
        }
        std::vector<double> row(static_cast<std::size_t>(table.dim));
        for (int d = 0; d < table.dim; ++d) {
            if (!parse_double(fields[std::size_t(d) + 1], row[std::size_t(d)])) {
                fail("DimMismatch", "image_id " + std::to_string(id) + ": value " +
                                        std::to_string(d) + " is not a number");
            }
        }
        if (!table.entries.emplace(id, std::move(row)).second) {
            fail("DuplicateId", "image_id " + std::to_string(id) + " appears twice");
        }
    }
    return table;
}

} // namespace

EmbeddingTable load_embeddings(const std::string& path) {
    {
        auto in = open_input(path);
        char magic[4] = {0};
        in.read(magic, 4);
        if (in && std::memcmp(magic, "EMB1", 4) == 0) return load_embeddings_binary(path);
    }
    return load_embeddings_csv(path);
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
    auto out = open_output(path);
    write_magic(out, "EMB1");
    write_le<std::uint32_t>(out, std::uint32_t(table.dim));
    write_le<std::uint64_t>(out, std::uint64_t(table.entries.size()));
    for (const auto& [id, row] : table.entries) {
        if (int(row.size()) != table.dim) {
            fail("DimMismatch", "image_id " + std::to_string(id) + " has dim " +
                                    std::to_string(row.size()));
        }
        write_le<std::uint64_t>(out, std::uint64_t(id));
        for (double v : row) write_le<float>(out, float(v));
    }
    if (!out) fail("IoError", "write failed: " + path);
}

FusedVector fuse(const FisherVector& ifv, const std::vector<double>& embedding) {
    if (!ifv.normalized) fail("InvalidArgument", "fuse requires a normalized IFV");
    FusedVector fused;
    fused.block_boundary = ifv.data.size();
    fused.data.reserve(ifv.data.size() + embedding.size());
    fused.data.insert(fused.data.end(), ifv.data.begin(), ifv.data.end());

    double norm_sq = 0.0;
    for (double v : embedding) norm_sq += v * v;
    const double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
    for (double v : embedding) fused.data.push_back(v * inv);
    return fused;
}

StandinEmbedder::StandinEmbedder(int descriptor_dim, int embedding_dim, std::uint64_t seed)
    : descriptor_dim_(descriptor_dim), embedding_dim_(embedding_dim) {
    projection_.resize(std::size_t(embedding_dim) * std::size_t(descriptor_dim));
    Rng rng(derive_seed(seed, 0x737464ULL)); // "std"-in stream
    const double scale = 1.0 / std::sqrt(double(descriptor_dim));
    for (double& v : projection_) v = rng.normal() * scale;
}

std::vector<double> StandinEmbedder::embed(const DescriptorMatrix& descriptors) const {
    if (descriptors.dim != descriptor_dim_) {
        fail("DimensionMismatch", "descriptor dim " + std::to_string(descriptors.dim) +
                                      " != projector dim " + std::to_string(descriptor_dim_));
    }
    std::vector<double> pooled(std::size_t(descriptor_dim_), 0.0);
    if (descriptors.count > 0) {
        for (std::size_t i = 0; i < descriptors.count; ++i) {
            const double* col = descriptors.column(i);
            for (int d = 0; d < descriptor_dim_; ++d) pooled[std::size_t(d)] += col[d];
        }
        for (double& v : pooled) v /= double(descriptors.count);
    }
    std::vector<double> out(std::size_t(embedding_dim_), 0.0);
    for (int e = 0; e < embedding_dim_; ++e) {
        const double* row = projection_.data() + std::size_t(e) * descriptor_dim_;
        double acc = 0.0;
        for (int d = 0; d < descriptor_dim_; ++d) acc += row[d] * pooled[std::size_t(d)];
        out[std::size_t(e)] = acc;
    }
    return out;
}

} // namespace texfv

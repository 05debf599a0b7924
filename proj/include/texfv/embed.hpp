#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "texfv/dsift.hpp"
#include "texfv/fisher.hpp"

namespace texfv {

/// Precomputed CNN embeddings keyed by image id. All entries share one dim.
struct EmbeddingTable {
    int dim = 0;
    std::map<std::int64_t, std::vector<double>> entries;

    const std::vector<double>& at(std::int64_t image_id) const;
    bool contains(std::int64_t image_id) const { return entries.count(image_id) != 0; }
};

/// Reads an embedding file: EMB1 binary (magic, u32 dim, u64 count, then
/// u64 image_id + dim float32 per entry) or CSV with header
/// image_id,v0,...,v{dim-1}. Errors: BadMagic, DimMismatch, DuplicateId,
/// IoError.
EmbeddingTable load_embeddings(const std::string& path);

/// Writes the EMB1 binary form.
void save_embeddings(const std::string& path, const EmbeddingTable& table);

/// IFV and embedding concatenated; each block L2-normalized independently.
struct FusedVector {
    std::vector<double> data;
    std::size_t block_boundary = 0; // IFV length; embedding follows
};

/// L2-normalizes the embedding block (a zero block stays zero) and
/// concatenates [ifv | embedding]. The IFV must already be normalized.
FusedVector fuse(const FisherVector& ifv, const std::vector<double>& embedding);

/// Deterministic stand-in for externally computed embeddings: a fixed seeded
/// random projection of the mean-pooled descriptors. Not a CNN feature; used
/// by tests and synthetic runs so the fusion path is exercisable end to end.
class StandinEmbedder {
public:
    StandinEmbedder(int descriptor_dim, int embedding_dim, std::uint64_t seed);
    std::vector<double> embed(const DescriptorMatrix& descriptors) const;
    int embedding_dim() const { return embedding_dim_; }

private:
    int descriptor_dim_;
    int embedding_dim_;
    std::vector<double> projection_; // embedding_dim x descriptor_dim, row-major
};

} // namespace texfv

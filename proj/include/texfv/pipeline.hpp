#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "texfv/dsift.hpp"
#include "texfv/embed.hpp"
#include "texfv/eval.hpp"
#include "texfv/gmm.hpp"
#include "texfv/manifest.hpp"
#include "texfv/svm.hpp"

namespace texfv {

struct EncodeParams {
    int gmm_k = 160;
    std::size_t gmm_pool = 200000; // max descriptors sampled for the GMM fit
    GmmFitOptions gmm_fit;
    /// Seeded per-image cap applied when building the evaluation cache
    /// (0 = keep every descriptor).
    std::size_t max_descriptors_per_image = 5000;
};

/// Per-image multiscale descriptors, capped and stored at float32 precision
/// (the DSF1 on-disk precision), keyed by image id. Immutable after build.
class DescriptorCache {
public:
    static DescriptorCache extract(const Manifest& manifest, const DsiftParams& params,
                                   std::size_t max_per_image, std::uint64_t seed, int workers,
                                   TimingTable* timings);

    DescriptorMatrix descriptors(std::int64_t image_id) const;
    bool contains(std::int64_t image_id) const { return entries_.count(image_id) != 0; }
    std::vector<std::int64_t> ids() const;
    int dim() const { return dim_; }
    bool same_content(const DescriptorCache& other) const;

private:
    struct Compact {
        std::size_t count = 0;
        std::vector<float> data;
        std::vector<std::uint8_t> scale_of;
    };
    int dim_ = 0;
    std::map<std::int64_t, Compact> entries_;
};

/// Seeded cap: keeps a uniform sample of at most max_count columns, original
/// order preserved; float32 quantization to match the DSF1 precision.
DescriptorMatrix cap_descriptors(const DescriptorMatrix& descriptors, std::size_t max_count,
                                 std::uint64_t seed);

/// Where embedding-style features come from: a loaded table or the stand-in.
class EmbeddingSource {
public:
    virtual ~EmbeddingSource() = default;
    virtual std::vector<double> get(std::int64_t image_id) const = 0;
    virtual bool covers(std::int64_t image_id) const = 0;
    virtual int dim() const = 0;
    virtual std::string kind() const = 0; // "table" or "standin"
};

std::shared_ptr<EmbeddingSource> make_table_source(EmbeddingTable table);
/// Stand-in: fixed seeded random projection of each image's mean-pooled
/// descriptors (not a CNN feature; labeled as such in reports).
std::shared_ptr<EmbeddingSource> make_standin_source(const DescriptorCache& cache,
                                                     int embedding_dim, std::uint64_t seed);

/// Feature providers for the three Figure-14 series. The IFV codebook is
/// refit per fold on train descriptors only; "fused" shares the same fit.
std::shared_ptr<FeatureProvider> make_embedding_provider(
    std::shared_ptr<EmbeddingSource> source);
std::shared_ptr<FeatureProvider> make_ifv_provider(const DescriptorCache& cache,
                                                   const EncodeParams& params);
std::shared_ptr<FeatureProvider> make_fused_provider(const DescriptorCache& cache,
                                                     const EncodeParams& params,
                                                     std::shared_ptr<EmbeddingSource> source);

/// Shared-codebook variants: the GMM is fit once on the given ids (leaky by
/// construction, exposed for the cheaper protocol variant); providers are
/// audit-exempt.
struct SharedGmm {
    GmmModel model;
    std::vector<std::int64_t> pool_ids;
};
SharedGmm fit_shared_gmm(const DescriptorCache& cache, const std::vector<std::int64_t>& ids,
                         const EncodeParams& params, std::uint64_t seed);
std::shared_ptr<FeatureProvider> make_ifv_provider_shared(const DescriptorCache& cache,
                                                          SharedGmm shared);
std::shared_ptr<FeatureProvider> make_fused_provider_shared(
    const DescriptorCache& cache, SharedGmm shared, std::shared_ptr<EmbeddingSource> source);

/// GMM pool assembly: concatenated train descriptors, uniformly subsampled
/// to at most params.gmm_pool columns (seeded).
DescriptorMatrix build_gmm_pool(const DescriptorCache& cache,
                                const std::vector<std::int64_t>& ids, std::size_t max_pool,
                                std::uint64_t seed);

/// Runs the same extraction with 1 worker and with `workers`, returning the
/// wall-clock ratio and whether the outputs are numerically identical.
struct WorkerComparison {
    double single_ms = 0.0;
    double multi_ms = 0.0;
    double speedup = 0.0;
    bool identical = false;
};
WorkerComparison compare_extraction_workers(const Manifest& manifest, const DsiftParams& params,
                                            std::size_t max_per_image, std::uint64_t seed,
                                            int workers);

} // namespace texfv

#include "texfv/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include "texfv/errors.hpp"
#include "texfv/fisher.hpp"
#include "texfv/image_io.hpp"
#include "texfv/parallel.hpp"
#include "texfv/rng.hpp"

namespace texfv {

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> l2_normalized(std::vector<double> v) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
    }
    return v;
}

} // namespace

DescriptorMatrix cap_descriptors(const DescriptorMatrix& descriptors, std::size_t max_count,
                                 std::uint64_t seed) {
    if (max_count == 0 || descriptors.count <= max_count) return descriptors;
    Rng rng(seed);
    auto keep = rng.sample_without_replacement(descriptors.count, max_count);
    std::sort(keep.begin(), keep.end()); // original order preserved

    DescriptorMatrix out;
    out.dim = descriptors.dim;
    out.count = keep.size();
    out.data.resize(std::size_t(out.dim) * out.count);
    out.scale_of.resize(out.count);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        std::copy_n(descriptors.column(keep[i]), out.dim, out.column(i));
        out.scale_of[i] = descriptors.scale_of[keep[i]];
    }
    return out;
}

DescriptorCache DescriptorCache::extract(const Manifest& manifest, const DsiftParams& params,
                                         std::size_t max_per_image, std::uint64_t seed,
                                         int workers, TimingTable* timings) {
    std::vector<const ImageRecord*> records;
    for (const auto& r : manifest.records) {
        if (!r.missing) records.push_back(&r);
    }

    DescriptorCache cache;
    cache.dim_ = params.descriptor_dim();

    std::vector<Compact> results(records.size());
    const double t0 = now_ms();
    parallel_for(records.size(), workers, [&](std::size_t i) {
        const ImageRecord& rec = *records[i];
        const LoadedImage image = load_image(manifest.resolved_path(rec));
        MultiscaleResult multi = extract_dsift_multiscale(image.gray, params);
        const DescriptorMatrix capped =
            cap_descriptors(multi.descriptors, max_per_image,
                            derive_seed(seed, fnv1a64("cap"), std::uint64_t(rec.image_id)));
        Compact& c = results[i];
        c.count = capped.count;
        c.data.assign(capped.data.begin(), capped.data.end()); // float32 quantization
        c.scale_of = capped.scale_of;
    });
    const double elapsed = now_ms() - t0;
    if (timings) timings->add("extract", elapsed, records.size(), workers);

    for (std::size_t i = 0; i < records.size(); ++i) {
        cache.entries_.emplace(records[i]->image_id, std::move(results[i]));
    }
    return cache;
}

DescriptorMatrix DescriptorCache::descriptors(std::int64_t image_id) const {
    const auto it = entries_.find(image_id);
    if (it == entries_.end()) {
        fail("MissingFeatures", "no descriptors cached for image_id " + std::to_string(image_id));
    }
    DescriptorMatrix m;
    m.dim = dim_;
    m.count = it->second.count;
    m.data.assign(it->second.data.begin(), it->second.data.end());
    m.scale_of = it->second.scale_of;
    return m;
}

std::vector<std::int64_t> DescriptorCache::ids() const {
    std::vector<std::int64_t> out;
    out.reserve(entries_.size());
    for (const auto& [id, c] : entries_) out.push_back(id);
    return out;
}

bool DescriptorCache::same_content(const DescriptorCache& other) const {
    if (dim_ != other.dim_ || entries_.size() != other.entries_.size()) return false;
    for (const auto& [id, c] : entries_) {
        const auto it = other.entries_.find(id);
        if (it == other.entries_.end()) return false;
        if (c.count != it->second.count || c.data != it->second.data ||
            c.scale_of != it->second.scale_of) {
            return false;
        }
    }
    return true;
}

DescriptorMatrix build_gmm_pool(const DescriptorCache& cache,
                                const std::vector<std::int64_t>& ids, std::size_t max_pool,
                                std::uint64_t seed) {
    DescriptorMatrix pool;
    pool.dim = cache.dim();
    for (const std::int64_t id : ids) {
        const DescriptorMatrix d = cache.descriptors(id);
        pool.append(d, 0);
    }
    if (max_pool > 0 && pool.count > max_pool) {
        pool = cap_descriptors(pool, max_pool, derive_seed(seed, fnv1a64("pool")));
    }
    return pool;
}

namespace {

// ---------------------------------------------------------------- embeddings

class TableSource final : public EmbeddingSource {
public:
    explicit TableSource(EmbeddingTable table) : table_(std::move(table)) {}
    std::vector<double> get(std::int64_t id) const override { return table_.at(id); }
    bool covers(std::int64_t id) const override { return table_.contains(id); }
    int dim() const override { return table_.dim; }
    std::string kind() const override { return "table"; }

private:
    EmbeddingTable table_;
};

class StandinSource final : public EmbeddingSource {
public:
    StandinSource(const DescriptorCache& cache, int embedding_dim, std::uint64_t seed)
        : cache_(&cache), embedder_(cache.dim(), embedding_dim, seed) {}
    std::vector<double> get(std::int64_t id) const override {
        return embedder_.embed(cache_->descriptors(id));
    }
    bool covers(std::int64_t id) const override { return cache_->contains(id); }
    int dim() const override { return embedder_.embedding_dim(); }
    std::string kind() const override { return "standin"; }

private:
    const DescriptorCache* cache_;
    StandinEmbedder embedder_;
};

// ---------------------------------------------------------------- providers

class EmbeddingFitted final : public FittedFeatures {
public:
    explicit EmbeddingFitted(std::shared_ptr<EmbeddingSource> source)
        : source_(std::move(source)) {}
    std::vector<double> features_for(std::int64_t id) const override {
        return l2_normalized(source_->get(id));
    }
    std::vector<std::int64_t> touched_ids() const override { return {}; }

private:
    std::shared_ptr<EmbeddingSource> source_;
};

class EmbeddingProvider final : public FeatureProvider {
public:
    explicit EmbeddingProvider(std::shared_ptr<EmbeddingSource> source)
        : source_(std::move(source)) {}
    std::string name() const override { return "embedding"; }
    std::shared_ptr<FittedFeatures> fit(const std::vector<std::int64_t>&, std::uint64_t,
                                        FoldContext&) const override {
        return std::make_shared<EmbeddingFitted>(source_);
    }
    bool covers(std::int64_t id) const override { return source_->covers(id); }

private:
    std::shared_ptr<EmbeddingSource> source_;
};

/// Per-fold IFV state: the fold's codebook plus a memo of encoded images so
/// the plain and fused feature sets encode each image once.
struct IfvFitted {
    GmmModel gmm;
    const DescriptorCache* cache = nullptr;
    std::vector<std::int64_t> touched;

    mutable std::mutex memo_mutex;
    mutable std::map<std::int64_t, std::shared_ptr<const std::vector<double>>> memo;

    std::shared_ptr<const std::vector<double>> ifv_for(std::int64_t id) const {
        {
            std::lock_guard<std::mutex> lock(memo_mutex);
            const auto it = memo.find(id);
            if (it != memo.end()) return it->second;
        }
        const FisherVector fv = encode_ifv(gmm, cache->descriptors(id));
        auto value = std::make_shared<const std::vector<double>>(std::move(fv.data));
        std::lock_guard<std::mutex> lock(memo_mutex);
        return memo.emplace(id, std::move(value)).first->second;
    }
};

std::shared_ptr<IfvFitted> fit_ifv_state(const DescriptorCache& cache,
                                         const EncodeParams& params,
                                         const std::vector<std::int64_t>& train_ids,
                                         std::uint64_t seed, FoldContext& ctx) {
    const auto it = ctx.shared.find("ifv");
    if (it != ctx.shared.end()) return std::static_pointer_cast<IfvFitted>(it->second);

    auto state = std::make_shared<IfvFitted>();
    state->cache = &cache;
    state->touched = train_ids;
    const double t0 = now_ms();
    const DescriptorMatrix pool =
        build_gmm_pool(cache, train_ids, params.gmm_pool, derive_seed(seed, fnv1a64("pool")));
    state->gmm = fit_gmm(pool, params.gmm_k, derive_seed(seed, fnv1a64("fit")), params.gmm_fit);
    if (ctx.record_timing) ctx.record_timing("gmm_fit", now_ms() - t0, 1);
    ctx.shared["ifv"] = state;
    return state;
}

class IfvView final : public FittedFeatures {
public:
    explicit IfvView(std::shared_ptr<IfvFitted> state) : state_(std::move(state)) {}
    std::vector<double> features_for(std::int64_t id) const override {
        return *state_->ifv_for(id);
    }
    std::vector<std::int64_t> touched_ids() const override { return state_->touched; }

private:
    std::shared_ptr<IfvFitted> state_;
};

class FusedView final : public FittedFeatures {
public:
    FusedView(std::shared_ptr<IfvFitted> state, std::shared_ptr<EmbeddingSource> source)
        : state_(std::move(state)), source_(std::move(source)) {}
    std::vector<double> features_for(std::int64_t id) const override {
        const auto ifv = state_->ifv_for(id);
        const std::vector<double> embedding = l2_normalized(source_->get(id));
        std::vector<double> out;
        out.reserve(ifv->size() + embedding.size());
        out.insert(out.end(), ifv->begin(), ifv->end());
        out.insert(out.end(), embedding.begin(), embedding.end());
        return out;
    }
    std::vector<std::int64_t> touched_ids() const override { return state_->touched; }

private:
    std::shared_ptr<IfvFitted> state_;
    std::shared_ptr<EmbeddingSource> source_;
};

class IfvProvider final : public FeatureProvider {
public:
    IfvProvider(const DescriptorCache& cache, EncodeParams params)
        : cache_(&cache), params_(std::move(params)) {}
    std::string name() const override { return "ifv"; }
    std::string fit_group() const override { return "ifv"; }
    std::shared_ptr<FittedFeatures> fit(const std::vector<std::int64_t>& train_ids,
                                        std::uint64_t seed, FoldContext& ctx) const override {
        return std::make_shared<IfvView>(fit_ifv_state(*cache_, params_, train_ids, seed, ctx));
    }
    bool covers(std::int64_t id) const override { return cache_->contains(id); }

private:
    const DescriptorCache* cache_;
    EncodeParams params_;
};

class FusedProvider final : public FeatureProvider {
public:
    FusedProvider(const DescriptorCache& cache, EncodeParams params,
                  std::shared_ptr<EmbeddingSource> source)
        : cache_(&cache), params_(std::move(params)), source_(std::move(source)) {}
    std::string name() const override { return "fused"; }
    std::string fit_group() const override { return "ifv"; }
    std::shared_ptr<FittedFeatures> fit(const std::vector<std::int64_t>& train_ids,
                                        std::uint64_t seed, FoldContext& ctx) const override {
        return std::make_shared<FusedView>(fit_ifv_state(*cache_, params_, train_ids, seed, ctx),
                                           source_);
    }
    bool covers(std::int64_t id) const override {
        return cache_->contains(id) && source_->covers(id);
    }

private:
    const DescriptorCache* cache_;
    EncodeParams params_;
    std::shared_ptr<EmbeddingSource> source_;
};

/// Shared-codebook provider: one GMM for every fold, fit up front.
class SharedIfvProvider final : public FeatureProvider {
public:
    SharedIfvProvider(const DescriptorCache& cache, SharedGmm shared, bool fused,
                      std::shared_ptr<EmbeddingSource> source)
        : cache_(&cache), shared_(std::move(shared)), fused_(fused),
          source_(std::move(source)) {}
    std::string name() const override { return fused_ ? "fused" : "ifv"; }
    std::string fit_group() const override { return "ifv"; }
    bool audit_exempt() const override { return true; }
    std::shared_ptr<FittedFeatures> fit(const std::vector<std::int64_t>&, std::uint64_t,
                                        FoldContext& ctx) const override {
        std::shared_ptr<IfvFitted> state;
        const auto it = ctx.shared.find("ifv");
        if (it != ctx.shared.end()) {
            state = std::static_pointer_cast<IfvFitted>(it->second);
        } else {
            state = std::make_shared<IfvFitted>();
            state->cache = cache_;
            state->gmm = shared_.model;
            state->touched = shared_.pool_ids;
            ctx.shared["ifv"] = state;
        }
        if (fused_) return std::make_shared<FusedView>(state, source_);
        return std::make_shared<IfvView>(state);
    }
    bool covers(std::int64_t id) const override {
        return cache_->contains(id) && (!fused_ || source_->covers(id));
    }

private:
    const DescriptorCache* cache_;
    SharedGmm shared_;
    bool fused_;
    std::shared_ptr<EmbeddingSource> source_;
};

} // namespace

std::shared_ptr<EmbeddingSource> make_table_source(EmbeddingTable table) {
    return std::make_shared<TableSource>(std::move(table));
}

std::shared_ptr<EmbeddingSource> make_standin_source(const DescriptorCache& cache,
                                                     int embedding_dim, std::uint64_t seed) {
    return std::make_shared<StandinSource>(cache, embedding_dim, seed);
}

std::shared_ptr<FeatureProvider> make_embedding_provider(
    std::shared_ptr<EmbeddingSource> source) {
    return std::make_shared<EmbeddingProvider>(std::move(source));
}

std::shared_ptr<FeatureProvider> make_ifv_provider(const DescriptorCache& cache,
                                                   const EncodeParams& params) {
    return std::make_shared<IfvProvider>(cache, params);
}

std::shared_ptr<FeatureProvider> make_fused_provider(const DescriptorCache& cache,
                                                     const EncodeParams& params,
                                                     std::shared_ptr<EmbeddingSource> source) {
    return std::make_shared<FusedProvider>(cache, params, std::move(source));
}

SharedGmm fit_shared_gmm(const DescriptorCache& cache, const std::vector<std::int64_t>& ids,
                         const EncodeParams& params, std::uint64_t seed) {
    SharedGmm shared;
    shared.pool_ids = ids;
    const DescriptorMatrix pool =
        build_gmm_pool(cache, ids, params.gmm_pool, derive_seed(seed, fnv1a64("pool")));
    shared.model =
        fit_gmm(pool, params.gmm_k, derive_seed(seed, fnv1a64("fit")), params.gmm_fit);
    return shared;
}

std::shared_ptr<FeatureProvider> make_ifv_provider_shared(const DescriptorCache& cache,
                                                          SharedGmm shared) {
    return std::make_shared<SharedIfvProvider>(cache, std::move(shared), false, nullptr);
}

std::shared_ptr<FeatureProvider> make_fused_provider_shared(
    const DescriptorCache& cache, SharedGmm shared, std::shared_ptr<EmbeddingSource> source) {
    return std::make_shared<SharedIfvProvider>(cache, std::move(shared), true,
                                               std::move(source));
}

WorkerComparison compare_extraction_workers(const Manifest& manifest, const DsiftParams& params,
                                            std::size_t max_per_image, std::uint64_t seed,
                                            int workers) {
    WorkerComparison cmp;
    double t0 = now_ms();
    const DescriptorCache single =
        DescriptorCache::extract(manifest, params, max_per_image, seed, 1, nullptr);
    cmp.single_ms = now_ms() - t0;

    t0 = now_ms();
    const DescriptorCache multi =
        DescriptorCache::extract(manifest, params, max_per_image, seed, workers, nullptr);
    cmp.multi_ms = now_ms() - t0;

    cmp.speedup = cmp.multi_ms > 0.0 ? cmp.single_ms / cmp.multi_ms : 0.0;
    cmp.identical = single.same_content(multi);
    return cmp;
}

} // namespace texfv

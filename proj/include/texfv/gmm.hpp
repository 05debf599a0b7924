#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texfv/dsift.hpp"

namespace texfv {

/// Diagonal-covariance Gaussian mixture used as the Fisher vector codebook.
/// means/variances are row-major K x D (component k occupies [k*D, (k+1)*D)).
struct GmmModel {
    int K = 0;
    int D = 0;
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;

    struct TrainingMeta {
        std::size_t descriptor_count = 0;
        int iterations = 0;
        double final_log_likelihood = 0.0; // average per descriptor
        int reseeds = 0;
        std::vector<double> log_likelihood_trace; // one entry per EM iteration
    } meta;

    const double* mean(int k) const { return means.data() + std::size_t(k) * D; }
    const double* variance(int k) const { return variances.data() + std::size_t(k) * D; }

    void validate() const; // weights sum to 1, variances >= floor, finite
};

struct GmmFitOptions {
    int max_iter = 100;
    double tol = 1e-4;            // relative average log-likelihood improvement
    double variance_floor = 1e-4;
};

/// k-means++ seeded initialization followed by EM. Deterministic for a fixed
/// (pool, K, seed). A component whose expected count drops below 1 is
/// reseeded once, then DegenerateComponent is raised.
/// Errors: TooFewDescriptors, DegenerateComponent, InvalidArgument.
GmmModel fit_gmm(const DescriptorMatrix& pool, int K, std::uint64_t seed,
                 const GmmFitOptions& options = {});

/// Soft assignments gamma_k for one descriptor; log-space with log-sum-exp,
/// sums to 1 within 1e-9.
std::vector<double> posteriors(const GmmModel& model, const double* descriptor);

/// Average per-descriptor log-likelihood of a descriptor set under the model.
double average_log_likelihood(const GmmModel& model, const DescriptorMatrix& descriptors);

/// GMM1 container: magic, u32 K, u32 D, then weights, means, variances as
/// float64 little-endian (row-major).
void save_gmm(const std::string& path, const GmmModel& model);
GmmModel load_gmm(const std::string& path);

} // namespace texfv

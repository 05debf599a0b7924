#include "texfv/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "gmm_kernels.hpp"
#include "texfv/errors.hpp"
#include "texfv/rng.hpp"
#include "texfv/serial.hpp"

namespace texfv {

namespace {

using detail::kGmmBlock;
using detail::MatrixMap;

struct SufficientStats {
    Eigen::VectorXd nk;     // K
    Eigen::MatrixXd sum_x;  // K x D
    Eigen::MatrixXd sum_xx; // K x D
    double log_likelihood = 0.0;

    SufficientStats(int k, int d)
        : nk(Eigen::VectorXd::Zero(k)),
          sum_x(Eigen::MatrixXd::Zero(k, d)),
          sum_xx(Eigen::MatrixXd::Zero(k, d)) {}
};

SufficientStats accumulate_stats(const GmmModel& model, MatrixMap x) {
    const std::size_t n = std::size_t(x.cols());
    const detail::LogDensityCoeffs f = detail::density_coeffs(model);
    SufficientStats total(model.K, model.D);
    Eigen::MatrixXd gamma;
    for (std::size_t begin = 0; begin < n; begin += kGmmBlock) {
        const std::size_t end = std::min(begin + kGmmBlock, n);
        total.log_likelihood += detail::block_posteriors(f, x, begin, end, gamma);
        const auto block = x.middleCols(Eigen::Index(begin), Eigen::Index(end - begin));
        total.nk += gamma.rowwise().sum();
        total.sum_x += gamma * block.transpose();
        total.sum_xx += gamma * block.cwiseProduct(block).transpose();
    }
    return total;
}

std::vector<double> global_variance(MatrixMap x, double floor_value) {
    const Eigen::VectorXd mean = x.rowwise().mean();
    Eigen::VectorXd var = (x.colwise() - mean).cwiseAbs2().rowwise().mean();
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index d = 0; d < x.rows(); ++d) out[std::size_t(d)] = std::max(var(d), floor_value);
    return out;
}

/// Seeded k-means++ center selection; returns column indices into x.
std::vector<std::size_t> kmeans_pp_centers(MatrixMap x, int K, Rng& rng) {
    const std::size_t n = std::size_t(x.cols());
    std::vector<std::size_t> centers;
    centers.reserve(std::size_t(K));
    centers.push_back(std::size_t(rng.uniform_u64(n)));

    Eigen::VectorXd dist2 =
        (x.colwise() - x.col(Eigen::Index(centers[0]))).colwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
        const double total = dist2.sum();
        std::size_t pick = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2(Eigen::Index(i));
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::size_t(rng.uniform_u64(n)); // all remaining mass at the centers
        }
        centers.push_back(pick);
        dist2 = dist2.cwiseMin(
            (x.colwise() - x.col(Eigen::Index(pick))).colwise().squaredNorm().transpose());
    }
    return centers;
}

GmmModel initial_model(MatrixMap x, int K, Rng& rng, double floor_value) {
    const int D = int(x.rows());
    const std::size_t n = std::size_t(x.cols());
    const auto centers = kmeans_pp_centers(x, K, rng);

    // one hard-assignment pass for starting weights/means/variances
    Eigen::MatrixXd c(D, K);
    for (int k = 0; k < K; ++k) c.col(k) = x.col(Eigen::Index(centers[std::size_t(k)]));

    std::vector<std::size_t> counts(std::size_t(K), 0);
    Eigen::MatrixXd sum_x = Eigen::MatrixXd::Zero(D, K);
    Eigen::MatrixXd sum_xx = Eigen::MatrixXd::Zero(D, K);
    const Eigen::VectorXd c_norm2 = c.colwise().squaredNorm();
    for (std::size_t begin = 0; begin < n; begin += kGmmBlock) {
        const auto cols = Eigen::Index(std::min(begin + kGmmBlock, n) - begin);
        const auto block = x.middleCols(Eigen::Index(begin), cols);
        Eigen::MatrixXd scores = c.transpose() * block; // K x cols
        for (Eigen::Index j = 0; j < cols; ++j) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                const double d = c_norm2(k) - 2.0 * scores(k, j);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            ++counts[std::size_t(best)];
            sum_x.col(best) += block.col(j);
            sum_xx.col(best) += block.col(j).cwiseAbs2();
        }
    }

    const std::vector<double> fallback_var = global_variance(x, floor_value);
    GmmModel model;
    model.K = K;
    model.D = D;
    model.weights.resize(std::size_t(K));
    model.means.resize(std::size_t(K) * D);
    model.variances.resize(std::size_t(K) * D);
    for (int k = 0; k < K; ++k) {
        const std::size_t cnt = counts[std::size_t(k)];
        model.weights[std::size_t(k)] = std::max(double(cnt), 1.0) / double(n);
        for (int d = 0; d < D; ++d) {
            double mu, var;
            if (cnt == 0) {
                mu = c(d, k);
                var = fallback_var[std::size_t(d)];
            } else {
                mu = sum_x(d, k) / double(cnt);
                var = cnt < 2 ? fallback_var[std::size_t(d)]
                              : std::max(sum_xx(d, k) / double(cnt) - mu * mu, floor_value);
            }
            model.means[std::size_t(k) * D + d] = mu;
            model.variances[std::size_t(k) * D + d] = var;
        }
    }
    const double wsum = std::accumulate(model.weights.begin(), model.weights.end(), 0.0);
    for (double& w : model.weights) w /= wsum;
    return model;
}

} // namespace

void GmmModel::validate() const {
    if (K < 1 || D < 1) fail("InvalidArgument", "GMM must have K >= 1, D >= 1");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) fail("InvalidArgument", "GMM weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("InvalidArgument", "GMM weights must sum to 1");
    for (double v : variances) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            fail("InvalidArgument", "GMM variances must be positive and finite");
        }
    }
}

GmmModel fit_gmm(const DescriptorMatrix& pool, int K, std::uint64_t seed,
                 const GmmFitOptions& options) {
    if (K < 1) fail("InvalidArgument", "K must be >= 1");
    if (pool.count < std::size_t(K)) {
        fail("TooFewDescriptors", "pool of " + std::to_string(pool.count) +
                                      " descriptors cannot fit K=" + std::to_string(K));
    }

    MatrixMap x(pool.data.data(), pool.dim, Eigen::Index(pool.count));
    Rng rng(derive_seed(seed, 0x676d6dULL)); // "gmm" stream
    GmmModel model = initial_model(x, K, rng, options.variance_floor);
    model.meta.descriptor_count = pool.count;

    const double n = double(pool.count);
    std::vector<bool> reseeded(std::size_t(K), false);
    double prev_avg_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < options.max_iter; ++iter) {
        const SufficientStats stats = accumulate_stats(model, x);
        const double avg_ll = stats.log_likelihood / n;
        model.meta.log_likelihood_trace.push_back(avg_ll);
        model.meta.final_log_likelihood = avg_ll;
        model.meta.iterations = iter + 1;

        // reseed starving components before trusting their statistics
        bool did_reseed = false;
        for (int k = 0; k < K; ++k) {
            if (stats.nk(k) >= 1.0) continue;
            if (reseeded[std::size_t(k)]) {
                fail("DegenerateComponent",
                     "component " + std::to_string(k) + " starved twice (expected count " +
                         std::to_string(stats.nk(k)) + ")");
            }
            reseeded[std::size_t(k)] = true;
            ++model.meta.reseeds;
            did_reseed = true;
            const std::size_t pick = std::size_t(rng.uniform_u64(pool.count));
            const std::vector<double> fallback_var = global_variance(x, options.variance_floor);
            for (int d = 0; d < model.D; ++d) {
                model.means[std::size_t(k) * model.D + d] = x(d, Eigen::Index(pick));
                model.variances[std::size_t(k) * model.D + d] = fallback_var[std::size_t(d)];
            }
            model.weights[std::size_t(k)] = 1.0 / double(K);
            const double wsum =
                std::accumulate(model.weights.begin(), model.weights.end(), 0.0);
            for (double& w : model.weights) w /= wsum;
        }
        if (did_reseed) {
            prev_avg_ll = -std::numeric_limits<double>::infinity();
            continue;
        }

        // M-step
        for (int k = 0; k < K; ++k) {
            const double nk = stats.nk(k);
            model.weights[std::size_t(k)] = nk / n;
            for (int d = 0; d < model.D; ++d) {
                const double mu = stats.sum_x(k, d) / nk;
                const double var = stats.sum_xx(k, d) / nk - mu * mu;
                model.means[std::size_t(k) * model.D + d] = mu;
                model.variances[std::size_t(k) * model.D + d] =
                    std::max(var, options.variance_floor);
            }
        }

        if (std::isfinite(prev_avg_ll)) {
            const double improvement =
                (avg_ll - prev_avg_ll) / std::max(std::abs(prev_avg_ll), 1e-12);
            if (improvement < options.tol) break;
        }
        prev_avg_ll = avg_ll;
    }

    model.validate();
    return model;
}

std::vector<double> posteriors(const GmmModel& model, const double* descriptor) {
    const int K = model.K;
    const int D = model.D;
    std::vector<double> logp(static_cast<std::size_t>(K));
    constexpr double log_two_pi = 1.8378770664093454836;
    for (int k = 0; k < K; ++k) {
        double acc = std::log(model.weights[std::size_t(k)]);
        const double* mu = model.mean(k);
        const double* var = model.variance(k);
        for (int d = 0; d < D; ++d) {
            const double diff = descriptor[d] - mu[d];
            acc -= 0.5 * (log_two_pi + std::log(var[d]) + diff * diff / var[d]);
        }
        logp[std::size_t(k)] = acc;
    }
    const double m = *std::max_element(logp.begin(), logp.end());
    double sum = 0.0;
    for (double v : logp) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    std::vector<double> gamma(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) gamma[std::size_t(k)] = std::exp(logp[std::size_t(k)] - lse);
    return gamma;
}

double average_log_likelihood(const GmmModel& model, const DescriptorMatrix& descriptors) {
    if (descriptors.count == 0) fail("InvalidArgument", "empty descriptor set");
    MatrixMap x(descriptors.data.data(), descriptors.dim, Eigen::Index(descriptors.count));
    const detail::LogDensityCoeffs f = detail::density_coeffs(model);
    double total = 0.0;
    Eigen::MatrixXd gamma;
    for (std::size_t begin = 0; begin < descriptors.count; begin += kGmmBlock) {
        total += detail::block_posteriors(f, x, begin,
                                          std::min(begin + kGmmBlock, descriptors.count), gamma);
    }
    return total / double(descriptors.count);
}

void save_gmm(const std::string& path, const GmmModel& model) {
    auto out = open_output(path);
    write_magic(out, "GMM1");
    write_le<std::uint32_t>(out, std::uint32_t(model.K));
    write_le<std::uint32_t>(out, std::uint32_t(model.D));
    for (double w : model.weights) write_le<double>(out, w);
    for (double m : model.means) write_le<double>(out, m);
    for (double v : model.variances) write_le<double>(out, v);
    if (!out) fail("IoError", "write failed: " + path);
}

GmmModel load_gmm(const std::string& path) {
    auto in = open_input(path);
    expect_magic(in, "GMM1", "GMM");
    GmmModel model;
    model.K = int(read_le<std::uint32_t>(in));
    model.D = int(read_le<std::uint32_t>(in));
    model.weights.resize(std::size_t(model.K));
    model.means.resize(std::size_t(model.K) * model.D);
    model.variances.resize(std::size_t(model.K) * model.D);
    for (double& w : model.weights) w = read_le<double>(in);
    for (double& m : model.means) m = read_le<double>(in);
    for (double& v : model.variances) v = read_le<double>(in);
    model.validate();
    return model;
}

} // namespace texfv

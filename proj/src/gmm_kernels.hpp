#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "texfv/gmm.hpp"

namespace texfv::detail {

using MatrixMap = Eigen::Map<const Eigen::MatrixXd>;

inline constexpr std::size_t kGmmBlock = 4096; // fixed block so reductions are reproducible

/// Per-component affine form of the diagonal Gaussian log-density:
/// log(w_k p_k(x)) = a_k . x^2 + b_k . x + c_k.
struct LogDensityCoeffs {
    Eigen::MatrixXd a; // K x D
    Eigen::MatrixXd b; // K x D
    Eigen::VectorXd c; // K
};

inline LogDensityCoeffs density_coeffs(const GmmModel& model) {
    const int K = model.K;
    const int D = model.D;
    LogDensityCoeffs f{Eigen::MatrixXd(K, D), Eigen::MatrixXd(K, D), Eigen::VectorXd(K)};
    constexpr double log_two_pi = 1.8378770664093454836;
    for (int k = 0; k < K; ++k) {
        double c = std::log(model.weights[std::size_t(k)]);
        for (int d = 0; d < D; ++d) {
            const double var = model.variances[std::size_t(k) * D + d];
            const double mu = model.means[std::size_t(k) * D + d];
            f.a(k, d) = -0.5 / var;
            f.b(k, d) = mu / var;
            c -= 0.5 * (log_two_pi + std::log(var) + mu * mu / var);
        }
        f.c(k) = c;
    }
    return f;
}

/// Fills gamma (K x block width) with posteriors for columns [begin, end) of
/// x and returns the summed log-sum-exp (the block's log-likelihood).
inline double block_posteriors(const LogDensityCoeffs& f, MatrixMap x, std::size_t begin,
                               std::size_t end, Eigen::MatrixXd& gamma) {
    const auto n = Eigen::Index(end - begin);
    const auto block = x.middleCols(Eigen::Index(begin), n);
    Eigen::MatrixXd block_sq = block.cwiseProduct(block);
    Eigen::MatrixXd logp = f.a * block_sq + f.b * block;
    logp.colwise() += f.c;

    gamma.resize(f.a.rows(), n);
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double m = logp.col(j).maxCoeff();
        const double lse = m + std::log((logp.col(j).array() - m).exp().sum());
        total += lse;
        gamma.col(j) = (logp.col(j).array() - lse).exp();
    }
    return total;
}

} // namespace texfv::detail

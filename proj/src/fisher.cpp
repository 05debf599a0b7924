#include "texfv/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "gmm_kernels.hpp"
#include "texfv/errors.hpp"

namespace texfv {

namespace {

/// Column order that depends only on descriptor values, not on input order.
std::vector<std::size_t> canonical_order(const DescriptorMatrix& m) {
    std::vector<std::size_t> order(m.count);
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double* ca = m.column(a);
        const double* cb = m.column(b);
        return std::lexicographical_compare(ca, ca + m.dim, cb, cb + m.dim);
    });
    return order;
}

} // namespace

double signed_sqrt(double z) {
    return z < 0.0 ? -std::sqrt(-z) : std::sqrt(z);
}

std::vector<double> ifv_unnormalized(const GmmModel& model, const DescriptorMatrix& descriptors) {
    if (descriptors.dim != model.D) {
        fail("DimensionMismatch", "descriptor dim " + std::to_string(descriptors.dim) +
                                      " != model D " + std::to_string(model.D));
    }
    const int K = model.K;
    const int D = model.D;
    std::vector<double> out(fisher_dim(model), 0.0);
    const std::size_t n = descriptors.count;
    if (n == 0) return out;

    // materialize columns in canonical order
    DescriptorMatrix sorted;
    sorted.dim = D;
    sorted.count = n;
    sorted.data.resize(std::size_t(D) * n);
    const auto order = canonical_order(descriptors);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(descriptors.column(order[i]), D, sorted.column(i));
    }

    detail::MatrixMap x(sorted.data.data(), D, Eigen::Index(n));
    const detail::LogDensityCoeffs f = detail::density_coeffs(model);

    Eigen::VectorXd nk = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd sum_x = Eigen::MatrixXd::Zero(K, D);
    Eigen::MatrixXd sum_xx = Eigen::MatrixXd::Zero(K, D);
    Eigen::MatrixXd gamma;
    for (std::size_t begin = 0; begin < n; begin += detail::kGmmBlock) {
        const std::size_t end = std::min(begin + detail::kGmmBlock, n);
        detail::block_posteriors(f, x, begin, end, gamma);
        const auto block = x.middleCols(Eigen::Index(begin), Eigen::Index(end - begin));
        nk += gamma.rowwise().sum();
        sum_x += gamma * block.transpose();
        sum_xx += gamma * block.cwiseProduct(block).transpose();
    }

    const double inv_n = 1.0 / double(n);
    for (int k = 0; k < K; ++k) {
        const double w = model.weights[std::size_t(k)];
        const double mean_scale = inv_n / std::sqrt(w);
        const double sigma_scale = inv_n / std::sqrt(2.0 * w);
        for (int d = 0; d < D; ++d) {
            const double mu = model.means[std::size_t(k) * D + d];
            const double var = model.variances[std::size_t(k) * D + d];
            const double sigma = std::sqrt(var);
            const double centered = sum_x(k, d) - mu * nk(k);
            out[std::size_t(k) * D + d] = mean_scale * centered / sigma;
            const double second =
                sum_xx(k, d) - 2.0 * mu * sum_x(k, d) + (mu * mu - var) * nk(k);
            out[std::size_t(K) * D + std::size_t(k) * D + d] = sigma_scale * second / var;
        }
    }
    return out;
}

FisherVector encode_ifv(const GmmModel& model, const DescriptorMatrix& descriptors) {
    FisherVector fv;
    if (descriptors.count == 0) {
        // defined degenerate case: the zero vector, flagged normalized
        fv.data.assign(fisher_dim(model), 0.0);
        fv.normalized = true;
        return fv;
    }
    fv.data = ifv_unnormalized(model, descriptors);
    double norm_sq = 0.0;
    for (double& v : fv.data) {
        v = signed_sqrt(v);
        norm_sq += v * v;
    }
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : fv.data) v *= inv;
    }
    fv.normalized = true;
    return fv;
}

} // namespace texfv

#pragma once

// Reference solver for the binary hinge-loss SVM primal,
//   P(w, b) = lambda/2 (|w|^2 + b^2) + mean_i hinge(y_i (w.x_i + b)),
// by plain subgradient descent with a 1/(lambda t) step and best-iterate
// tracking. Slow and dumb on purpose; used to cross-check SDCA optima.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracles {

struct SubgradientResult {
    std::vector<double> w;
    double bias = 0.0;
    double best_primal = 0.0;
};

inline double svm_primal(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
                         const std::vector<double>& w, double bias, double lambda) {
    const std::size_t dim = w.size();
    double hinge = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double score = bias;
        for (std::size_t d = 0; d < dim; ++d) score += w[d] * xs[i][d];
        hinge += std::max(0.0, 1.0 - ys[i] * score);
    }
    double reg = bias * bias;
    for (double v : w) reg += v * v;
    return 0.5 * lambda * reg + hinge / double(xs.size());
}

inline SubgradientResult subgradient_svm(const std::vector<std::vector<double>>& xs,
                                         const std::vector<int>& ys, double lambda,
                                         std::size_t steps) {
    const std::size_t n = xs.size();
    const std::size_t dim = xs[0].size();
    std::vector<double> w(dim, 0.0);
    double bias = 0.0;

    SubgradientResult best;
    best.w = w;
    best.bias = bias;
    best.best_primal = svm_primal(xs, ys, w, bias, lambda);

    std::vector<double> grad(dim);
    for (std::size_t t = 1; t <= steps; ++t) {
        for (std::size_t d = 0; d < dim; ++d) grad[d] = lambda * w[d];
        double grad_b = lambda * bias;
        for (std::size_t i = 0; i < n; ++i) {
            double score = bias;
            for (std::size_t d = 0; d < dim; ++d) score += w[d] * xs[i][d];
            if (ys[i] * score < 1.0) {
                for (std::size_t d = 0; d < dim; ++d) grad[d] -= ys[i] * xs[i][d] / double(n);
                grad_b -= ys[i] / double(n);
            }
        }
        const double step = 1.0 / (lambda * (double(t) + 10.0));
        for (std::size_t d = 0; d < dim; ++d) w[d] -= step * grad[d];
        bias -= step * grad_b;

        if (t % 16 == 0 || t == steps) {
            const double primal = svm_primal(xs, ys, w, bias, lambda);
            if (primal < best.best_primal) {
                best.w = w;
                best.bias = bias;
                best.best_primal = primal;
            }
        }
    }
    return best;
}

} // namespace oracles

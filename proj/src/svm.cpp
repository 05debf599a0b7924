#include "texfv/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "texfv/errors.hpp"
#include "texfv/rng.hpp"
#include "texfv/serial.hpp"

namespace texfv {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

struct BinaryResult {
    std::vector<double> w; // augmented (dim + 1)
    LinearSvmModel::ClassMeta meta;
};

/// SDCA on one binary problem. ys in {-1, +1}; x rows are augmented with a
/// trailing constant 1 (norms_sq includes it).
BinaryResult solve_binary(const std::vector<std::vector<double>>& features,
                          const std::vector<double>& ys, const std::vector<double>& norms_sq,
                          double lambda, const SdcaOptions& options, std::uint64_t seed) {
    const std::size_t n = features.size();
    const std::size_t aug_dim = features[0].size() + 1;
    const double box = 1.0 / (lambda * double(n));

    BinaryResult result;
    result.w.assign(aug_dim, 0.0);
    std::vector<double> a(n, 0.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    Rng rng(seed);

    double* w = result.w.data();
    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
        rng.shuffle(perm);
        for (const std::size_t i : perm) {
            const double* x = features[i].data();
            const double y = ys[i];
            const double score = dot(w, x, aug_dim - 1) + w[aug_dim - 1];
            const double delta = (1.0 - y * score) / norms_sq[i];
            const double a_new = std::clamp(a[i] + delta, 0.0, box);
            const double change = a_new - a[i];
            if (change != 0.0) {
                a[i] = a_new;
                axpy(change * y, x, w, aug_dim - 1);
                w[aug_dim - 1] += change * y;
            }
        }

        // primal/dual objectives and the duality gap
        const double w_norm_sq = dot(w, w, aug_dim);
        double hinge_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double score = dot(w, features[i].data(), aug_dim - 1) + w[aug_dim - 1];
            hinge_sum += std::max(0.0, 1.0 - ys[i] * score);
        }
        const double primal = 0.5 * lambda * w_norm_sq + hinge_sum / double(n);
        const double a_sum = std::accumulate(a.begin(), a.end(), 0.0);
        const double dual = lambda * a_sum - 0.5 * lambda * w_norm_sq;

        result.meta.epochs = epoch + 1;
        result.meta.duality_gap = primal - dual;
        result.meta.dual_trace.push_back(dual);
        if (result.meta.duality_gap <= options.gap_tol) break;
    }
    return result;
}

} // namespace

LinearSvmModel train_sdca(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels, const SdcaOptions& options,
                          std::uint64_t seed) {
    if (features.empty() || features.size() != labels.size()) {
        fail("InvalidArgument", "features and labels must be non-empty and the same length");
    }
    const std::size_t dim = features[0].size();
    for (const auto& f : features) {
        if (f.size() != dim) {
            fail("DimensionMismatch", "feature vectors must all share one dim");
        }
    }
    if (options.lambda < 0.0) fail("NonPositiveLambda", "lambda must be > 0");
    const double lambda =
        options.lambda == 0.0 ? 1.0 / double(features.size()) : options.lambda;

    const std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) fail("SingleClass", "training set has a single class");

    std::vector<double> norms_sq(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        norms_sq[i] = dot(features[i].data(), features[i].data(), dim) + 1.0;
    }

    LinearSvmModel model;
    model.dim = int(dim);
    model.lambda = lambda;
    model.class_ids.assign(distinct.begin(), distinct.end());
    model.num_classes = int(model.class_ids.size());
    model.weights.resize(std::size_t(model.num_classes) * dim);
    model.bias.resize(std::size_t(model.num_classes));
    model.training_meta.resize(std::size_t(model.num_classes));

    std::vector<double> ys(features.size());
    for (int c = 0; c < model.num_classes; ++c) {
        const int cls = model.class_ids[std::size_t(c)];
        for (std::size_t i = 0; i < labels.size(); ++i) {
            ys[i] = labels[i] == cls ? 1.0 : -1.0;
        }
        BinaryResult res = solve_binary(features, ys, norms_sq, lambda, options,
                                        derive_seed(seed, std::uint64_t(cls)));
        std::copy_n(res.w.data(), dim, model.weights.data() + std::size_t(c) * dim);
        model.bias[std::size_t(c)] = res.w[dim];
        model.training_meta[std::size_t(c)] = std::move(res.meta);
    }
    return model;
}

std::vector<double> decision_scores(const LinearSvmModel& model, const std::vector<double>& x) {
    if (int(x.size()) != model.dim) {
        fail("DimensionMismatch", "input dim " + std::to_string(x.size()) + " != model dim " +
                                      std::to_string(model.dim));
    }
    std::vector<double> scores(static_cast<std::size_t>(model.num_classes));
    for (int c = 0; c < model.num_classes; ++c) {
        scores[std::size_t(c)] =
            dot(model.weight_row(c), x.data(), std::size_t(model.dim)) + model.bias[std::size_t(c)];
    }
    return scores;
}

int predict(const LinearSvmModel& model, const std::vector<double>& x) {
    const auto scores = decision_scores(model, x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c; // strict: ties keep the lower class id
    }
    return model.class_ids[best];
}

double binary_primal_objective(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& ys, const std::vector<double>& weights,
                               double bias, double lambda) {
    const std::size_t dim = weights.size();
    double hinge_sum = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const double score = dot(weights.data(), features[i].data(), dim) + bias;
        hinge_sum += std::max(0.0, 1.0 - double(ys[i]) * score);
    }
    const double w_norm_sq = dot(weights.data(), weights.data(), dim) + bias * bias;
    return 0.5 * lambda * w_norm_sq + hinge_sum / double(features.size());
}

void save_svm(const std::string& path, const LinearSvmModel& model) {
    auto out = open_output(path);
    write_magic(out, "SVM1");
    write_le<std::uint32_t>(out, std::uint32_t(model.num_classes));
    write_le<std::uint32_t>(out, std::uint32_t(model.dim));
    write_le<double>(out, model.lambda);
    for (double w : model.weights) write_le<double>(out, w);
    for (double b : model.bias) write_le<double>(out, b);
    for (int c : model.class_ids) write_le<std::uint32_t>(out, std::uint32_t(c));
    if (!out) fail("IoError", "write failed: " + path);
}

LinearSvmModel load_svm(const std::string& path) {
    auto in = open_input(path);
    expect_magic(in, "SVM1", "SVM");
    LinearSvmModel model;
    model.num_classes = int(read_le<std::uint32_t>(in));
    model.dim = int(read_le<std::uint32_t>(in));
    model.lambda = read_le<double>(in);
    model.weights.resize(std::size_t(model.num_classes) * model.dim);
    model.bias.resize(std::size_t(model.num_classes));
    for (double& w : model.weights) w = read_le<double>(in);
    for (double& b : model.bias) b = read_le<double>(in);
    model.class_ids.resize(std::size_t(model.num_classes));
    for (int& c : model.class_ids) c = int(read_le<std::uint32_t>(in));
    return model;
}

} // namespace texfv

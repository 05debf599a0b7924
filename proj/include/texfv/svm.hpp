#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace texfv {

struct SdcaOptions {
    double lambda = 0.0;  // 0 resolves to 1/n; negative is NonPositiveLambda
    int max_epochs = 200;
    double gap_tol = 1e-3;
};

/// One-vs-rest linear SVM. weights is num_classes x dim row-major; row c is
/// the classifier for class_ids[c] (ascending). The bias comes from a
/// constant-1 feature appended during training, so it is regularized too.
struct LinearSvmModel {
    int num_classes = 0;
    int dim = 0;
    std::vector<int> class_ids;   // ascending distinct training labels
    std::vector<double> weights;  // num_classes * dim
    std::vector<double> bias;     // num_classes
    double lambda = 0.0;

    struct ClassMeta {
        int epochs = 0;
        double duality_gap = 0.0;
        std::vector<double> dual_trace; // dual objective after each epoch
    };
    std::vector<ClassMeta> training_meta;

    const double* weight_row(int c) const { return weights.data() + std::size_t(c) * dim; }
};

/// Trains one binary hinge-loss SVM per distinct label by stochastic dual
/// coordinate ascent: seeded random-permutation epochs, closed-form updates,
/// dual variables boxed in [0, 1/(lambda * n)] with w = sum a_i y_i x_i.
/// Stops a class when its duality gap is <= gap_tol or at max_epochs.
/// Errors: SingleClass, DimensionMismatch, NonPositiveLambda, InvalidArgument.
LinearSvmModel train_sdca(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels, const SdcaOptions& options,
                          std::uint64_t seed);

/// W x + bias, one score per stored class. Errors: DimensionMismatch.
std::vector<double> decision_scores(const LinearSvmModel& model, const std::vector<double>& x);

/// argmax of decision_scores; ties break toward the lowest class id.
int predict(const LinearSvmModel& model, const std::vector<double>& x);

/// Primal objective (lambda/2)||w||^2 + mean hinge loss for one binary
/// problem; exposed so the solver can be checked against reference optima.
double binary_primal_objective(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& ys, const std::vector<double>& weights,
                               double bias, double lambda);

/// SVM1 container: magic, u32 classes, u32 dim, f64 lambda, weights row-major
/// f64, biases f64, then the class ids as u32.
void save_svm(const std::string& path, const LinearSvmModel& model);
LinearSvmModel load_svm(const std::string& path);

} // namespace texfv

#pragma once

#include <vector>

#include "texfv/dsift.hpp"
#include "texfv/gmm.hpp"

namespace texfv {

/// Improved Fisher vector. Layout: mean-gradient block (K*D, component-major)
/// followed by the standard-deviation-gradient block (K*D).
struct FisherVector {
    std::vector<double> data; // 2 * K * D
    bool normalized = false;
};

inline std::size_t fisher_dim(const GmmModel& model) {
    return 2 * std::size_t(model.K) * std::size_t(model.D);
}

/// Unnormalized Fisher gradients: per component, the Fisher-information-
/// normalized average gradient of the log-likelihood with respect to the
/// means (scaled by 1/sqrt(w_k)) and standard deviations (1/sqrt(2 w_k)).
/// Columns are accumulated in lexicographic order with fixed-size blocks, so
/// the result is a pure function of the descriptor multiset.
/// Errors: DimensionMismatch.
std::vector<double> ifv_unnormalized(const GmmModel& model, const DescriptorMatrix& descriptors);

/// Improved Fisher vector: gradients above, signed square root applied
/// componentwise, then global L2 normalization. An empty descriptor set maps
/// to the zero vector (normalized = true).
FisherVector encode_ifv(const GmmModel& model, const DescriptorMatrix& descriptors);

/// sign(z) * sqrt(|z|) — the "improved" power normalization.
double signed_sqrt(double z);

} // namespace texfv

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "texfv/dsift.hpp"
#include "texfv/eval.hpp"
#include "texfv/pipeline.hpp"
#include "texfv/svm.hpp"
#include "texfv/synth.hpp"

namespace texfv {

/// Every tunable, loadable from a flat `key = value` file with CLI
/// overrides. Unknown keys are fatal; the fully resolved set is echoed into
/// every output artifact.
struct RunConfig {
    std::uint64_t seed = 42;
    int workers = 0; // 0 = TEXFV_WORKERS env var, else hardware threads

    int dsift_num_orientations = 8;
    int dsift_spatial_bins = 4;
    int dsift_bin_size_px = 6;
    int dsift_step_px = 4;
    std::vector<double> dsift_scales; // empty = 10 geometric, 0.125..3.0
    double dsift_clamp = 0.2;

    int gmm_k = 160;
    std::size_t gmm_pool = 200000;
    int gmm_max_iter = 100;
    double gmm_tol = 1e-4;
    double gmm_variance_floor = 1e-4;
    std::size_t max_descriptors_per_image = 5000;

    double svm_lambda = 0.0; // 0 = 1/n
    int svm_max_epochs = 200;
    double svm_gap_tol = 1e-3;

    std::vector<double> eval_fractions; // empty = 0.20..0.80 step 0.05
    int eval_folds = 40;
    std::vector<std::string> eval_feature_sets = {"embedding", "ifv", "fused"};
    bool eval_shared_gmm = false;

    std::string embeddings;          // embedding file path ("" = none)
    bool standin_embeddings = false; // derive embeddings from descriptors
    int embedding_dim = 4096;

    int color_k = 5;
    double color_min_proportion = 0.05;

    std::vector<std::string> synth_classes = {"Checked", "Striped", "Polka-dotted",
                                              "Zigzagged", "None"};
    int synth_articles_per_class = 6;
    int synth_configs_per_article = 16;
    int synth_image_size = 256;
    double synth_noise_sigma = 0.02;
    double synth_illumination_falloff = 0.3;

    double train_fraction = 0.8;
    bool timestamp = true; // SVG timestamp comment

    /// Applies `key = value`. Errors: UnknownKey (names the key), BadValue.
    void set(const std::string& key, const std::string& value);
    /// Loads a flat key = value file ('#' comments, blank lines allowed).
    void load_file(const std::string& path);
    /// The fully resolved key/value map, for echoing into artifacts.
    std::map<std::string, std::string> echo() const;
    static const std::vector<std::string>& keys();

    DsiftParams dsift() const;
    EncodeParams encode() const;
    SdcaOptions svm() const;
    EvalConfig eval() const;
    SynthSpec synth() const;
    int resolve_workers() const;
};

} // namespace texfv

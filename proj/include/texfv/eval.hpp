#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "texfv/manifest.hpp"

namespace texfv {

struct EvalConfig {
    std::vector<double> fractions;         // default_fractions() if empty
    int folds = 40;
    std::vector<std::string> feature_sets; // provider names, report order
    std::uint64_t seed = 0;
    bool shared_gmm = false;
    int workers = 1;
};

/// 0.20 to 0.80 in steps of 0.05 (13 values).
std::vector<double> default_fractions();

/// Per-fold fitted state of one feature set; features_for must be const and
/// thread-safe (folds may evaluate concurrently).
class FittedFeatures {
public:
    virtual ~FittedFeatures() = default;
    virtual std::vector<double> features_for(std::int64_t image_id) const = 0;
    /// ids whose underlying data was read while fitting (leakage audit).
    virtual std::vector<std::int64_t> touched_ids() const = 0;
};

struct FoldContext {
    /// fit results shared between providers of one fold (e.g. the IFV
    /// codebook reused by the fused feature set)
    std::map<std::string, std::shared_ptr<void>> shared;
    /// optional sink for stage timings accrued during fit (e.g. "gmm_fit")
    std::function<void(const std::string& stage, double ms, std::size_t images)> record_timing;
};

class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    virtual std::string name() const = 0;
    /// Non-empty group: providers with the same group share one fit per fold
    /// (and receive the same fit seed).
    virtual std::string fit_group() const { return {}; }
    virtual std::shared_ptr<FittedFeatures> fit(const std::vector<std::int64_t>& train_ids,
                                                std::uint64_t seed, FoldContext& ctx) const = 0;
    virtual bool covers(std::int64_t image_id) const = 0;
    /// True when the provider is deliberately fit outside the fold (shared
    /// codebook mode); the leakage audit skips it.
    virtual bool audit_exempt() const { return false; }
};

/// Classifier seam: the default trains the SDCA SVM; tests may inject
/// constant or reference classifiers.
using Predictor = std::function<int(const std::vector<double>&)>;
using Trainer = std::function<Predictor(const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& labels, std::uint64_t seed)>;

struct SdcaOptions;
Trainer sdca_trainer(const SdcaOptions& options);

struct StageTiming {
    std::string stage;
    double total_ms = 0.0;
    std::size_t images = 0;
    int workers = 1;
    double per_image_ms() const { return images ? total_ms / double(images) : 0.0; }
};

class TimingTable {
public:
    void add(const std::string& stage, double ms, std::size_t images, int workers);
    const std::vector<StageTiming>& rows() const { return rows_; }
    bool has(const std::string& stage) const;

private:
    std::vector<StageTiming> rows_;
};

/// Accuracy statistics for one (feature_set, fraction) cell.
struct CellStats {
    std::string feature_set;
    double fraction = 0.0;
    std::vector<double> fold_accuracies;
    /// per-fold confusion matrices, flattened num_classes x num_classes
    /// (rows = true class index, columns = predicted class index)
    std::vector<std::vector<std::size_t>> fold_confusions;
    double mean_accuracy = 0.0;
    double stddev = 0.0; // sample stddev over folds (0 when folds == 1)
    bool outlier = false;
};

struct EvalReport {
    std::vector<std::string> feature_sets;
    std::vector<double> fractions;
    int folds = 0;
    std::uint64_t seed = 0;
    std::vector<int> class_ids; // ascending label ids present
    std::vector<CellStats> cells; // feature_set-major, fraction ascending
    std::vector<StageTiming> timings;
    std::map<std::string, std::string> config_echo;
    std::size_t skipped_missing = 0;
    std::size_t leak_violations = 0;
    bool outliers_flagged = false;

    CellStats& cell(const std::string& feature_set, std::size_t fraction_index);
    const CellStats& cell(const std::string& feature_set, std::size_t fraction_index) const;
    /// JSON dump; timings excluded when deterministic content is wanted.
    std::string to_json(bool include_timings) const;
};

/// The subsampling protocol: for every fraction x fold, draw the stratified
/// split with seed derived from (seed, fraction_index, fold), fit each
/// feature set on train ids only, train the classifier, score the test set.
/// Errors: InvalidArgument, MissingFeatures, EmptyTestSet, EmptyClass.
EvalReport run_protocol(const Manifest& manifest,
                        const std::vector<std::shared_ptr<FeatureProvider>>& providers,
                        const EvalConfig& config, const Trainer& trainer,
                        const TimingTable& pre_timings = {});

/// Tukey fences (1.5 IQR, quartiles by linear interpolation) over each
/// feature set's mean accuracies; flags cells strictly outside the fences.
/// Errors: TooFewPoints (< 4 fractions for a feature set).
void flag_outliers(EvalReport& report);

/// Quantile with linear interpolation between order statistics (values must
/// be sorted ascending; p in [0, 1]).
double quantile_linear(const std::vector<double>& sorted, double p);

/// Writes results.csv, folds.csv, figure14.svg and report.json under
/// out_dir. Floats carry 6 significant digits; every file embeds the config
/// echo. The SVG timestamp comment is controlled by with_timestamp.
void emit_report(const EvalReport& report, const std::string& out_dir, bool with_timestamp);

} // namespace texfv

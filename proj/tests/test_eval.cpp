#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>

#include "support.hpp"
#include "support_xml.hpp"
#include "texfv/eval.hpp"
#include "texfv/manifest.hpp"
#include "texfv/rng.hpp"
#include "texfv/svm.hpp"

using namespace texfv;
using testsupport::TempDir;
using testsupport::expect_error;

namespace {

/// Features = one-hot of the record's label plus seeded jitter: linearly
/// separable, cheap, and honest about touching nothing at fit time.
class OneHotProvider : public FeatureProvider {
public:
    OneHotProvider(std::string name, const Manifest& manifest, double jitter = 0.01)
        : name_(std::move(name)) {
        for (const auto& r : manifest.records) {
            if (!r.missing) labels_[r.image_id] = r.label_id;
        }
        jitter_ = jitter;
    }
    std::string name() const override { return name_; }
    std::shared_ptr<FittedFeatures> fit(const std::vector<std::int64_t>&, std::uint64_t,
                                        FoldContext&) const override {
        class View final : public FittedFeatures {
        public:
            View(const std::map<std::int64_t, int>* labels, double jitter)
                : labels_(labels), jitter_(jitter) {}
            std::vector<double> features_for(std::int64_t id) const override {
                std::vector<double> x(9, 0.0);
                x[std::size_t(labels_->at(id))] = 1.0;
                Rng rng(derive_seed(77, std::uint64_t(id)));
                for (double& v : x) v += jitter_ * rng.normal();
                return x;
            }
            std::vector<std::int64_t> touched_ids() const override { return {}; }

        private:
            const std::map<std::int64_t, int>* labels_;
            double jitter_;
        };
        return std::make_shared<View>(&labels_, jitter_);
    }
    bool covers(std::int64_t id) const override { return labels_.count(id) != 0; }

private:
    std::string name_;
    std::map<std::int64_t, int> labels_;
    double jitter_;
};

/// Deliberately reads descriptors of every image during fit, including test
/// images; the audit must notice.
class LeakyProvider final : public FeatureProvider {
public:
    explicit LeakyProvider(const Manifest& manifest) {
        for (const auto& r : manifest.records) {
            if (!r.missing) all_ids_.push_back(r.image_id);
        }
    }
    std::string name() const override { return "leaky"; }
    std::shared_ptr<FittedFeatures> fit(const std::vector<std::int64_t>&, std::uint64_t,
                                        FoldContext&) const override {
        class View final : public FittedFeatures {
        public:
            explicit View(std::vector<std::int64_t> touched) : touched_(std::move(touched)) {}
            std::vector<double> features_for(std::int64_t id) const override {
                return {double(id % 7)};
            }
            std::vector<std::int64_t> touched_ids() const override { return touched_; }

        private:
            std::vector<std::int64_t> touched_;
        };
        return std::make_shared<View>(all_ids_);
    }
    bool covers(std::int64_t) const override { return true; }

private:
    std::vector<std::int64_t> all_ids_;
};

Trainer constant_trainer(int cls) {
    return [cls](const std::vector<std::vector<double>>&, const std::vector<int>&,
                 std::uint64_t) -> Predictor {
        return [cls](const std::vector<double>&) { return cls; };
    };
}

Manifest toy_manifest(int classes, int per_class) {
    Manifest m;
    std::int64_t id = 0;
    for (int label = 0; label < classes; ++label) {
        for (int i = 0; i < per_class; ++i) {
            ImageRecord r;
            r.image_id = id++;
            r.label_id = label;
            r.distance_cm = 5;
            r.inclination_deg = 90;
            r.azimuth_deg = 90;
            r.scale_ppcm = 160;
            m.records.push_back(r);
        }
    }
    m.rebuild_counts();
    return m;
}

EvalConfig small_config(std::vector<double> fractions, int folds) {
    EvalConfig cfg;
    cfg.fractions = std::move(fractions);
    cfg.folds = folds;
    cfg.seed = 9;
    cfg.workers = 1;
    return cfg;
}

} // namespace

TEST_CASE("default fraction grid is the 13-step ladder") {
    const auto f = default_fractions();
    REQUIRE(f.size() == 13);
    CHECK(f.front() == doctest::Approx(0.20));
    CHECK(f.back() == doctest::Approx(0.80));
    for (std::size_t i = 1; i < f.size(); ++i) {
        CHECK(f[i] - f[i - 1] == doctest::Approx(0.05).epsilon(1e-9));
    }
}

TEST_CASE("separable features reach accuracy 1.0") {
    const Manifest m = toy_manifest(2, 10);
    const auto provider = std::make_shared<OneHotProvider>("onehot", m);
    SdcaOptions svm;
    svm.lambda = 0.01;
    const EvalReport report =
        run_protocol(m, {provider}, small_config({0.5}, 1), sdca_trainer(svm));
    CHECK(report.cell("onehot", 0).mean_accuracy == 1.0);
    CHECK(report.leak_violations == 0);
}

TEST_CASE("constant class-5 classifier scores the class prior on the Table 1 shape") {
    const Manifest m = testsupport::table1_manifest();
    const auto provider = std::make_shared<OneHotProvider>("prior", m);
    EvalConfig cfg = small_config({}, 2); // default 13 fractions
    const EvalReport report = run_protocol(m, {provider}, cfg, constant_trainer(5));

    REQUIRE(report.fractions.size() == 13);
    const auto& counts = testsupport::table1_counts();
    for (std::size_t fi = 0; fi < report.fractions.size(); ++fi) {
        // expected accuracy from the split arithmetic
        std::size_t test_total = 0, test_class5 = 0;
        for (int label = 0; label < 9; ++label) {
            const std::size_t n = counts[std::size_t(label)];
            const std::size_t train = stratified_train_count(report.fractions[fi], n);
            test_total += n - train;
            if (label == 5) test_class5 = n - train;
        }
        const double expected = double(test_class5) / double(test_total);
        const CellStats& cell = report.cell("prior", fi);
        for (double acc : cell.fold_accuracies) {
            CHECK(acc == doctest::Approx(expected).epsilon(1e-12));
        }
        CHECK(std::abs(cell.mean_accuracy - 48.0 / 520.0) < 0.01);
    }
}

TEST_CASE("identical configs give identical reports") {
    const Manifest m = toy_manifest(3, 12);
    const auto provider = std::make_shared<OneHotProvider>("onehot", m);
    SdcaOptions svm;
    svm.lambda = 0.05;
    const EvalConfig cfg = small_config({0.25, 0.5, 0.75}, 3);
    const EvalReport a = run_protocol(m, {provider}, cfg, sdca_trainer(svm));
    const EvalReport b = run_protocol(m, {provider}, cfg, sdca_trainer(svm));
    CHECK(a.to_json(false) == b.to_json(false));
}

TEST_CASE("fold confusion matrices recompute the accuracies") {
    const Manifest m = toy_manifest(3, 8);
    const auto provider = std::make_shared<OneHotProvider>("onehot", m, 0.8);
    SdcaOptions svm;
    svm.lambda = 0.05;
    const EvalReport report =
        run_protocol(m, {provider}, small_config({0.5}, 4), sdca_trainer(svm));
    const CellStats& cell = report.cell("onehot", 0);
    const std::size_t k = report.class_ids.size();
    for (std::size_t f = 0; f < cell.fold_accuracies.size(); ++f) {
        std::size_t diag = 0, total = 0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                total += cell.fold_confusions[f][i * k + j];
                if (i == j) diag += cell.fold_confusions[f][i * k + j];
            }
        }
        CHECK(cell.fold_accuracies[f] == doctest::Approx(double(diag) / double(total)));
    }
}

TEST_CASE("the leakage audit flags a provider that reads test images") {
    const Manifest m = toy_manifest(2, 10);
    const auto leaky = std::make_shared<LeakyProvider>(m);
    const EvalReport report =
        run_protocol(m, {leaky}, small_config({0.5}, 1), constant_trainer(0));
    CHECK(report.leak_violations > 0);

    const auto honest = std::make_shared<OneHotProvider>("honest", m);
    const EvalReport clean =
        run_protocol(m, {honest}, small_config({0.5}, 1), constant_trainer(0));
    CHECK(clean.leak_violations == 0);
}

TEST_CASE("missing features and empty test sets are reported") {
    const Manifest m = toy_manifest(2, 2);
    const auto provider = std::make_shared<OneHotProvider>("onehot", m);
    expect_error("EmptyTestSet", [&] {
        run_protocol(m, {provider}, small_config({0.9}, 1), constant_trainer(0));
    });

    Manifest bigger = toy_manifest(2, 10);
    class NoCoverage final : public OneHotProvider {
    public:
        using OneHotProvider::OneHotProvider;
        bool covers(std::int64_t id) const override { return id != 3; }
    };
    const auto partial = std::make_shared<NoCoverage>("partial", bigger);
    expect_error("MissingFeatures", [&] {
        run_protocol(bigger, {partial}, small_config({0.5}, 1), constant_trainer(0));
    });
}

TEST_CASE("quantile with linear interpolation") {
    const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_linear(v, 0.0) == 1.0);
    CHECK(quantile_linear(v, 1.0) == 4.0);
    CHECK(quantile_linear(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_linear(v, 0.25) == doctest::Approx(1.75));
}

namespace {

EvalReport synthetic_report(const std::vector<double>& means) {
    EvalReport report;
    report.feature_sets = {"ifv"};
    report.folds = 1;
    for (std::size_t i = 0; i < means.size(); ++i) {
        report.fractions.push_back(0.20 + 0.05 * double(i));
        CellStats cell;
        cell.feature_set = "ifv";
        cell.fraction = report.fractions.back();
        cell.fold_accuracies = {means[i]};
        cell.mean_accuracy = means[i];
        report.cells.push_back(std::move(cell));
    }
    return report;
}

} // namespace

TEST_CASE("outlier rule: twelve at 0.90 and one at 0.60 flags exactly the dip") {
    std::vector<double> means(13, 0.90);
    means[1] = 0.60; // the second fraction dips
    EvalReport report = synthetic_report(means);
    flag_outliers(report);
    for (std::size_t fi = 0; fi < 13; ++fi) {
        CHECK(report.cell("ifv", fi).outlier == (fi == 1));
    }
}

TEST_CASE("outlier rule: all equal means flag nothing") {
    EvalReport report = synthetic_report(std::vector<double>(13, 0.77));
    flag_outliers(report);
    for (std::size_t fi = 0; fi < 13; ++fi) CHECK_FALSE(report.cell("ifv", fi).outlier);
}

TEST_CASE("outlier rule needs at least four fractions") {
    EvalReport report = synthetic_report({0.5, 0.6, 0.7});
    expect_error("TooFewPoints", [&] { flag_outliers(report); });
}

TEST_CASE("emit_report writes the full artifact set") {
    TempDir dir("emit");
    const Manifest m = toy_manifest(3, 10);
    std::vector<std::shared_ptr<FeatureProvider>> providers = {
        std::make_shared<OneHotProvider>("embedding", m),
        std::make_shared<OneHotProvider>("ifv", m),
        std::make_shared<OneHotProvider>("fused", m)};
    SdcaOptions svm;
    svm.lambda = 0.05;
    EvalConfig cfg = small_config({}, 2); // 13 default fractions
    EvalReport report = run_protocol(m, providers, cfg, sdca_trainer(svm));
    flag_outliers(report);
    report.config_echo["note"] = "unit test";
    emit_report(report, dir.str(), false);

    // results.csv: 3 sets x 13 fractions = 39 data rows
    std::ifstream results(dir.str("results.csv"));
    REQUIRE(results);
    std::string line;
    std::size_t data_rows = 0;
    bool saw_header = false;
    while (std::getline(results, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!saw_header) {
            CHECK(line == "feature_set,fraction,mean_accuracy,stddev,outlier");
            saw_header = true;
            continue;
        }
        ++data_rows;
    }
    CHECK(data_rows == 39);

    std::ifstream folds(dir.str("folds.csv"));
    REQUIRE(folds);
    std::size_t fold_rows = 0;
    bool folds_header = false;
    while (std::getline(folds, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!folds_header) {
            CHECK(line == "feature_set,fraction,fold,accuracy");
            folds_header = true;
            continue;
        }
        ++fold_rows;
    }
    CHECK(fold_rows == 39 * 2);

    std::ifstream svg_in(dir.str("figure14.svg"));
    REQUIRE(svg_in);
    std::stringstream svg;
    svg << svg_in.rdbuf();
    const std::string problem = testsupport::xml_wellformed_error(svg.str());
    CHECK_MESSAGE(problem.empty(), problem);
    CHECK(svg.str().find("note = unit test") != std::string::npos);

    CHECK(std::filesystem::exists(dir.str("report.json")));
}

TEST_CASE("emit_report with no feature sets: header-only CSV, axes-only SVG") {
    TempDir dir("emit_empty");
    const Manifest m = toy_manifest(2, 10);
    EvalReport report =
        run_protocol(m, {}, small_config({0.5}, 1), constant_trainer(0));
    emit_report(report, dir.str(), false);

    std::ifstream results(dir.str("results.csv"));
    std::string line;
    std::size_t data_rows = 0;
    while (std::getline(results, line)) {
        if (line.rfind("#", 0) == 0 || line.rfind("feature_set", 0) == 0) continue;
        ++data_rows;
    }
    CHECK(data_rows == 0);

    std::ifstream svg_in(dir.str("figure14.svg"));
    std::stringstream svg;
    svg << svg_in.rdbuf();
    CHECK(testsupport::xml_wellformed_error(svg.str()).empty());
    CHECK(svg.str().find("training fraction") != std::string::npos);
}

TEST_CASE("timing table rows reflect the executed stages") {
    const Manifest m = toy_manifest(2, 6);
    const auto provider = std::make_shared<OneHotProvider>("embedding", m);
    SdcaOptions svm;
    svm.lambda = 0.05;
    const EvalReport report =
        run_protocol(m, {provider}, small_config({0.5}, 1), sdca_trainer(svm));

    TimingTable table;
    for (const auto& row : report.timings) table.add(row.stage, row.total_ms, row.images, 1);
    CHECK(table.has("encode"));
    CHECK(table.has("train"));
    CHECK_FALSE(table.has("extract")); // no DSIFT stage ran

    for (const auto& row : report.timings) {
        CHECK(row.total_ms >= 0.0);
        CHECK(row.per_image_ms() >= 0.0);
    }
}

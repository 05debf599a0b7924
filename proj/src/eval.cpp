#include "texfv/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>

#include <json.hpp>

#include "texfv/errors.hpp"
#include "texfv/parallel.hpp"
#include "texfv/rng.hpp"
#include "texfv/svm.hpp"
#include "texfv/text.hpp"

namespace fs = std::filesystem;

namespace texfv {

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

std::vector<double> default_fractions() {
    std::vector<double> out;
    for (int i = 0; i <= 12; ++i) out.push_back(0.20 + 0.05 * i);
    return out;
}

Trainer sdca_trainer(const SdcaOptions& options) {
    return [options](const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, std::uint64_t seed) -> Predictor {
        auto model = std::make_shared<LinearSvmModel>(
            train_sdca(features, labels, options, seed));
        return [model](const std::vector<double>& x) { return predict(*model, x); };
    };
}

void TimingTable::add(const std::string& stage, double ms, std::size_t images, int workers) {
    for (auto& row : rows_) {
        if (row.stage == stage) {
            row.total_ms += ms;
            row.images += images;
            row.workers = workers;
            return;
        }
    }
    rows_.push_back(StageTiming{stage, ms, images, workers});
}

bool TimingTable::has(const std::string& stage) const {
    return std::any_of(rows_.begin(), rows_.end(),
                       [&](const StageTiming& r) { return r.stage == stage; });
}

CellStats& EvalReport::cell(const std::string& feature_set, std::size_t fraction_index) {
    for (std::size_t p = 0; p < feature_sets.size(); ++p) {
        if (feature_sets[p] == feature_set) {
            return cells[p * fractions.size() + fraction_index];
        }
    }
    fail("InvalidArgument", "unknown feature set: " + feature_set);
}

const CellStats& EvalReport::cell(const std::string& feature_set,
                                  std::size_t fraction_index) const {
    return const_cast<EvalReport*>(this)->cell(feature_set, fraction_index);
}

std::string EvalReport::to_json(bool include_timings) const {
    nlohmann::ordered_json j;
    j["feature_sets"] = feature_sets;
    j["fractions"] = fractions;
    j["folds"] = folds;
    j["seed"] = seed;
    j["class_ids"] = class_ids;
    j["skipped_missing"] = skipped_missing;
    j["leak_violations"] = leak_violations;
    j["outliers_flagged"] = outliers_flagged;
    j["config"] = config_echo;
    j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
        nlohmann::ordered_json cj;
        cj["feature_set"] = c.feature_set;
        cj["fraction"] = c.fraction;
        cj["mean_accuracy"] = c.mean_accuracy;
        cj["stddev"] = c.stddev;
        cj["outlier"] = c.outlier;
        cj["fold_accuracies"] = c.fold_accuracies;
        cj["fold_confusions"] = c.fold_confusions;
        j["cells"].push_back(std::move(cj));
    }
    if (include_timings) {
        j["timings"] = nlohmann::ordered_json::array();
        for (const auto& t : timings) {
            j["timings"].push_back({{"stage", t.stage},
                                    {"total_ms", t.total_ms},
                                    {"images", t.images},
                                    {"workers", t.workers},
                                    {"per_image_ms", t.per_image_ms()}});
        }
    }
    return j.dump(2);
}

EvalReport run_protocol(const Manifest& manifest,
                        const std::vector<std::shared_ptr<FeatureProvider>>& providers,
                        const EvalConfig& config, const Trainer& trainer,
                        const TimingTable& pre_timings) {
    EvalConfig cfg = config;
    if (cfg.fractions.empty()) cfg.fractions = default_fractions();
    if (cfg.folds < 1) fail("InvalidArgument", "folds must be >= 1");
    for (std::size_t i = 0; i < cfg.fractions.size(); ++i) {
        if (!(cfg.fractions[i] > 0.0 && cfg.fractions[i] < 1.0)) {
            fail("InvalidArgument", "fractions must lie in (0, 1)");
        }
        if (i > 0 && cfg.fractions[i] <= cfg.fractions[i - 1]) {
            fail("InvalidArgument", "fractions must be strictly increasing");
        }
    }

    std::map<std::int64_t, int> label_of;
    for (const auto& r : manifest.records) {
        if (!r.missing) label_of.emplace(r.image_id, r.label_id);
    }
    if (label_of.empty()) fail("EmptyClass", "manifest has no usable records");

    EvalReport report;
    report.fractions = cfg.fractions;
    report.folds = cfg.folds;
    report.seed = cfg.seed;
    report.skipped_missing = manifest.missing_count();
    {
        std::set<int> classes;
        for (const auto& [id, label] : label_of) classes.insert(label);
        report.class_ids.assign(classes.begin(), classes.end());
    }
    std::map<int, int> class_index;
    for (std::size_t i = 0; i < report.class_ids.size(); ++i) {
        class_index[report.class_ids[i]] = int(i);
    }
    const std::size_t num_classes = report.class_ids.size();

    std::set<std::string> seen_names;
    for (const auto& p : providers) {
        if (!p) fail("InvalidArgument", "null feature provider");
        if (!seen_names.insert(p->name()).second) {
            fail("InvalidArgument", "duplicate feature set: " + p->name());
        }
        report.feature_sets.push_back(p->name());
        for (const auto& [id, label] : label_of) {
            if (!p->covers(id)) {
                fail("MissingFeatures", "feature set '" + p->name() +
                                            "' has no features for image_id " +
                                            std::to_string(id));
            }
        }
    }

    report.cells.resize(providers.size() * cfg.fractions.size());
    for (std::size_t pi = 0; pi < providers.size(); ++pi) {
        for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
            CellStats& cell = report.cells[pi * cfg.fractions.size() + fi];
            cell.feature_set = providers[pi]->name();
            cell.fraction = cfg.fractions[fi];
            cell.fold_accuracies.resize(std::size_t(cfg.folds), 0.0);
            cell.fold_confusions.assign(std::size_t(cfg.folds),
                                        std::vector<std::size_t>(num_classes * num_classes, 0));
        }
    }

    TimingTable timings = pre_timings;
    std::mutex timing_mutex;
    std::size_t leak_violations = 0;

    const std::size_t jobs = cfg.fractions.size() * std::size_t(cfg.folds);
    parallel_for(providers.empty() ? 0 : jobs, cfg.workers, [&](std::size_t job) {
        const std::size_t fi = job / std::size_t(cfg.folds);
        const int fold = int(job % std::size_t(cfg.folds));
        const std::uint64_t fold_seed =
            derive_seed(cfg.seed, std::uint64_t(fi), std::uint64_t(fold));

        const Split split = stratified_split(manifest, cfg.fractions[fi], fold_seed);
        if (split.test_ids.empty()) {
            fail("EmptyTestSet", "fraction " + format_sig6(cfg.fractions[fi]) +
                                     " leaves no test images");
        }

        FoldContext ctx;
        ctx.record_timing = [&](const std::string& stage, double ms, std::size_t images) {
            std::lock_guard<std::mutex> lock(timing_mutex);
            timings.add(stage, ms, images, cfg.workers);
        };

        for (std::size_t pi = 0; pi < providers.size(); ++pi) {
            const FeatureProvider& provider = *providers[pi];
            const std::string group = provider.fit_group();
            const std::uint64_t fit_seed =
                derive_seed(fold_seed, fnv1a64(group.empty() ? provider.name() : group));
            const auto fitted = provider.fit(split.train_ids, fit_seed, ctx);

            if (!provider.audit_exempt()) {
                std::size_t violations = 0;
                for (const std::int64_t id : fitted->touched_ids()) {
                    if (!std::binary_search(split.train_ids.begin(), split.train_ids.end(),
                                            id)) {
                        ++violations;
                    }
                }
                if (violations > 0) {
                    std::lock_guard<std::mutex> lock(timing_mutex);
                    leak_violations += violations;
                }
            }

            double encode_ms = 0.0;
            std::size_t encoded = 0;

            std::vector<std::vector<double>> train_x;
            std::vector<int> train_y;
            train_x.reserve(split.train_ids.size());
            {
                const double t0 = now_ms();
                for (const std::int64_t id : split.train_ids) {
                    train_x.push_back(fitted->features_for(id));
                    train_y.push_back(label_of.at(id));
                }
                encode_ms += now_ms() - t0;
                encoded += split.train_ids.size();
            }

            const double train_t0 = now_ms();
            const Predictor predictor =
                trainer(train_x, train_y, derive_seed(fold_seed, fnv1a64("train"), pi));
            const double train_ms = now_ms() - train_t0;

            CellStats& cell = report.cells[pi * cfg.fractions.size() + fi];
            auto& confusion = cell.fold_confusions[std::size_t(fold)];
            std::size_t correct = 0;
            for (const std::int64_t id : split.test_ids) {
                const double t0 = now_ms();
                const std::vector<double> x = fitted->features_for(id);
                encode_ms += now_ms() - t0;
                ++encoded;

                const int predicted = predictor(x);
                const auto it = class_index.find(predicted);
                if (it == class_index.end()) {
                    fail("InvalidArgument", "classifier predicted unknown class " +
                                                std::to_string(predicted));
                }
                const int true_idx = class_index.at(label_of.at(id));
                ++confusion[std::size_t(true_idx) * num_classes + std::size_t(it->second)];
                if (predicted == label_of.at(id)) ++correct;
            }
            cell.fold_accuracies[std::size_t(fold)] =
                double(correct) / double(split.test_ids.size());

            {
                std::lock_guard<std::mutex> lock(timing_mutex);
                timings.add("encode", encode_ms, encoded, cfg.workers);
                timings.add("train", train_ms, split.train_ids.size(), cfg.workers);
            }
        }
    });

    for (auto& cell : report.cells) {
        const std::size_t n = cell.fold_accuracies.size();
        double sum = 0.0;
        for (double a : cell.fold_accuracies) sum += a;
        cell.mean_accuracy = sum / double(n);
        if (n > 1) {
            double sq = 0.0;
            for (double a : cell.fold_accuracies) {
                sq += (a - cell.mean_accuracy) * (a - cell.mean_accuracy);
            }
            cell.stddev = std::sqrt(sq / double(n - 1));
        }
    }

    report.timings = timings.rows();
    report.leak_violations = leak_violations;
    report.config_echo["eval_folds"] = std::to_string(cfg.folds);
    report.config_echo["eval_seed"] = std::to_string(cfg.seed);
    report.config_echo["eval_shared_gmm"] = cfg.shared_gmm ? "true" : "false";
    report.config_echo["workers"] = std::to_string(cfg.workers);
    {
        std::vector<std::string> parts;
        for (double f : cfg.fractions) parts.push_back(format_sig6(f));
        report.config_echo["eval_fractions"] = join(parts, ",");
        report.config_echo["eval_feature_sets"] = join(report.feature_sets, ",");
    }
    return report;
}

double quantile_linear(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) fail("InvalidArgument", "quantile of an empty list");
    if (sorted.size() == 1) return sorted[0];
    const double h = p * double(sorted.size() - 1);
    const std::size_t i = std::min(std::size_t(h), sorted.size() - 2);
    const double frac = h - double(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

void flag_outliers(EvalReport& report) {
    for (const auto& set_name : report.feature_sets) {
        std::vector<double> means;
        for (std::size_t fi = 0; fi < report.fractions.size(); ++fi) {
            means.push_back(report.cell(set_name, fi).mean_accuracy);
        }
        if (means.size() < 4) {
            fail("TooFewPoints", "outlier rule needs >= 4 fractions, got " +
                                     std::to_string(means.size()));
        }
        std::vector<double> sorted = means;
        std::sort(sorted.begin(), sorted.end());
        const double q1 = quantile_linear(sorted, 0.25);
        const double q3 = quantile_linear(sorted, 0.75);
        const double iqr = q3 - q1;
        const double lo = q1 - 1.5 * iqr;
        const double hi = q3 + 1.5 * iqr;
        for (std::size_t fi = 0; fi < report.fractions.size(); ++fi) {
            report.cell(set_name, fi).outlier = means[fi] < lo || means[fi] > hi;
        }
    }
    report.outliers_flagged = true;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string comment_safe(const std::string& s) {
    std::string out = s;
    std::size_t pos = 0;
    while ((pos = out.find("--", pos)) != std::string::npos) {
        out.replace(pos, 2, "- -");
        pos += 3;
    }
    return out;
}

const char* series_color(const std::string& name, std::size_t index) {
    if (name == "embedding") return "#4caf50";
    if (name == "ifv") return "#ff9800";
    if (name == "fused") return "#2196f3";
    static const char* fallback[] = {"#9c27b0", "#795548", "#607d8b"};
    return fallback[index % 3];
}

void write_config_comment(std::ostream& out, const std::map<std::string, std::string>& echo,
                          const char* prefix) {
    for (const auto& [k, v] : echo) {
        out << prefix << k << " = " << v << "\n";
    }
}

void write_svg(const EvalReport& report, const std::string& path, bool with_timestamp) {
    std::ofstream out(path);
    if (!out) fail("IoError", "cannot write " + path);

    const double width = 960, height = 560;
    const double ml = 70, mr = 170, mt = 30, mb = 60;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    if (with_timestamp) {
        const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        out << "<!-- generated " << t << " -->\n";
    }
    out << "<!--\n";
    for (const auto& [k, v] : report.config_echo) {
        out << comment_safe(k) << " = " << comment_safe(v) << "\n";
    }
    out << "-->\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    // y axis, gridlines every 0.1
    for (int i = 0; i <= 10; ++i) {
        const double v = i / 10.0;
        const double y = mt + plot_h * (1.0 - v);
        out << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + plot_w
            << "\" y2=\"" << y << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">"
            << format_sig6(v) << "</text>\n";
    }
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << mt + plot_h << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\">"
           "training fraction</text>\n";
    out << "<text x=\"18\" y=\"" << mt + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 18 "
        << mt + plot_h / 2 << ")\">mean accuracy</text>\n";

    const std::size_t nf = report.fractions.size();
    const std::size_t ns = report.feature_sets.size();
    if (nf > 0 && ns > 0) {
        const double group_w = plot_w / double(nf);
        const double bar_w = group_w * 0.8 / double(ns);
        for (std::size_t fi = 0; fi < nf; ++fi) {
            const double gx = ml + group_w * (double(fi) + 0.1);
            out << "<text x=\"" << ml + group_w * (double(fi) + 0.5) << "\" y=\""
                << mt + plot_h + 20
                << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
                << format_sig6(report.fractions[fi]) << "</text>\n";
            for (std::size_t si = 0; si < ns; ++si) {
                const CellStats& cell = report.cell(report.feature_sets[si], fi);
                const double x = gx + bar_w * double(si);
                const double v = std::clamp(cell.mean_accuracy, 0.0, 1.0);
                const double y = mt + plot_h * (1.0 - v);
                out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w * 0.92
                    << "\" height=\"" << plot_h * v << "\" fill=\""
                    << series_color(report.feature_sets[si], si) << "\""
                    << (cell.outlier ? " stroke=\"red\" stroke-width=\"2\"" : "") << "/>\n";
                // +-1 sigma error bar
                const double lo = std::clamp(cell.mean_accuracy - cell.stddev, 0.0, 1.0);
                const double hi = std::clamp(cell.mean_accuracy + cell.stddev, 0.0, 1.0);
                const double cx = x + bar_w * 0.46;
                const double y_lo = mt + plot_h * (1.0 - lo);
                const double y_hi = mt + plot_h * (1.0 - hi);
                out << "<line x1=\"" << cx << "\" y1=\"" << y_lo << "\" x2=\"" << cx
                    << "\" y2=\"" << y_hi << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
                out << "<line x1=\"" << cx - 3 << "\" y1=\"" << y_lo << "\" x2=\"" << cx + 3
                    << "\" y2=\"" << y_lo << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
                out << "<line x1=\"" << cx - 3 << "\" y1=\"" << y_hi << "\" x2=\"" << cx + 3
                    << "\" y2=\"" << y_hi << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
            }
        }
    }

    for (std::size_t si = 0; si < ns; ++si) {
        const double y = mt + 10 + 22 * double(si);
        out << "<rect x=\"" << width - mr + 16 << "\" y=\"" << y - 10
            << "\" width=\"14\" height=\"14\" fill=\"" << series_color(report.feature_sets[si], si)
            << "\"/>\n";
        out << "<text x=\"" << width - mr + 36 << "\" y=\"" << y + 2
            << "\" font-size=\"13\" font-family=\"sans-serif\">"
            << xml_escape(report.feature_sets[si]) << "</text>\n";
    }

    out << "</svg>\n";
    if (!out) fail("IoError", "write failed: " + path);
}

} // namespace

void emit_report(const EvalReport& report, const std::string& out_dir, bool with_timestamp) {
    fs::create_directories(out_dir);

    {
        std::ofstream out(fs::path(out_dir) / "results.csv");
        if (!out) fail("IoError", "cannot write results.csv");
        write_config_comment(out, report.config_echo, "# ");
        out << "feature_set,fraction,mean_accuracy,stddev,outlier\n";
        for (const auto& set_name : report.feature_sets) {
            for (std::size_t fi = 0; fi < report.fractions.size(); ++fi) {
                const CellStats& cell = report.cell(set_name, fi);
                out << set_name << "," << format_sig6(cell.fraction) << ","
                    << format_sig6(cell.mean_accuracy) << "," << format_sig6(cell.stddev) << ","
                    << (cell.outlier ? 1 : 0) << "\n";
            }
        }
        if (!out) fail("IoError", "write failed: results.csv");
    }

    {
        std::ofstream out(fs::path(out_dir) / "folds.csv");
        if (!out) fail("IoError", "cannot write folds.csv");
        write_config_comment(out, report.config_echo, "# ");
        out << "feature_set,fraction,fold,accuracy\n";
        for (const auto& set_name : report.feature_sets) {
            for (std::size_t fi = 0; fi < report.fractions.size(); ++fi) {
                const CellStats& cell = report.cell(set_name, fi);
                for (std::size_t f = 0; f < cell.fold_accuracies.size(); ++f) {
                    out << set_name << "," << format_sig6(cell.fraction) << "," << f << ","
                        << format_sig6(cell.fold_accuracies[f]) << "\n";
                }
            }
        }
        if (!out) fail("IoError", "write failed: folds.csv");
    }

    write_svg(report, (fs::path(out_dir) / "figure14.svg").string(), with_timestamp);

    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        if (!out) fail("IoError", "cannot write report.json");
        out << report.to_json(true) << "\n";
        if (!out) fail("IoError", "write failed: report.json");
    }
}

} // namespace texfv

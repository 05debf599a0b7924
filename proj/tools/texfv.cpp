#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "texfv/color.hpp"
#include "texfv/config.hpp"
#include "texfv/errors.hpp"
#include "texfv/fisher.hpp"
#include "texfv/image_io.hpp"
#include "texfv/parallel.hpp"
#include "texfv/pipeline.hpp"
#include "texfv/rng.hpp"
#include "texfv/synth.hpp"
#include "texfv/text.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CliState {
    texfv::RunConfig config;
    std::string config_file;
    std::vector<std::string> overrides; // key=value
    int workers_flag = 0;
    std::int64_t seed_flag = -1;

    void resolve() {
        if (!config_file.empty()) config.load_file(config_file);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                texfv::fail("BadValue", "--set expects key=value, got '" + kv + "'");
            }
            config.set(texfv::trim(kv.substr(0, eq)), texfv::trim(kv.substr(eq + 1)));
        }
        if (workers_flag > 0) config.workers = workers_flag;
        if (seed_flag >= 0) config.seed = std::uint64_t(seed_flag);
    }
};

std::string config_key_help() {
    std::string out = "Config keys (set via --config FILE or --set key=value):\n";
    const auto echo = texfv::RunConfig{}.echo();
    for (const auto& key : texfv::RunConfig::keys()) {
        out += "  " + key + " = " + echo.at(key) + "\n";
    }
    return out;
}

void add_common(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_file, "flat key = value config file");
    cmd->add_option("--set", state.overrides, "override one config key (key=value)")
        ->take_all();
    cmd->add_option("--workers", state.workers_flag, "worker threads for parallel sections")
        ->envname("TEXFV_WORKERS");
    cmd->add_option("--seed", state.seed_flag, "master seed (overrides config)");
    cmd->footer(config_key_help());
}

ordered_json color_report_json(const texfv::ColorReport& report) {
    ordered_json colors = ordered_json::array();
    for (const auto& e : report.entries) {
        colors.push_back({{"name", e.palette_name},
                          {"rgb", {e.rgb[0], e.rgb[1], e.rgb[2]}},
                          {"proportion", e.proportion}});
    }
    return ordered_json{{"image_id", report.image_id}, {"colors", std::move(colors)}};
}

std::shared_ptr<texfv::EmbeddingSource> make_embedding_source(
    const texfv::RunConfig& cfg, const texfv::DescriptorCache& cache,
    texfv::TimingTable* timings, int workers) {
    using namespace texfv;
    if (!cfg.embeddings.empty()) {
        const auto t0 = std::chrono::steady_clock::now();
        EmbeddingTable table = load_embeddings(cfg.embeddings);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        if (timings) timings->add("embedding_load", ms, table.entries.size(), workers);
        return make_table_source(std::move(table));
    }
    if (cfg.standin_embeddings) {
        const auto t0 = std::chrono::steady_clock::now();
        auto source = make_standin_source(cache, cfg.embedding_dim, cfg.seed);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        if (timings) timings->add("embedding_load", ms, 0, workers);
        return source;
    }
    texfv::fail("MissingFeatures",
                "embedding features requested: set embeddings = <path> or "
                "standin_embeddings = true");
}

bool needs_descriptors(const texfv::RunConfig& cfg) {
    for (const auto& name : cfg.eval_feature_sets) {
        if (name == "ifv" || name == "fused") return true;
    }
    return cfg.standin_embeddings;
}

// ----------------------------------------------------------------- commands

int cmd_synth(CliState& state, const std::string& out_dir, const std::string& spec_json) {
    using namespace texfv;
    state.resolve();
    SynthSpec spec = state.config.synth();
    if (!spec_json.empty()) {
        std::ifstream in(spec_json);
        if (!in) fail("IoError", "cannot open synth spec: " + spec_json);
        ordered_json j = ordered_json::parse(in, nullptr, true, true);
        if (j.contains("classes")) spec.classes = j["classes"].get<std::vector<std::string>>();
        if (j.contains("articles_per_class")) spec.articles_per_class = j["articles_per_class"];
        if (j.contains("configs_per_article")) spec.configs_per_article = j["configs_per_article"];
        if (j.contains("image_size")) spec.image_size = j["image_size"];
        if (j.contains("seed")) spec.seed = j["seed"];
        if (j.contains("noise_sigma")) spec.noise_sigma = j["noise_sigma"];
        if (j.contains("illumination_falloff")) {
            spec.illumination_falloff = j["illumination_falloff"];
        }
    }
    const Manifest manifest =
        generate_synth(spec, out_dir, state.config.resolve_workers());
    std::cout << "wrote " << manifest.records.size() << " images ("
              << manifest.class_counts.size() << " classes) under " << out_dir << "\n";
    return 0;
}

int cmd_extract(CliState& state, const std::string& manifest_path, const std::string& out_dir) {
    using namespace texfv;
    state.resolve();
    const Manifest manifest = parse_manifest(manifest_path);
    const DsiftParams params = state.config.dsift();
    fs::create_directories(out_dir);

    std::vector<const ImageRecord*> records;
    for (const auto& r : manifest.records) {
        if (!r.missing) records.push_back(&r);
    }
    parallel_for(records.size(), state.config.resolve_workers(), [&](std::size_t i) {
        const ImageRecord& rec = *records[i];
        const LoadedImage image = load_image(manifest.resolved_path(rec));
        const MultiscaleResult multi = extract_dsift_multiscale(image.gray, params);
        save_descriptors(
            (fs::path(out_dir) / (std::to_string(rec.image_id) + ".dsf")).string(),
            multi.descriptors);
    });
    std::cout << "extracted descriptors for " << records.size() << " images ("
              << manifest.missing_count() << " missing skipped) into " << out_dir << "\n";
    return 0;
}

int cmd_train(CliState& state, const std::string& manifest_path, const std::string& out_dir,
              std::string feature_set) {
    using namespace texfv;
    state.resolve();
    const RunConfig& cfg = state.config;
    if (feature_set.empty()) feature_set = "ifv";
    if (feature_set != "ifv" && feature_set != "embedding" && feature_set != "fused") {
        fail("BadValue", "feature set must be ifv|embedding|fused, got '" + feature_set + "'");
    }

    const Manifest manifest = parse_manifest(manifest_path);
    const int workers = cfg.resolve_workers();
    fs::create_directories(out_dir);

    TimingTable timings;
    const DescriptorCache cache =
        DescriptorCache::extract(manifest, cfg.dsift(), cfg.max_descriptors_per_image,
                                 cfg.seed, workers, &timings);

    std::shared_ptr<EmbeddingSource> source;
    if (feature_set != "ifv") source = make_embedding_source(cfg, cache, &timings, workers);

    const Split split = stratified_split(manifest, cfg.train_fraction, cfg.seed);
    const EncodeParams encode = cfg.encode();

    GmmModel gmm;
    const bool needs_gmm = feature_set != "embedding";
    if (needs_gmm) {
        const DescriptorMatrix pool = build_gmm_pool(
            cache, split.train_ids, encode.gmm_pool, derive_seed(cfg.seed, fnv1a64("train")));
        gmm = fit_gmm(pool, encode.gmm_k, derive_seed(cfg.seed, fnv1a64("train-gmm")),
                      encode.gmm_fit);
        save_gmm((fs::path(out_dir) / "gmm.bin").string(), gmm);
    }

    std::map<std::int64_t, int> label_of;
    for (const auto& r : manifest.records) {
        if (!r.missing) label_of[r.image_id] = r.label_id;
    }
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (const std::int64_t id : split.train_ids) {
        std::vector<double> x;
        if (feature_set == "ifv") {
            x = encode_ifv(gmm, cache.descriptors(id)).data;
        } else if (feature_set == "embedding") {
            x = source->get(id);
            double norm_sq = 0.0;
            for (double v : x) norm_sq += v * v;
            if (norm_sq > 0.0) {
                for (double& v : x) v /= std::sqrt(norm_sq);
            }
        } else {
            x = fuse(encode_ifv(gmm, cache.descriptors(id)), source->get(id)).data;
        }
        xs.push_back(std::move(x));
        ys.push_back(label_of.at(id));
    }
    const LinearSvmModel svm = train_sdca(xs, ys, cfg.svm(), derive_seed(cfg.seed, fnv1a64("svm")));
    save_svm((fs::path(out_dir) / "svm.bin").string(), svm);

    ordered_json meta;
    meta["feature_set"] = feature_set;
    meta["feature_dim"] = svm.dim;
    meta["embedding_kind"] = source ? source->kind() : "";
    meta["train_fraction"] = cfg.train_fraction;
    meta["train_count"] = split.train_ids.size();
    meta["config"] = cfg.echo();
    std::ofstream meta_out(fs::path(out_dir) / "model_meta.json");
    meta_out << meta.dump(2) << "\n";
    if (!meta_out) fail("IoError", "write failed: model_meta.json");

    std::cout << "trained " << feature_set << " model on " << split.train_ids.size()
              << " images (dim " << svm.dim << ") into " << out_dir << "\n";
    return 0;
}

int cmd_eval(CliState& state, const std::string& manifest_path, const std::string& out_dir) {
    using namespace texfv;
    state.resolve();
    const RunConfig& cfg = state.config;
    const Manifest manifest = parse_manifest(manifest_path);
    const int workers = cfg.resolve_workers();

    TimingTable timings;
    DescriptorCache cache;
    if (needs_descriptors(cfg)) {
        cache = DescriptorCache::extract(manifest, cfg.dsift(), cfg.max_descriptors_per_image,
                                         cfg.seed, workers, &timings);
    }

    std::shared_ptr<EmbeddingSource> source;
    for (const auto& name : cfg.eval_feature_sets) {
        if (name == "embedding" || name == "fused") {
            source = make_embedding_source(cfg, cache, &timings, workers);
            break;
        }
    }

    const EncodeParams encode = cfg.encode();
    std::optional<SharedGmm> shared;
    if (cfg.eval_shared_gmm) {
        std::vector<std::int64_t> usable;
        for (const auto& r : manifest.records) {
            if (!r.missing) usable.push_back(r.image_id);
        }
        shared = fit_shared_gmm(cache, usable, encode, derive_seed(cfg.seed, fnv1a64("shared")));
    }

    std::vector<std::shared_ptr<FeatureProvider>> providers;
    for (const auto& name : cfg.eval_feature_sets) {
        if (name == "embedding") {
            providers.push_back(make_embedding_provider(source));
        } else if (name == "ifv") {
            providers.push_back(shared ? make_ifv_provider_shared(cache, *shared)
                                       : make_ifv_provider(cache, encode));
        } else if (name == "fused") {
            providers.push_back(shared ? make_fused_provider_shared(cache, *shared, source)
                                       : make_fused_provider(cache, encode, source));
        } else {
            fail("BadValue", "unknown feature set '" + name + "'");
        }
    }

    EvalReport report =
        run_protocol(manifest, providers, cfg.eval(), sdca_trainer(cfg.svm()), timings);
    report.config_echo = cfg.echo();
    report.config_echo["workers"] = std::to_string(workers);
    if ((cfg.eval_fractions.empty() ? default_fractions().size() : cfg.eval_fractions.size()) >=
        4) {
        flag_outliers(report);
    }
    emit_report(report, out_dir, cfg.timestamp);

    for (const auto& name : report.feature_sets) {
        for (std::size_t fi = 0; fi < report.fractions.size(); ++fi) {
            const CellStats& cell = report.cell(name, fi);
            std::cout << name << " @" << format_sig6(cell.fraction) << ": mean "
                      << format_sig6(cell.mean_accuracy) << " sd " << format_sig6(cell.stddev)
                      << (cell.outlier ? " [outlier]" : "") << "\n";
        }
    }
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_classify(CliState& state, const std::string& model_dir, const std::string& image_path) {
    using namespace texfv;
    state.resolve();
    const RunConfig& cfg = state.config;

    std::ifstream meta_in(fs::path(model_dir) / "model_meta.json");
    if (!meta_in) fail("IoError", "cannot open " + model_dir + "/model_meta.json");
    const ordered_json meta = ordered_json::parse(meta_in);
    const std::string feature_set = meta.at("feature_set");
    const std::string embedding_kind = meta.value("embedding_kind", "");

    const LinearSvmModel svm = load_svm((fs::path(model_dir) / "svm.bin").string());
    const LoadedImage image = load_image(image_path);

    DsiftParams dsift_params = cfg.dsift();
    if (meta.contains("config")) {
        RunConfig trained;
        for (const auto& [k, v] : meta.at("config").items()) {
            trained.set(k, v.get<std::string>());
        }
        dsift_params = trained.dsift();
    }

    const MultiscaleResult multi = extract_dsift_multiscale(image.gray, dsift_params);
    const DescriptorMatrix capped =
        cap_descriptors(multi.descriptors, cfg.max_descriptors_per_image,
                        derive_seed(cfg.seed, fnv1a64("classify")));

    std::vector<double> features;
    if (feature_set == "ifv" || feature_set == "fused") {
        const GmmModel gmm = load_gmm((fs::path(model_dir) / "gmm.bin").string());
        const FisherVector ifv = encode_ifv(gmm, capped);
        if (feature_set == "ifv") {
            features = ifv.data;
        } else {
            if (embedding_kind != "standin") {
                fail("MissingFeatures",
                     "fused model was trained on table embeddings; single-image "
                     "classification needs standin embeddings");
            }
            StandinEmbedder embedder(capped.dim, cfg.embedding_dim, cfg.seed);
            features = fuse(ifv, embedder.embed(capped)).data;
        }
    } else if (feature_set == "embedding") {
        if (embedding_kind != "standin") {
            fail("MissingFeatures", "embedding model was trained on table embeddings; "
                                    "single-image classification needs standin embeddings");
        }
        StandinEmbedder embedder(capped.dim, cfg.embedding_dim, cfg.seed);
        features = embedder.embed(capped);
        double norm_sq = 0.0;
        for (double v : features) norm_sq += v * v;
        if (norm_sq > 0.0) {
            for (double& v : features) v /= std::sqrt(norm_sq);
        }
    } else {
        fail("BadValue", "model has unknown feature set '" + feature_set + "'");
    }

    const int label = predict(svm, features);
    ColorReport colors = dominant_colors(image.rgb, cfg.color_k, cfg.seed,
                                         {50, cfg.color_min_proportion});

    ordered_json out;
    out["image"] = image_path;
    out["texture"] = label_name(label);
    out["label_id"] = label;
    out["feature_set"] = feature_set;
    out["colors"] = color_report_json(colors)["colors"];
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_colors(CliState& state, const std::string& image_path, int k) {
    using namespace texfv;
    state.resolve();
    const LoadedImage image = load_image(image_path);
    ColorReport report =
        dominant_colors(image.rgb, k > 0 ? k : state.config.color_k, state.config.seed,
                        {50, state.config.color_min_proportion});
    ordered_json out = color_report_json(report);
    out["image"] = image_path;
    std::cout << out.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"texfv: clothing texture and color classification toolchain"};
    app.require_subcommand(1);

    CliState synth_state, extract_state, train_state, eval_state, classify_state, colors_state;
    std::string synth_out, synth_spec;
    std::string extract_manifest, extract_out;
    std::string train_manifest, train_out, train_feature_set;
    std::string eval_manifest, eval_out;
    std::string classify_model, classify_image;
    std::string colors_image;
    int colors_k = 0;

    auto* synth = app.add_subcommand("synth", "generate a synthetic texture dataset");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--spec", synth_spec, "synth spec as JSON (overrides synth_* keys)");
    add_common(synth, synth_state);

    auto* extract = app.add_subcommand("extract", "extract multiscale DSIFT descriptors");
    extract->add_option("--manifest", extract_manifest, "manifest CSV")->required();
    extract->add_option("--out", extract_out, "output directory for .dsf files")->required();
    add_common(extract, extract_state);

    auto* train = app.add_subcommand("train", "fit the GMM codebook and SVM on one split");
    train->add_option("--manifest", train_manifest, "manifest CSV")->required();
    train->add_option("--out", train_out, "output directory for model files")->required();
    train->add_option("--feature-set", train_feature_set, "ifv|embedding|fused (default ifv)");
    add_common(train, train_state);

    auto* eval = app.add_subcommand("eval", "run the random-subsampling evaluation protocol");
    eval->add_option("--manifest", eval_manifest, "manifest CSV")->required();
    eval->add_option("--out", eval_out, "output directory for report files")->required();
    add_common(eval, eval_state);

    auto* classify = app.add_subcommand("classify", "classify one image with a trained model");
    classify->add_option("--model", classify_model, "model directory from `train`")->required();
    classify->add_option("--image", classify_image, "PNG or JPEG image")->required();
    add_common(classify, classify_state);

    auto* colors = app.add_subcommand("colors", "report the dominant colors of an image");
    colors->add_option("--image", colors_image, "PNG or JPEG image")->required();
    colors->add_option("--k", colors_k, "number of color clusters (default color_k)");
    add_common(colors, colors_state);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_state, synth_out, synth_spec);
        if (extract->parsed()) return cmd_extract(extract_state, extract_manifest, extract_out);
        if (train->parsed()) {
            return cmd_train(train_state, train_manifest, train_out, train_feature_set);
        }
        if (eval->parsed()) return cmd_eval(eval_state, eval_manifest, eval_out);
        if (classify->parsed()) {
            return cmd_classify(classify_state, classify_model, classify_image);
        }
        if (colors->parsed()) return cmd_colors(colors_state, colors_image, colors_k);
    } catch (const texfv::Error& e) {
        std::cerr << "error: {\"code\":\"" << e.code() << "\",\"message\":"
                  << nlohmann::json(std::string(e.what())).dump() << "}\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: {\"code\":\"Error\",\"message\":"
                  << nlohmann::json(std::string(e.what())).dump() << "}\n";
        return 1;
    }
    return 1;
}

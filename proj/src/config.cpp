#include "texfv/config.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include "texfv/errors.hpp"
#include "texfv/parallel.hpp"
#include "texfv/text.hpp"

namespace texfv {

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    fail("BadValue", key + " must be true|false, got '" + value + "'");
}

int parse_int(const std::string& value, const std::string& key) {
    std::int64_t v = 0;
    if (!parse_int64(value, v)) fail("BadValue", key + " must be an integer, got '" + value + "'");
    return int(v);
}

std::size_t parse_size(const std::string& value, const std::string& key) {
    std::int64_t v = 0;
    if (!parse_int64(value, v) || v < 0) {
        fail("BadValue", key + " must be a non-negative integer, got '" + value + "'");
    }
    return std::size_t(v);
}

double parse_real(const std::string& value, const std::string& key) {
    double v = 0.0;
    if (!parse_double(value, v)) fail("BadValue", key + " must be a number, got '" + value + "'");
    return v;
}

std::vector<double> parse_real_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    if (trim(value).empty()) return out;
    for (const auto& part : split(value, ',')) {
        out.push_back(parse_real(trim(part), key));
    }
    return out;
}

std::vector<std::string> parse_name_list(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& part : split(value, ',')) {
        const std::string name = trim(part);
        if (!name.empty()) out.push_back(name);
    }
    return out;
}

std::string real_list_string(const std::vector<double>& v) {
    std::vector<std::string> parts;
    for (double x : v) parts.push_back(format_double(x));
    return join(parts, ",");
}

} // namespace

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> list = {
        "seed", "workers",
        "dsift_num_orientations", "dsift_spatial_bins", "dsift_bin_size_px", "dsift_step_px",
        "dsift_scales", "dsift_clamp",
        "gmm_k", "gmm_pool", "gmm_max_iter", "gmm_tol", "gmm_variance_floor",
        "max_descriptors_per_image",
        "svm_lambda", "svm_max_epochs", "svm_gap_tol",
        "eval_fractions", "eval_folds", "eval_feature_sets", "eval_shared_gmm",
        "embeddings", "standin_embeddings", "embedding_dim",
        "color_k", "color_min_proportion",
        "synth_classes", "synth_articles_per_class", "synth_configs_per_article",
        "synth_image_size", "synth_noise_sigma", "synth_illumination_falloff",
        "train_fraction", "timestamp",
    };
    return list;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") {
        std::int64_t v = 0;
        if (!parse_int64(value, v)) fail("BadValue", "seed must be an integer");
        seed = std::uint64_t(v);
    } else if (key == "workers") workers = parse_int(value, key);
    else if (key == "dsift_num_orientations") dsift_num_orientations = parse_int(value, key);
    else if (key == "dsift_spatial_bins") dsift_spatial_bins = parse_int(value, key);
    else if (key == "dsift_bin_size_px") dsift_bin_size_px = parse_int(value, key);
    else if (key == "dsift_step_px") dsift_step_px = parse_int(value, key);
    else if (key == "dsift_scales") dsift_scales = parse_real_list(value, key);
    else if (key == "dsift_clamp") dsift_clamp = parse_real(value, key);
    else if (key == "gmm_k") gmm_k = parse_int(value, key);
    else if (key == "gmm_pool") gmm_pool = parse_size(value, key);
    else if (key == "gmm_max_iter") gmm_max_iter = parse_int(value, key);
    else if (key == "gmm_tol") gmm_tol = parse_real(value, key);
    else if (key == "gmm_variance_floor") gmm_variance_floor = parse_real(value, key);
    else if (key == "max_descriptors_per_image") {
        max_descriptors_per_image = parse_size(value, key);
    } else if (key == "svm_lambda") svm_lambda = parse_real(value, key);
    else if (key == "svm_max_epochs") svm_max_epochs = parse_int(value, key);
    else if (key == "svm_gap_tol") svm_gap_tol = parse_real(value, key);
    else if (key == "eval_fractions") eval_fractions = parse_real_list(value, key);
    else if (key == "eval_folds") eval_folds = parse_int(value, key);
    else if (key == "eval_feature_sets") eval_feature_sets = parse_name_list(value);
    else if (key == "eval_shared_gmm") eval_shared_gmm = parse_bool(value, key);
    else if (key == "embeddings") embeddings = trim(value);
    else if (key == "standin_embeddings") standin_embeddings = parse_bool(value, key);
    else if (key == "embedding_dim") embedding_dim = parse_int(value, key);
    else if (key == "color_k") color_k = parse_int(value, key);
    else if (key == "color_min_proportion") color_min_proportion = parse_real(value, key);
    else if (key == "synth_classes") synth_classes = parse_name_list(value);
    else if (key == "synth_articles_per_class") synth_articles_per_class = parse_int(value, key);
    else if (key == "synth_configs_per_article") {
        synth_configs_per_article = parse_int(value, key);
    } else if (key == "synth_image_size") synth_image_size = parse_int(value, key);
    else if (key == "synth_noise_sigma") synth_noise_sigma = parse_real(value, key);
    else if (key == "synth_illumination_falloff") {
        synth_illumination_falloff = parse_real(value, key);
    } else if (key == "train_fraction") train_fraction = parse_real(value, key);
    else if (key == "timestamp") timestamp = parse_bool(value, key);
    else fail("UnknownKey", "unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IoError", "cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            fail("BadValue", path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
}

std::map<std::string, std::string> RunConfig::echo() const {
    std::map<std::string, std::string> out;
    out["seed"] = std::to_string(seed);
    out["workers"] = std::to_string(workers);
    out["dsift_num_orientations"] = std::to_string(dsift_num_orientations);
    out["dsift_spatial_bins"] = std::to_string(dsift_spatial_bins);
    out["dsift_bin_size_px"] = std::to_string(dsift_bin_size_px);
    out["dsift_step_px"] = std::to_string(dsift_step_px);
    out["dsift_scales"] =
        real_list_string(dsift_scales.empty() ? default_scales() : dsift_scales);
    out["dsift_clamp"] = format_double(dsift_clamp);
    out["gmm_k"] = std::to_string(gmm_k);
    out["gmm_pool"] = std::to_string(gmm_pool);
    out["gmm_max_iter"] = std::to_string(gmm_max_iter);
    out["gmm_tol"] = format_double(gmm_tol);
    out["gmm_variance_floor"] = format_double(gmm_variance_floor);
    out["max_descriptors_per_image"] = std::to_string(max_descriptors_per_image);
    out["svm_lambda"] = format_double(svm_lambda);
    out["svm_max_epochs"] = std::to_string(svm_max_epochs);
    out["svm_gap_tol"] = format_double(svm_gap_tol);
    out["eval_fractions"] =
        real_list_string(eval_fractions.empty() ? default_fractions() : eval_fractions);
    out["eval_folds"] = std::to_string(eval_folds);
    out["eval_feature_sets"] = join(eval_feature_sets, ",");
    out["eval_shared_gmm"] = eval_shared_gmm ? "true" : "false";
    out["embeddings"] = embeddings;
    out["standin_embeddings"] = standin_embeddings ? "true" : "false";
    out["embedding_dim"] = std::to_string(embedding_dim);
    out["color_k"] = std::to_string(color_k);
    out["color_min_proportion"] = format_double(color_min_proportion);
    out["synth_classes"] = join(synth_classes, ",");
    out["synth_articles_per_class"] = std::to_string(synth_articles_per_class);
    out["synth_configs_per_article"] = std::to_string(synth_configs_per_article);
    out["synth_image_size"] = std::to_string(synth_image_size);
    out["synth_noise_sigma"] = format_double(synth_noise_sigma);
    out["synth_illumination_falloff"] = format_double(synth_illumination_falloff);
    out["train_fraction"] = format_double(train_fraction);
    out["timestamp"] = timestamp ? "true" : "false";
    return out;
}

DsiftParams RunConfig::dsift() const {
    DsiftParams p;
    p.num_orientations = dsift_num_orientations;
    p.spatial_bins = dsift_spatial_bins;
    p.bin_size_px = dsift_bin_size_px;
    p.step_px = dsift_step_px;
    p.scales = dsift_scales;
    p.clamp_threshold = dsift_clamp;
    return p;
}

EncodeParams RunConfig::encode() const {
    EncodeParams p;
    p.gmm_k = gmm_k;
    p.gmm_pool = gmm_pool;
    p.gmm_fit.max_iter = gmm_max_iter;
    p.gmm_fit.tol = gmm_tol;
    p.gmm_fit.variance_floor = gmm_variance_floor;
    p.max_descriptors_per_image = max_descriptors_per_image;
    return p;
}

SdcaOptions RunConfig::svm() const {
    SdcaOptions o;
    o.lambda = svm_lambda;
    o.max_epochs = svm_max_epochs;
    o.gap_tol = svm_gap_tol;
    return o;
}

EvalConfig RunConfig::eval() const {
    EvalConfig c;
    c.fractions = eval_fractions;
    c.folds = eval_folds;
    c.feature_sets = eval_feature_sets;
    c.seed = seed;
    c.shared_gmm = eval_shared_gmm;
    c.workers = resolve_workers();
    return c;
}

SynthSpec RunConfig::synth() const {
    SynthSpec s;
    s.classes = synth_classes;
    s.articles_per_class = synth_articles_per_class;
    s.configs_per_article = synth_configs_per_article;
    s.image_size = synth_image_size;
    s.seed = seed;
    s.noise_sigma = synth_noise_sigma;
    s.illumination_falloff = synth_illumination_falloff;
    return s;
}

int RunConfig::resolve_workers() const {
    if (workers > 0) return workers;
    return default_workers();
}

int default_workers() {
    if (const char* env = std::getenv("TEXFV_WORKERS")) {
        std::int64_t v = 0;
        if (parse_int64(env, v) && v > 0) return int(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

} // namespace texfv

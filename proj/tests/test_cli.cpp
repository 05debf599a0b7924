#include <cstdlib>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "support.hpp"
#include "texfv/manifest.hpp"

using testsupport::TempDir;

namespace {

std::string cli_path() {
    const char* env = std::getenv("TEXFV_CLI");
    REQUIRE_MESSAGE(env != nullptr, "TEXFV_CLI must point at the texfv binary");
    return env;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const TempDir& scratch) {
    const std::string out_path = scratch.str("stdout.txt");
    const std::string err_path = scratch.str("stderr.txt");
    const std::string cmd =
        cli_path() + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

/// Small synthetic dataset shared by the CLI cases (3 classes, 48 images).
const std::string& shared_dataset() {
    static TempDir dir("cli_data");
    static bool ready = false;
    static std::string root;
    if (!ready) {
        TempDir scratch("cli_gen");
        const RunResult r = run_cli(
            "synth --out " + dir.str() +
                " --set synth_classes=Striped,None,Checked"
                " --set synth_articles_per_class=2 --set synth_configs_per_article=8"
                " --set synth_image_size=128 --seed 42",
            scratch);
        REQUIRE_MESSAGE(r.exit_code == 0, r.err);
        ready = true;
        root = dir.str();
    }
    return root;
}

std::string fast_flags() {
    return " --set dsift_scales=0.5,1.0 --set max_descriptors_per_image=600"
           " --set gmm_k=8 --set gmm_pool=6000 --set gmm_max_iter=15"
           " --set svm_max_epochs=80 --workers 1";
}

} // namespace

TEST_CASE("synth writes a parseable dataset") {
    const std::string root = shared_dataset();
    const texfv::Manifest m = texfv::parse_manifest(root + "/manifest.csv");
    CHECK(m.records.size() == 48);
    CHECK(m.missing_count() == 0);
    CHECK(m.class_counts.size() == 3);
}

TEST_CASE("unknown config keys exit nonzero and name the key") {
    TempDir scratch("cli_unknown");
    const RunResult r =
        run_cli("synth --out " + scratch.str("d") + " --set stepp_px=4", scratch);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("UnknownKey") != std::string::npos);
    CHECK(r.err.find("stepp_px") != std::string::npos);
}

TEST_CASE("colors reports dominant palette names as JSON") {
    const std::string root = shared_dataset();
    TempDir scratch("cli_colors");
    const RunResult r =
        run_cli("colors --image " + root + "/images/striped_a00_c00.png --k 3", scratch);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.contains("colors"));
    REQUIRE(!j["colors"].empty());
    double total = 0.0;
    for (const auto& c : j["colors"]) {
        CHECK(c.contains("name"));
        CHECK(c["rgb"].size() == 3);
        total += double(c["proportion"]);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("eval with one fraction and one fold emits one row per feature set") {
    const std::string root = shared_dataset();
    TempDir scratch("cli_eval");
    const std::string out = scratch.str("report");
    const RunResult r = run_cli(
        "eval --manifest " + root + "/manifest.csv --out " + out +
            " --set eval_feature_sets=embedding --set standin_embeddings=true"
            " --set embedding_dim=64 --set eval_fractions=0.5 --set eval_folds=1"
            " --set timestamp=false" + fast_flags(),
        scratch);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);

    std::ifstream results(out + "/results.csv");
    REQUIRE(results);
    std::string line;
    std::size_t data_rows = 0;
    while (std::getline(results, line)) {
        if (line.rfind("#", 0) == 0 || line.rfind("feature_set", 0) == 0) continue;
        ++data_rows;
    }
    CHECK(data_rows == 1);
    CHECK(std::filesystem::exists(out + "/figure14.svg"));
    CHECK(std::filesystem::exists(out + "/folds.csv"));
    CHECK(std::filesystem::exists(out + "/report.json"));

    // config echo lands in the CSV header comments
    const std::string results_text = slurp(out + "/results.csv");
    CHECK(results_text.find("# gmm_k = 8") != std::string::npos);
}

TEST_CASE("eval outputs are byte-identical across invocations") {
    const std::string root = shared_dataset();
    TempDir scratch("cli_det");
    const std::string args =
        " --set eval_feature_sets=ifv --set eval_fractions=0.5 --set eval_folds=2"
        " --set timestamp=false" + fast_flags();
    const RunResult r1 = run_cli("eval --manifest " + root + "/manifest.csv --out " +
                                     scratch.str("a") + args,
                                 scratch);
    REQUIRE_MESSAGE(r1.exit_code == 0, r1.err);
    const RunResult r2 = run_cli("eval --manifest " + root + "/manifest.csv --out " +
                                     scratch.str("b") + args,
                                 scratch);
    REQUIRE_MESSAGE(r2.exit_code == 0, r2.err);
    CHECK(slurp(scratch.str("a/results.csv")) == slurp(scratch.str("b/results.csv")));
    CHECK(slurp(scratch.str("a/folds.csv")) == slurp(scratch.str("b/folds.csv")));
    CHECK(slurp(scratch.str("a/figure14.svg")) == slurp(scratch.str("b/figure14.svg")));
}

TEST_CASE("train then classify a striped image") {
    const std::string root = shared_dataset();
    TempDir scratch("cli_train");
    const std::string model_dir = scratch.str("model");
    const RunResult train = run_cli(
        "train --manifest " + root + "/manifest.csv --out " + model_dir +
            " --feature-set ifv --set train_fraction=0.8" + fast_flags(),
        scratch);
    REQUIRE_MESSAGE(train.exit_code == 0, train.err);
    CHECK(std::filesystem::exists(model_dir + "/gmm.bin"));
    CHECK(std::filesystem::exists(model_dir + "/svm.bin"));
    CHECK(std::filesystem::exists(model_dir + "/model_meta.json"));

    const RunResult classify = run_cli(
        "classify --model " + model_dir + " --image " + root +
            "/images/striped_a00_c02.png" + fast_flags(),
        scratch);
    REQUIRE_MESSAGE(classify.exit_code == 0, classify.err);
    const auto j = nlohmann::json::parse(classify.out);
    CHECK(j.at("texture") == "Striped");
    CHECK(j.contains("colors"));
}

TEST_CASE("extract writes DSF1 files per image") {
    const std::string root = shared_dataset();
    TempDir scratch("cli_extract");

    // narrow manifest: two records only, to keep the full pyramid cheap
    texfv::Manifest m = texfv::parse_manifest(root + "/manifest.csv");
    m.records.resize(2);
    m.rebuild_counts();
    for (auto& rec : m.records) {
        rec.image_path = root + "/" + rec.image_path; // absolute
    }
    texfv::write_manifest(m, scratch.str("two.csv"));

    const RunResult r = run_cli("extract --manifest " + scratch.str("two.csv") + " --out " +
                                    scratch.str("d") + " --set dsift_scales=0.5,1.0",
                                scratch);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(std::filesystem::exists(scratch.str("d/0.dsf")));
    CHECK(std::filesystem::exists(scratch.str("d/1.dsf")));
}

TEST_CASE("--help lists the config keys with defaults") {
    TempDir scratch("cli_help");
    for (const std::string sub : {"synth", "extract", "train", "eval", "classify", "colors"}) {
        const RunResult r = run_cli(sub + " --help", scratch);
        REQUIRE(r.exit_code == 0);
        CHECK(r.out.find("gmm_k = 160") != std::string::npos);
        CHECK(r.out.find("eval_folds = 40") != std::string::npos);
        CHECK(r.out.find("dsift_step_px = 4") != std::string::npos);
    }
}

TEST_CASE("missing image file is a clean error") {
    TempDir scratch("cli_missing");
    const RunResult r = run_cli("colors --image " + scratch.str("nope.png"), scratch);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("IoError") != std::string::npos);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "simecs/simec.hpp"

using namespace simecs;
namespace cli = simecs::cli;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "simecs_cli_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
    const std::string path = (temp_dir() / name).string();
    std::ofstream out(path, std::ios::trunc);
    out << text;
    return path;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run_argv(std::initializer_list<const char*> args) {
    std::vector<const char*> argv = {"simecs"};
    argv.insert(argv.end(), args.begin(), args.end());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

const char* kTrainConfig = R"(
# synthetic training run
data = synth_lowrank
m = 120
rank = 6
noise = 0.1
train_fraction = 0.8
seed = 9

target = lowrank_true
center = 1

embed_dim = 6
lambda_sym = 1
lr = 0.02
epochs = 120
)";

}  // namespace

TEST_CASE("key=value config parsing") {
    cli::KeyValueConfig cfg = cli::KeyValueConfig::parse_text(
        "a = 1\n# comment\nb=hello world \n c = 2.5 # trailing\nlist = 1,2,3\n");
    CHECK(cfg.get_size("a", 0) == 1);
    CHECK(cfg.get_string("b", "") == "hello world");
    CHECK(cfg.get_double("c", 0.0) == 2.5);
    CHECK(cfg.get_size_list("list") == std::vector<std::size_t>{1, 2, 3});
    CHECK(cfg.get_bool("missing", true) == true);
    CHECK_THROWS(cli::KeyValueConfig::parse_text("not a pair\n"));
}

TEST_CASE("cmd_train writes a loadable model and a loss trace") {
    const std::string cfg_path = write_file("train.cfg", kTrainConfig);
    const std::string model_path = (temp_dir() / "model.bin").string();
    const int status = cli::cmd_train(cfg_path, "", model_path, std::nullopt);
    CHECK(status == 0);

    SimEcModel model = load_model(model_path);
    CHECK(model.config.embed_dim == 6);
    CHECK(model.config.epochs == 120);

    const std::string trace = read_file(model_path + ".loss.csv");
    CHECK(trace.rfind("epoch,loss\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : trace)
        if (c == '\n') ++lines;
    CHECK(lines == 121);  // header + one row per epoch
}

TEST_CASE("train rerun with the same seed reproduces the loss trace exactly") {
    const std::string cfg_path = write_file("train2.cfg", kTrainConfig);
    const std::string m1 = (temp_dir() / "m1.bin").string();
    const std::string m2 = (temp_dir() / "m2.bin").string();
    REQUIRE(cli::cmd_train(cfg_path, "", m1, std::nullopt) == 0);
    REQUIRE(cli::cmd_train(cfg_path, "", m2, std::nullopt) == 0);
    CHECK(read_file(m1 + ".loss.csv") == read_file(m2 + ".loss.csv"));
    CHECK(read_file(m1) == read_file(m2));

    // a different seed changes the run
    const std::string m3 = (temp_dir() / "m3.bin").string();
    REQUIRE(cli::cmd_train(cfg_path, "", m3, 1234) == 0);
    CHECK(read_file(m1 + ".loss.csv") != read_file(m3 + ".loss.csv"));
}

TEST_CASE("cmd_eval reproduces the train-time metrics") {
    const std::string cfg_path = write_file("eval.cfg", kTrainConfig);
    const std::string model_path = (temp_dir() / "eval_model.bin").string();
    REQUIRE(cli::cmd_train(cfg_path, "", model_path, std::nullopt) == 0);

    // recompute the training metrics in-process for comparison
    cli::KeyValueConfig cfg = cli::KeyValueConfig::parse_file(cfg_path);
    cli::Prepared prep = cli::prepare_data(cfg, "", std::nullopt);
    SimEcConfig mc = cli::model_config(cfg, prep, std::nullopt);
    TrainResult reference = train(mc, prep.x, prep.target);

    SimEcModel model = load_model(model_path);
    EvalMetrics metrics = evaluate(model, prep.x, prep.target);
    CHECK(std::abs(metrics.relation_mse - reference.report.final_relation_mse) < 1e-9);
    REQUIRE(metrics.gram_mse.has_value());
    REQUIRE(reference.report.final_gram_mse.has_value());
    CHECK(std::abs(*metrics.gram_mse - *reference.report.final_gram_mse) < 1e-9);

    const std::string csv_path = (temp_dir() / "eval.csv").string();
    CHECK(cli::cmd_eval(model_path, cfg_path, "", csv_path, std::nullopt) == 0);
    const std::string csv = read_file(csv_path);
    CHECK(csv.rfind("metric,value\n", 0) == 0);
    CHECK(csv.find("relation_mse,") != std::string::npos);
    CHECK(csv.find("gram_mse,") != std::string::npos);
}

TEST_CASE("cmd_eval can score the held-out split of the same config") {
    const std::string cfg_path =
        write_file("eval_test_split.cfg", std::string(kTrainConfig));
    const std::string model_path = (temp_dir() / "split_model.bin").string();
    REQUIRE(cli::cmd_train(cfg_path, "", model_path, std::nullopt) == 0);

    const std::string test_cfg = write_file(
        "eval_test_split2.cfg", std::string(kTrainConfig) + "\neval_split = test\n");
    cli::KeyValueConfig cfg = cli::KeyValueConfig::parse_file(test_cfg);
    cli::Prepared prep = cli::prepare_data(cfg, "", std::nullopt);
    CHECK(prep.x.rows() == 24);  // 20% of 120

    SimEcModel model = load_model(model_path);
    // the model predicts 96 training columns; the 24-row test target has
    // too few, so the shape mismatch is reported with both shapes
    CHECK(cli::cmd_eval(model_path, test_cfg, "", "", std::nullopt) == 1);

    // out-of-sample embedding of the held-out rows works directly
    Matrix y = embed(model, prep.x);
    CHECK(y.rows() == 24);
    CHECK(y.cols() == 6);
}

TEST_CASE("experiment CSV: format, determinism, seed sensitivity") {
    cli::ExperimentResult result = cli::run_experiment("fig4_reg", 0.12, 7, "");
    CHECK(result.experiment_id == "fig4_reg");
    CHECK(!result.sweep_values.empty());
    for (const auto& [method, series] : result.metric_series)
        CHECK(series.size() == result.sweep_values.size());

    const std::string out1 = (temp_dir() / "fig4a.csv").string();
    const std::string out2 = (temp_dir() / "fig4b.csv").string();
    cli::write_experiment_csv(out1, result);
    cli::ExperimentResult rerun = cli::run_experiment("fig4_reg", 0.12, 7, "");
    cli::write_experiment_csv(out2, rerun);
    CHECK(read_file(out1) == read_file(out2));

    const std::string csv = read_file(out1);
    CHECK(csv.rfind("sweep_value,method,mse\n", 0) == 0);
    CHECK(csv.find("\r") == std::string::npos);

    cli::ExperimentResult other = cli::run_experiment("fig4_reg", 0.12, 8, "");
    const std::string out3 = (temp_dir() / "fig4c.csv").string();
    cli::write_experiment_csv(out3, other);
    CHECK(read_file(out1) != read_file(out3));
}

TEST_CASE("fig4_missing at 0% missing matches the mean-fill reference closely") {
    cli::ExperimentResult result = cli::run_experiment("fig4_missing", 0.4, 5, "");
    const auto& sweep = result.sweep_values;
    REQUIRE(sweep.front() == 0.0);
    const double simec = result.metric_series.at("simec_gram").front();
    const double fill = result.metric_series.at("mean_fill_eig").front();
    CHECK(std::abs(simec - fill) <= 0.10 * std::max(simec, fill));
}

TEST_CASE("fig3 keeps the eigendecomposition optimal at every swept d") {
    cli::ExperimentResult result = cli::run_experiment("fig3", 0.16, 3, "");
    const auto& eig = result.metric_series.at("eigendecomposition");
    for (const auto& [method, series] : result.metric_series) {
        for (std::size_t i = 0; i < series.size(); ++i)
            CHECK(eig[i] <= series[i] + 1e-12);
    }
    CHECK(result.synthetic_data);
}

TEST_CASE("fig6 predicts the non-metric similarity below the positive-only error") {
    cli::ExperimentResult result = cli::run_experiment("fig6", 0.3, 4, "");
    const auto& simec = result.metric_series.at("simec_ywl");
    const auto& pos = result.metric_series.at("kpca_positive");
    const auto& sgn = result.metric_series.at("signed_spectral");
    // the paper's ordering emerges once the embedding has a few dimensions
    for (std::size_t i = 0; i < result.sweep_values.size(); ++i) {
        if (result.sweep_values[i] < 2.0) continue;
        CHECK(simec[i] < pos[i]);
        CHECK(sgn[i] <= pos[i] + 1e-12);
    }
}

TEST_CASE("unknown experiment names are usage errors listing the options") {
    CHECK_THROWS_WITH_AS(cli::run_experiment("fig99", 1.0, 1, ""),
                         doctest::Contains("fig4_missing"), cli::UsageError);
}

TEST_CASE("argv entry point maps failures to exit codes") {
    // missing required --config: usage error
    CHECK(run_argv({"train", "--out", "x.bin"}) == 2);
    // config file that does not exist: usage error
    CHECK(run_argv({"train", "--config", "/nonexistent.cfg", "--out", "x.bin"}) == 2);
    // unknown experiment: usage error
    CHECK(run_argv({"experiment", "--experiment", "nope"}) == 2);
    // unknown subcommand
    CHECK(run_argv({"frobnicate"}) == 2);
    // eval with a missing model file: runtime failure
    const std::string cfg_path = write_file("argv.cfg", kTrainConfig);
    CHECK(run_argv({"eval", "--model", "/nonexistent.bin", "--config",
                    cfg_path.c_str()}) == 1);

    // a full train + experiment pass through argv
    const std::string model_path = (temp_dir() / "argv_model.bin").string();
    CHECK(run_argv({"train", "--config", cfg_path.c_str(), "--out",
                    model_path.c_str()}) == 0);
    const std::string out_dir = (temp_dir() / "argv_exp").string();
    CHECK(run_argv({"experiment", "--experiment", "fig4_targets", "--scale", "0.1",
                    "--seed", "3", "--out", out_dir.c_str()}) == 0);
    CHECK(std::filesystem::exists(out_dir + "/fig4_targets.csv"));
}

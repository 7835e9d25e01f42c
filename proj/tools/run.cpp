#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

namespace simecs::cli {

int run(int argc, const char* const* argv) {
    CLI::App app{"similarity encoder training, evaluation and experiments"};
    app.require_subcommand(1);

    std::string data_dir;
    if (const char* env = std::getenv("SIMECS_DATA_DIR")) data_dir = env;

    std::string config_path, model_path, out_path, experiment_name;
    double scale = 1.0;
    std::uint64_t seed_value = 0;
    bool seed_given = false;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed_value, "override the config/default seed")
            ->each([&](const std::string&) { seed_given = true; });
    };

    CLI::App* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "key=value config file")->required();
    train->add_option("--data-dir", data_dir, "dataset directory");
    train->add_option("--out", out_path, "output model path")->required();
    add_seed(train);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model");
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--config", config_path, "key=value config file")->required();
    eval->add_option("--data-dir", data_dir, "dataset directory");
    eval->add_option("--out", out_path, "metrics CSV path");
    add_seed(eval);

    CLI::App* experiment =
        app.add_subcommand("experiment", "run a desk-scale experiment sweep");
    experiment->add_option("--experiment", experiment_name, "experiment name")
        ->required();
    experiment->add_option("--scale", scale, "size multiplier for the default m");
    experiment->add_option("--out", out_path, "output directory");
    experiment->add_option("--data-dir", data_dir, "dataset directory");
    add_seed(experiment);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::optional<std::uint64_t> seed;
    if (seed_given) seed = seed_value;

    try {
        if (train->parsed()) return cmd_train(config_path, data_dir, out_path, seed);
        if (eval->parsed())
            return cmd_eval(model_path, config_path, data_dir, out_path, seed);
        if (experiment->parsed()) {
            if (out_path.empty()) out_path = ".";
            return cmd_experiment(experiment_name, scale, seed.value_or(1), out_path,
                                  data_dir);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace simecs::cli

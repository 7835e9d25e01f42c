#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "simecs/data.hpp"
#include "simecs/simec.hpp"

namespace simecs::cli {

/// Command-line misuse (unknown experiment, missing config); mapped to exit
/// code 2 by main, whereas runtime failures map to 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// UTF-8 key=value lines with '#' comments.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_text(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::size_t> get_size_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
};

/// 17-significant-digit decimal rendering used for all CSV payloads.
std::string format_double(double v);

struct ExperimentResult {
    std::string experiment_id;
    std::vector<double> sweep_values;
    std::map<std::string, std::vector<double>> metric_series;  // method -> per sweep
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    bool synthetic_data = false;
};

/// CSV with header sweep_value,method,mse; rows sorted by (sweep, method).
void write_experiment_csv(const std::string& path, const ExperimentResult& result);

/// Dataset + target assembled from a config on one split's rows.
struct Prepared {
    Dataset dataset;
    Matrix x;            // model inputs for the selected split
    TargetSpec target;   // relation target on the same rows
    bool synthetic_fallback = false;
};

Prepared prepare_data(const KeyValueConfig& cfg, const std::string& data_dir,
                      std::optional<std::uint64_t> seed_override);

SimEcConfig model_config(const KeyValueConfig& cfg, const Prepared& prep,
                         std::optional<std::uint64_t> seed_override);

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, std::optional<std::uint64_t> seed);
int cmd_eval(const std::string& model_path, const std::string& config_path,
             const std::string& data_dir, const std::string& out_path,
             std::optional<std::uint64_t> seed);

const std::vector<std::string>& experiment_names();
ExperimentResult run_experiment(const std::string& name, double scale,
                                std::uint64_t seed, const std::string& data_dir);
int cmd_experiment(const std::string& name, double scale, std::uint64_t seed,
                   const std::string& out_dir, const std::string& data_dir);

/// Full argv entry point used by main(); returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace simecs::cli

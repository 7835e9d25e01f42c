#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cli.hpp"
#include "simecs/similarity.hpp"

namespace simecs::cli {

namespace {

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

Dataset sequential_split(Matrix features, std::vector<int> labels, double train_fraction) {
    Dataset d;
    d.features = std::move(features);
    d.labels = std::move(labels);
    const std::size_t m = d.size();
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m)));
    d.train_ids.resize(n_train);
    for (std::size_t i = 0; i < n_train; ++i) d.train_ids[i] = i;
    d.test_ids.resize(m - n_train);
    for (std::size_t i = n_train; i < m; ++i) d.test_ids[i - n_train] = i;
    return d;
}

}  // namespace

Prepared prepare_data(const KeyValueConfig& cfg, const std::string& data_dir,
                      std::optional<std::uint64_t> seed_override) {
    Prepared prep;
    const std::uint64_t seed = seed_override.value_or(cfg.get_u64("seed", 1));
    const std::string data = cfg.get_string("data", "synth_lowrank");
    const std::size_t m = cfg.get_size("m", 500);
    const double train_fraction = cfg.get_double("train_fraction", 0.8);

    Matrix s_true;  // populated for synth_lowrank
    if (data == "mnist") {
        const std::string images = data_dir + "/train-images-idx3-ubyte";
        const std::string labels = data_dir + "/train-labels-idx1-ubyte";
        if (!file_exists(images) || !file_exists(labels))
            throw std::runtime_error("mnist files not found under '" + data_dir +
                                     "' (expected train-images-idx3-ubyte and "
                                     "train-labels-idx1-ubyte)");
        Dataset full = load_mnist_idx(images, labels);
        prep.dataset =
            subsample(full, m, cfg.get_int_list("classes"), train_fraction, seed);
    } else if (data == "synth_blobs") {
        prep.dataset = synth_blobs(m, cfg.get_size("n_classes", 20),
                                   cfg.get_size("feature_dim", 40),
                                   cfg.get_double("spread", 0.3), seed, train_fraction);
        prep.synthetic_fallback = true;
    } else if (data == "synth_strokes") {
        prep.dataset = synth_strokes(m, cfg.get_size("side", 14), seed, train_fraction);
        prep.synthetic_fallback = true;
    } else if (data == "synth_lowrank") {
        SynthLowRank synth = synth_lowrank(m, cfg.get_size("rank", 10),
                                           cfg.get_double("noise", 0.1), seed);
        prep.dataset = sequential_split(std::move(synth.features), {}, train_fraction);
        s_true = std::move(synth.s_true);
        prep.synthetic_fallback = true;
    } else {
        throw std::runtime_error("unknown data kind: " + data);
    }

    const std::string split = cfg.get_string("eval_split", "train");
    if (split != "train" && split != "test")
        throw std::runtime_error("eval_split must be train or test");
    const std::vector<std::size_t>& ids =
        split == "train" ? prep.dataset.train_ids : prep.dataset.test_ids;
    if (ids.empty()) throw std::runtime_error("selected split has no rows");

    // targets are built from the raw features; model inputs are preprocessed
    Matrix raw = split == "train" ? prep.dataset.train_features()
                                  : prep.dataset.test_features();
    Dataset pre = preprocess(prep.dataset);
    prep.x = split == "train" ? pre.train_features() : pre.test_features();

    const std::string target = cfg.get_string("target", "rbf");
    Matrix s;
    if (target == "rbf") {
        double gamma = cfg.get_double("gamma", 0.0);
        if (gamma <= 0.0) gamma = median_heuristic_gamma(prep.x);
        s = rbf_kernel(prep.x, gamma);
    } else if (target == "label") {
        if (!prep.dataset.has_labels())
            throw std::runtime_error("label target needs labeled data");
        s = label_similarity(split == "train" ? prep.dataset.train_labels()
                                              : prep.dataset.test_labels());
    } else if (target == "simpson") {
        s = simpson_similarity(binarize(raw));
    } else if (target == "lowrank_true") {
        if (s_true.empty())
            throw std::runtime_error("lowrank_true target needs data=synth_lowrank");
        Matrix block(ids.size(), ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < ids.size(); ++j)
                block(i, j) = s_true(ids[i], ids[j]);
        s = std::move(block);
    } else {
        throw std::runtime_error("unknown target kind: " + target);
    }

    if (cfg.get_bool("center", true)) s = center(s);
    if (cfg.get_bool("normalize", false)) s = normalize_range(s);

    const double missing = cfg.get_double("missing_fraction", 0.0);
    if (missing > 0.0) {
        Matrix mask = random_mask(s.rows(), s.cols(), missing, seed ^ 0xabcdef12ULL);
        prep.target = TargetSpec::square(std::move(s), std::move(mask));
    } else {
        prep.target = TargetSpec::square(std::move(s));
    }
    return prep;
}

SimEcConfig model_config(const KeyValueConfig& cfg, const Prepared& prep,
                         std::optional<std::uint64_t> seed_override) {
    SimEcConfig mc;
    mc.input_dim = prep.x.cols();
    mc.embed_dim = cfg.get_size("embed_dim", 10);
    mc.hidden_sizes = cfg.get_size_list("hidden");
    mc.n_targets = cfg.get_size("n_targets", 0);
    mc.k = 1;
    mc.lambda_sym = cfg.get_double("lambda_sym", 0.0);
    mc.lambda_orth = cfg.get_double("lambda_orth", 0.0);
    mc.lambda_l2 = cfg.get_double("lambda_l2", 0.0);
    if (cfg.has("output_lo") != cfg.has("output_hi"))
        throw std::runtime_error("output_lo and output_hi must be given together");
    if (cfg.has("output_lo"))
        mc.output_bounds =
            OutputBounds{cfg.get_double("output_lo", 0.0), cfg.get_double("output_hi", 1.0)};
    mc.lr = cfg.get_double("lr", 0.01);
    mc.epochs = cfg.get_size("epochs", 200);
    mc.batch_rows = cfg.get_size("batch_rows", 0);
    mc.seed = seed_override.value_or(cfg.get_u64("seed", 1));
    return mc;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, std::optional<std::uint64_t> seed) {
    KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
    Prepared prep = prepare_data(cfg, data_dir, seed);
    if (prep.synthetic_fallback)
        std::cout << "data=synthetic\n";

    SimEcConfig mc = model_config(cfg, prep, seed);
    TrainResult result = train(mc, prep.x, prep.target);
    save_model(result.model, out_path);

    std::cout << "model=" << out_path << "\n";
    std::cout << "epochs=" << result.report.loss_trace.size() << "\n";
    std::cout << "final_loss=" << format_double(result.report.loss_trace.back()) << "\n";
    std::cout << "final_relation_mse=" << format_double(result.report.final_relation_mse)
              << "\n";
    if (result.report.final_gram_mse)
        std::cout << "final_gram_mse=" << format_double(*result.report.final_gram_mse)
                  << "\n";
    std::cout << "wall_seconds=" << result.report.wall_seconds << "\n";

    const std::string trace_path = out_path + ".loss.csv";
    std::ofstream trace(trace_path, std::ios::binary | std::ios::trunc);
    if (!trace) throw std::runtime_error("cannot open " + trace_path);
    trace << "epoch,loss\n";
    for (std::size_t e = 0; e < result.report.loss_trace.size(); ++e)
        trace << e + 1 << "," << format_double(result.report.loss_trace[e]) << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& config_path,
             const std::string& data_dir, const std::string& out_path,
             std::optional<std::uint64_t> seed) {
    KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
    SimEcModel model = load_model(model_path);
    Prepared prep = prepare_data(cfg, data_dir, seed);

    EvalMetrics metrics = evaluate(model, prep.x, prep.target);
    std::cout << "relation_mse=" << format_double(metrics.relation_mse) << "\n";
    if (metrics.gram_mse)
        std::cout << "gram_mse=" << format_double(*metrics.gram_mse) << "\n";

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + out_path);
        out << "metric,value\n";
        out << "relation_mse," << format_double(metrics.relation_mse) << "\n";
        if (metrics.gram_mse)
            out << "gram_mse," << format_double(*metrics.gram_mse) << "\n";
    }
    return 0;
}

int cmd_experiment(const std::string& name, double scale, std::uint64_t seed,
                   const std::string& out_dir, const std::string& data_dir) {
    ExperimentResult result = run_experiment(name, scale, seed, data_dir);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const std::string path = out_dir + "/" + name + ".csv";
    write_experiment_csv(path, result);
    std::cout << "experiment=" << name << "\n";
    std::cout << "csv=" << path << "\n";
    std::cout << "data=" << (result.synthetic_data ? "synthetic" : "mnist") << "\n";
    std::cout << "wall_seconds=" << result.wall_seconds << "\n";
    return 0;
}

}  // namespace simecs::cli

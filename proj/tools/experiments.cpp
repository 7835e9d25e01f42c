#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "simecs/similarity.hpp"
#include "simecs/spectral.hpp"

namespace simecs::cli {

namespace {

std::size_t scaled(std::size_t base, double scale) {
    const auto v = static_cast<std::size_t>(std::llround(scale * static_cast<double>(base)));
    return std::max<std::size_t>(v, 32);
}

bool mnist_available(const std::string& data_dir) {
    if (data_dir.empty()) return false;
    std::error_code ec;
    return std::filesystem::exists(data_dir + "/train-images-idx3-ubyte", ec) &&
           std::filesystem::exists(data_dir + "/train-labels-idx1-ubyte", ec);
}

/// Labeled data for the class-similarity experiment: MNIST when present,
/// otherwise Gaussian blobs with enough classes to keep the spectral optimum
/// nontrivial at the swept dimensions.
Dataset labeled_data(std::size_t m, std::uint64_t seed, const std::string& data_dir,
                     bool& synthetic) {
    if (mnist_available(data_dir)) {
        synthetic = false;
        Dataset full = load_mnist_idx(data_dir + "/train-images-idx3-ubyte",
                                      data_dir + "/train-labels-idx1-ubyte");
        return subsample(full, m, {}, 0.8, seed);
    }
    synthetic = true;
    return synth_blobs(m, 20, 40, 0.25, seed, 0.8);
}

/// Binary stroke data for the non-metric experiments: MNIST zeros and sevens
/// when present, synthetic strokes otherwise.
Dataset stroke_data(std::size_t m, std::uint64_t seed, const std::string& data_dir,
                    bool& synthetic) {
    if (mnist_available(data_dir)) {
        synthetic = false;
        Dataset full = load_mnist_idx(data_dir + "/train-images-idx3-ubyte",
                                      data_dir + "/train-labels-idx1-ubyte");
        return subsample(full, m, {0, 7}, 0.8, seed);
    }
    synthetic = true;
    return synth_strokes(m, 14, seed, 0.8);
}

double gram_mse_vs(const SimEcModel& model, const Matrix& x, const Matrix& s) {
    Matrix y = embed(model, x);
    return masked_mse(matmul_bt(y, y), s);
}

double ywl_mse_vs(const SimEcModel& model, const Matrix& x, const Matrix& s,
                  std::size_t slice = 0) {
    std::vector<Matrix> pred = predict_relations(model, x);
    return masked_mse(pred[slice], s);
}

double kpca_mse(const Matrix& s, std::size_t d) {
    Matrix y = kpca_embed(s, d);
    return masked_mse(matmul_bt(y, y), s);
}

ExperimentResult exp_fig3(double scale, std::uint64_t seed, const std::string& data_dir) {
    ExperimentResult result;
    result.experiment_id = "fig3";
    const std::size_t m_total = scaled(1250, scale);
    Dataset data = labeled_data(m_total, seed, data_dir, result.synthetic_data);
    Dataset pre = preprocess(data);
    Matrix x = pre.train_features();
    Matrix s = center(label_similarity(data.train_labels()));
    const std::size_t m = x.rows();
    const std::size_t n_sub = std::max<std::size_t>(64, m / 4);

    for (std::size_t d : {1, 2, 3, 4, 5, 7, 10}) {
        result.sweep_values.push_back(static_cast<double>(d));

        result.metric_series["eigendecomposition"].push_back(kpca_mse(s, d));

        Matrix y_eig = kpca_embed(s, d);
        Matrix w = regression_baseline(x, y_eig, 1e-3);
        Matrix y_ridge = matmul(x, w);
        result.metric_series["ridge_on_eigen"].push_back(
            masked_mse(matmul_bt(y_ridge, y_ridge), s));

        SimEcConfig lin;
        lin.embed_dim = d;
        lin.n_targets = n_sub;
        lin.lambda_sym = 1.0;
        lin.lr = 0.02;
        lin.epochs = 400;
        lin.seed = seed + 17;
        TrainResult lin_run = train(lin, x, TargetSpec::square(s));
        result.metric_series["linear_simec"].push_back(gram_mse_vs(lin_run.model, x, s));

        SimEcConfig deep = lin;
        deep.hidden_sizes = {64};
        deep.lr = 0.01;
        deep.epochs = 600;
        deep.seed = seed + 29;
        TrainResult deep_run = train(deep, x, TargetSpec::square(s));
        result.metric_series["deep_simec"].push_back(gram_mse_vs(deep_run.model, x, s));
    }
    return result;
}

ExperimentResult exp_fig4_reg(double scale, std::uint64_t seed,
                              const std::string& /*data_dir*/) {
    ExperimentResult result;
    result.experiment_id = "fig4_reg";
    result.synthetic_data = true;
    const std::size_t m_total = scaled(1250, scale);
    SynthLowRank synth = synth_lowrank(m_total, 10, 0.2, seed);
    const std::size_t m = (m_total * 4) / 5;
    Matrix x(m, synth.features.cols());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = synth.features(i, j);
    Matrix s = center(rbf_kernel(x, median_heuristic_gamma(x)));

    for (double lambda : {0.0, 0.03, 0.3, 3.0}) {
        result.sweep_values.push_back(lambda);
        SimEcConfig cfg;
        cfg.embed_dim = 10;
        cfg.hidden_sizes = {100};
        cfg.lambda_sym = lambda;
        cfg.lr = 0.01;
        cfg.epochs = 300;
        cfg.seed = seed + 3;
        TrainResult run = train(cfg, x, TargetSpec::square(s));
        result.metric_series["simec_ywl"].push_back(run.report.final_relation_mse);
        result.metric_series["simec_gram"].push_back(gram_mse_vs(run.model, x, s));
        result.metric_series["kpca"].push_back(kpca_mse(s, 10));
    }
    return result;
}

ExperimentResult exp_fig4_targets(double scale, std::uint64_t seed,
                                  const std::string& /*data_dir*/) {
    ExperimentResult result;
    result.experiment_id = "fig4_targets";
    result.synthetic_data = true;
    const std::size_t m_total = scaled(1250, scale);
    SynthLowRank synth = synth_lowrank(m_total, 10, 0.2, seed);
    const std::size_t m = (m_total * 4) / 5;
    Matrix x(m, synth.features.cols());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = synth.features(i, j);
    Matrix s = center(rbf_kernel(x, median_heuristic_gamma(x)));
    const double kpca_ref = kpca_mse(s, 10);

    for (double fraction : {0.05, 0.1, 0.25, 0.5, 1.0}) {
        result.sweep_values.push_back(fraction);
        SimEcConfig cfg;
        cfg.embed_dim = 10;
        cfg.hidden_sizes = {100};
        cfg.n_targets = std::max<std::size_t>(
            10, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m))));
        cfg.lambda_sym = 1.0;
        cfg.lr = 0.01;
        cfg.epochs = 300;
        cfg.seed = seed + 5;
        TrainResult run = train(cfg, x, TargetSpec::square(s));
        result.metric_series["simec_gram"].push_back(gram_mse_vs(run.model, x, s));
        result.metric_series["simec_ywl"].push_back(run.report.final_relation_mse);
        result.metric_series["kpca"].push_back(kpca_ref);
    }
    return result;
}

ExperimentResult exp_fig4_missing(double scale, std::uint64_t seed,
                                  const std::string& /*data_dir*/) {
    ExperimentResult result;
    result.experiment_id = "fig4_missing";
    result.synthetic_data = true;
    const std::size_t m_total = scaled(1250, scale);
    SynthLowRank synth = synth_lowrank(m_total, 10, 0.8, seed);
    const std::size_t m = (m_total * 4) / 5;
    Matrix x(m, synth.features.cols());
    Matrix s_raw(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = synth.features(i, j);
        for (std::size_t j = 0; j < m; ++j) s_raw(i, j) = synth.s_true(i, j);
    }
    Matrix s = center(s_raw);
    s = normalize_range(s);
    const double kpca_ref = kpca_mse(s, 10);

    for (double missing : {0.0, 0.3, 0.6, 0.9}) {
        result.sweep_values.push_back(missing);
        std::optional<Matrix> mask;
        if (missing > 0.0) mask = random_mask(m, m, missing, seed ^ 0x5eedULL);

        SimEcConfig cfg;
        cfg.embed_dim = 10;
        cfg.hidden_sizes = {100};
        cfg.lambda_sym = 1.0;
        cfg.lr = 0.01;
        cfg.epochs = 800;
        cfg.seed = seed + 7;
        TargetSpec target = mask ? TargetSpec::square(s, *mask) : TargetSpec::square(s);
        TrainResult run = train(cfg, x, target);
        result.metric_series["simec_gram"].push_back(gram_mse_vs(run.model, x, s));

        Matrix y_fill = mask ? mean_fill_embed(s, *mask, 10) : kpca_embed(s, 10);
        result.metric_series["mean_fill_eig"].push_back(
            masked_mse(matmul_bt(y_fill, y_fill), s));
        result.metric_series["kpca_full"].push_back(kpca_ref);
    }
    return result;
}

ExperimentResult exp_fig6(double scale, std::uint64_t seed, const std::string& data_dir) {
    ExperimentResult result;
    result.experiment_id = "fig6";
    const std::size_t m_total = scaled(1000, scale);
    Dataset data = stroke_data(m_total, seed, data_dir, result.synthetic_data);
    Matrix raw = data.train_features();
    Dataset pre = preprocess(data);
    Matrix x = pre.train_features();
    Matrix s = normalize_range(center(simpson_similarity(binarize(raw))));

    for (std::size_t d : {1, 2, 5, 10, 15}) {
        result.sweep_values.push_back(static_cast<double>(d));

        result.metric_series["kpca_positive"].push_back(kpca_mse(s, d));
        SignedEmbedding se = signed_embed(s, d);
        result.metric_series["signed_spectral"].push_back(
            masked_mse(signed_reconstruct(se), s));

        SimEcConfig cfg;
        cfg.embed_dim = d;
        cfg.hidden_sizes = {100};
        cfg.lr = 0.01;
        cfg.epochs = 400;
        cfg.seed = seed + 11;
        TrainResult run = train(cfg, x, TargetSpec::square(s));
        result.metric_series["simec_ywl"].push_back(ywl_mse_vs(run.model, x, s));
    }
    return result;
}

ExperimentResult exp_fig7(double scale, std::uint64_t seed, const std::string& data_dir) {
    ExperimentResult result;
    result.experiment_id = "fig7";
    const std::size_t m_total = scaled(1000, scale);
    Dataset data = stroke_data(m_total, seed, data_dir, result.synthetic_data);
    Matrix raw = data.train_features();
    Dataset pre = preprocess(data);
    Matrix x = pre.train_features();
    Matrix s = normalize_range(center(simpson_similarity(binarize(raw))));
    const std::size_t m = s.rows();

    // spectral split: S1 from the positive part of the top spectrum, S2 from
    // the negative part, each PSD
    const std::size_t split_rank = std::min<std::size_t>(40, m / 2);
    SignedEmbedding se = signed_embed(s, split_rank);
    Matrix pos(m, split_rank), neg(m, split_rank);
    for (std::size_t j = 0; j < split_rank; ++j)
        for (std::size_t i = 0; i < m; ++i)
            (se.signs[j] > 0 ? pos : neg)(i, j) = se.coords(i, j);
    Matrix s1 = matmul_bt(pos, pos);
    Matrix s2 = matmul_bt(neg, neg);

    TargetSpec stacked = multi_similarity_target({s1, s2}, MultiMode::Stacked);
    TargetSpec averaged = multi_similarity_target({s1, s2}, MultiMode::Averaged);
    const Matrix& s1n = stacked.slices[0];
    const Matrix& s2n = stacked.slices[1];

    auto base_cfg = [&](std::size_t d) {
        SimEcConfig cfg;
        cfg.embed_dim = d;
        cfg.hidden_sizes = {100};
        cfg.lr = 0.01;
        cfg.epochs = 400;
        cfg.seed = seed + 13;
        return cfg;
    };

    for (std::size_t d : {2, 5, 10}) {
        result.sweep_values.push_back(static_cast<double>(d));

        result.metric_series["eig_s1"].push_back(kpca_mse(s1n, d));
        result.metric_series["eig_s2"].push_back(kpca_mse(s2n, d));

        SimEcConfig c1 = base_cfg(d);
        TrainResult single1 = train(c1, x, TargetSpec::square(s1n));
        result.metric_series["single_s1_ywl"].push_back(ywl_mse_vs(single1.model, x, s1n));
        result.metric_series["single_s1_gram"].push_back(gram_mse_vs(single1.model, x, s1n));

        TrainResult single2 = train(c1, x, TargetSpec::square(s2n));
        result.metric_series["single_s2_ywl"].push_back(ywl_mse_vs(single2.model, x, s2n));
        result.metric_series["single_s2_gram"].push_back(gram_mse_vs(single2.model, x, s2n));

        SimEcConfig ck = base_cfg(d);
        ck.k = 2;
        TrainResult stacked_run = train(ck, x, stacked);
        result.metric_series["stacked_s1_ywl"].push_back(
            ywl_mse_vs(stacked_run.model, x, s1n, 0));
        result.metric_series["stacked_s2_ywl"].push_back(
            ywl_mse_vs(stacked_run.model, x, s2n, 1));
        result.metric_series["stacked_s1_gram"].push_back(
            gram_mse_vs(stacked_run.model, x, s1n));
        result.metric_series["stacked_s2_gram"].push_back(
            gram_mse_vs(stacked_run.model, x, s2n));

        TrainResult avg_run = train(c1, x, averaged);
        result.metric_series["averaged_s1_ywl"].push_back(ywl_mse_vs(avg_run.model, x, s1n));
        result.metric_series["averaged_s2_ywl"].push_back(ywl_mse_vs(avg_run.model, x, s2n));
        result.metric_series["averaged_s1_gram"].push_back(
            gram_mse_vs(avg_run.model, x, s1n));
        result.metric_series["averaged_s2_gram"].push_back(
            gram_mse_vs(avg_run.model, x, s2n));
    }
    return result;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"fig3",         "fig4_reg",
                                                   "fig4_targets", "fig4_missing",
                                                   "fig6",         "fig7"};
    return names;
}

ExperimentResult run_experiment(const std::string& name, double scale,
                                std::uint64_t seed, const std::string& data_dir) {
    if (scale <= 0.0) throw UsageError("--scale must be > 0");
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult result;
    if (name == "fig3")
        result = exp_fig3(scale, seed, data_dir);
    else if (name == "fig4_reg")
        result = exp_fig4_reg(scale, seed, data_dir);
    else if (name == "fig4_targets")
        result = exp_fig4_targets(scale, seed, data_dir);
    else if (name == "fig4_missing")
        result = exp_fig4_missing(scale, seed, data_dir);
    else if (name == "fig6")
        result = exp_fig6(scale, seed, data_dir);
    else if (name == "fig7")
        result = exp_fig7(scale, seed, data_dir);
    else {
        std::ostringstream os;
        os << "unknown experiment '" << name << "'; valid names:";
        for (const std::string& n : experiment_names()) os << " " << n;
        throw UsageError(os.str());
    }
    result.seed = seed;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace simecs::cli

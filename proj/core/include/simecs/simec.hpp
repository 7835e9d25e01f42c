#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "simecs/net.hpp"
#include "simecs/similarity.hpp"

namespace simecs {

/// Training configuration. n_targets = 0 selects every target column; a
/// nonzero value trains against the first n_targets columns unless explicit
/// target_column_ids are given. lambda_sym > 0 requires k == 1 and a square
/// symmetric target.
struct SimEcConfig {
    std::size_t input_dim = 0;   // D
    std::size_t embed_dim = 2;   // d
    std::vector<std::size_t> hidden_sizes;
    std::size_t n_targets = 0;   // n; 0 means all columns
    std::size_t k = 1;
    double lambda_sym = 0.0;
    double lambda_orth = 0.0;
    double lambda_l2 = 0.0;
    std::optional<OutputBounds> output_bounds;
    double lr = 0.01;
    std::size_t epochs = 100;
    std::size_t batch_rows = 0;  // 0 means full batch
    std::uint64_t seed = 1;
    bool encoder_bias = true;
    std::vector<std::size_t> target_column_ids;  // empty means first n columns
};

struct SimEcModel {
    NetworkParams params;
    SimEcConfig config;
    std::vector<std::size_t> target_column_ids;  // length n, resolved
};

struct TrainReport {
    std::vector<double> loss_trace;          // one entry per epoch
    double final_relation_mse = 0.0;         // masked MSE of Y W_l vs selected targets
    std::optional<double> final_gram_mse;    // MSE of Y Y^T vs the full square target
    double wall_seconds = 0.0;
};

struct TrainResult {
    SimEcModel model;
    TrainReport report;
};

/// Trains a similarity encoder on (x, target) for config.epochs epochs of
/// deterministic Adam. The target holds all columns; training selects
/// n_targets of them. With lambda_sym > 0 the n x n block of the target at
/// the selected ids becomes the sym regularizer target. A non-finite loss
/// aborts with the offending epoch in the message.
TrainResult train(const SimEcConfig& cfg, const Matrix& x, const TargetSpec& target);

/// Out-of-sample embedding; a pure function of the trained parameters.
Matrix embed(const SimEcModel& model, const Matrix& x_new);

/// Relation predictions through the last layer(s), one rows x n matrix per
/// slice, clamped by the output bounds when configured.
std::vector<Matrix> predict_relations(const SimEcModel& model, const Matrix& x_new);

/// Y Y^T for Y = embed(model, x).
Matrix gram_approx(const SimEcModel& model, const Matrix& x);

struct FactorizeOptions {
    double lr = 0.02;
    std::size_t epochs = 500;
    double lambda_l2 = 0.0;
    std::uint64_t seed = 1;
};

/// Plain matrix factorization: identity input, a single bias-free linear
/// encoder layer, so encoder * relation weights is a rank-d approximation of
/// the target.
TrainResult identity_factorize(const TargetSpec& target, std::size_t d,
                               double lambda_orth, const FactorizeOptions& opts);

struct DualResult {
    SimEcModel model1;
    SimEcModel model2;
    TrainReport report1;
    TrainReport report2;
};

/// Two-stage rectangular factorization: model1 is trained on (x1, r); its
/// embeddings Y1 are then frozen as the last-layer weights of model2, which
/// is trained on (x2, r^T), so embed(model1) * embed(model2)^T approximates
/// r on observed entries.
DualResult train_dual(const SimEcConfig& cfg1, const SimEcConfig& cfg2, const Matrix& x1,
                      const Matrix& x2, const TargetSpec& r);

enum class MultiMode { Averaged, Stacked };

/// Combines >= 2 symmetric similarity matrices: each is normalized by its
/// top eigenvalue, then either elementwise-averaged into a single target
/// (k = 1) or stacked into a k-slice tensor target.
TargetSpec multi_similarity_target(const std::vector<Matrix>& mats, MultiMode mode);

struct EvalMetrics {
    double relation_mse = 0.0;
    std::optional<double> gram_mse;
};

/// Recomputes the TrainReport final metrics for a model against data and a
/// full target.
EvalMetrics evaluate(const SimEcModel& model, const Matrix& x, const TargetSpec& target);

/// Flat binary container: magic "SIMEC1", length-prefixed key=value config
/// text, then each weight matrix as (rows u32 LE, cols u32 LE, f64 LE values
/// row-major). Round-trips are bit-exact.
void save_model(const SimEcModel& model, const std::string& path);
SimEcModel load_model(const std::string& path);

}  // namespace simecs

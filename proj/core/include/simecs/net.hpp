#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "simecs/matrix.hpp"
#include "simecs/similarity.hpp"

namespace simecs {

enum class Activation { Linear, Tanh };

struct LayerParams {
    Matrix weights;  // fan_in x fan_out
    Matrix bias;     // 1 x fan_out, empty when the layer has no bias
    Activation activation = Activation::Linear;

    bool has_bias() const { return !bias.empty(); }
};

struct OutputBounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// Full parameter set: the encoder layers realize the feature-to-embedding
/// map; the relation weights are the final linear layer(s), one d x n slice
/// per predicted relation matrix. The last encoder layer is always linear so
/// embedding values stay unconstrained; relation slices carry no bias.
struct NetworkParams {
    std::vector<LayerParams> encoder;
    std::vector<Matrix> relation;  // k slices, each d x n
    std::optional<OutputBounds> output_bounds;

    std::size_t input_dim() const { return encoder.front().weights.rows(); }
    std::size_t embed_dim() const { return encoder.back().weights.cols(); }
    std::size_t n_targets() const { return relation.front().cols(); }
    std::size_t k() const { return relation.size(); }
};

/// Loss configuration. lambda_sym ties the relation weights to the embedding
/// via ||sym_target - W^T W||; it is defined only for k == 1. lambda_orth
/// penalizes off-diagonal entries of W W^T; lambda_l2 penalizes all weight
/// entries (biases excluded). All terms are means, so the lambdas are
/// comparable across problem sizes.
struct ObjectiveConfig {
    double lambda_sym = 0.0;
    double lambda_orth = 0.0;
    double lambda_l2 = 0.0;
    std::optional<Matrix> sym_target;  // n x n
    std::optional<Matrix> sym_mask;    // n x n {0,1}; applied when present
};

struct NetShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t embed_dim = 0;
    std::size_t n_targets = 0;
    std::size_t k = 1;
    bool encoder_bias = true;
    std::optional<OutputBounds> output_bounds;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases;
/// bit-identical for identical seeds.
NetworkParams init(const NetShape& shape, std::uint64_t seed);

/// Embedding Y = f'(x): each encoder layer applies activation(x W + b).
Matrix forward_embed(const NetworkParams& p, const Matrix& x);

/// Full forward pass; one batch x n output per relation slice, passed
/// through the output activation when bounds are configured.
std::vector<Matrix> forward_full(const NetworkParams& p, const Matrix& x);

struct LossTerms {
    double total = 0.0;
    double data = 0.0;
    double sym = 0.0;
    double orth = 0.0;
    double l2 = 0.0;
};

LossTerms loss_terms(const NetworkParams& p, const Matrix& x, const TargetSpec& target,
                     const ObjectiveConfig& obj);

double loss(const NetworkParams& p, const Matrix& x, const TargetSpec& target,
            const ObjectiveConfig& obj);

/// Exact analytic gradient of loss() for every parameter, in a container of
/// the same shape as the parameters. Masked target entries contribute
/// nothing; the sym and orth terms flow only into the relation weights.
NetworkParams backward(const NetworkParams& p, const Matrix& x, const TargetSpec& target,
                       const ObjectiveConfig& obj, double* loss_out = nullptr);

/// Central-difference gradient oracle, (loss(w+h) - loss(w-h)) / 2h per
/// parameter.
NetworkParams finite_diff_grad(const NetworkParams& p, const Matrix& x,
                               const TargetSpec& target, const ObjectiveConfig& obj,
                               double h);

struct AdamState {
    NetworkParams m;  // first-moment accumulators, parameter-shaped
    NetworkParams v;  // second-moment accumulators
    std::int64_t step = 0;

    static AdamState for_params(const NetworkParams& p);
};

/// Standard Adam update with bias correction; deterministic.
void adam_step(NetworkParams& p, const NetworkParams& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

/// Parameter-shaped container with all values zeroed.
NetworkParams zeroed_like(const NetworkParams& p);

/// Pointers to every trainable scalar (encoder weights, biases, relation
/// weights) in a fixed traversal order shared by Adam and the
/// finite-difference oracle.
std::vector<double*> param_ptrs(NetworkParams& p);

}  // namespace simecs

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simecs/matrix.hpp"

namespace simecs {

struct Dataset {
    Matrix features;                      // m x D
    std::vector<int> labels;              // empty when unlabeled
    std::vector<std::size_t> train_ids;   // disjoint from test_ids,
    std::vector<std::size_t> test_ids;    // union covers 0..m-1

    std::size_t size() const { return features.rows(); }
    bool has_labels() const { return !labels.empty(); }

    Matrix train_features() const;
    Matrix test_features() const;
    std::vector<int> train_labels() const;
    std::vector<int> test_labels() const;
};

/// Reads an IDX image/label file pair (big-endian magic 0x00000803 images,
/// 0x00000801 labels). Features are the raw 0..255 byte values as reals.
/// Bad magic, truncation, and an image/label count mismatch raise distinct
/// errors; nothing partial is returned.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// IDX writers for fixtures and round-trip tests. Images must hold values in
/// 0..255; each row is one height x width image.
void write_idx_images(const std::string& path, const Matrix& images, std::size_t height,
                      std::size_t width);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

/// Centers each feature column to zero mean over the training rows (test
/// rows are shifted by the training means) and scales by the maximum
/// absolute value of the centered training rows, so a second application is
/// a near-identity.
Dataset preprocess(const Dataset& d);

/// Deterministic class-filtered subsample of m points with a train/test
/// split of round(m * train_fraction) training rows.
Dataset subsample(const Dataset& d, std::size_t m, const std::vector<int>& classes,
                  double train_fraction, std::uint64_t seed);

struct SynthLowRank {
    Matrix features;  // m x D, an informative rotation of the latent factors
    Matrix s_true;    // m x m, Z Z^T plus symmetric noise
};

/// Desk-scale generator: latent Z (m x d_true) Gaussian, S = Z Z^T plus
/// symmetric noise of the given scale, features = Z Q plus small noise for a
/// random row-orthonormal Q. feature_dim = 0 picks 2 d_true + 8.
SynthLowRank synth_lowrank(std::size_t m, std::size_t d_true, double noise,
                           std::uint64_t seed, std::size_t feature_dim = 0);

/// Labeled Gaussian blobs; the hermetic stand-in for labeled image data.
Dataset synth_blobs(std::size_t m, std::size_t n_classes, std::size_t feature_dim,
                    double spread, std::uint64_t seed, double train_fraction = 0.8);

/// Binary stroke-like patterns on a side x side grid in two classes, with a
/// per-sample stroke weight that thickens a class skeleton; thin strokes
/// nest inside thick ones, which makes overlap similarities on these
/// patterns strongly non-metric.
Dataset synth_strokes(std::size_t m, std::size_t side, std::uint64_t seed,
                      double train_fraction = 0.8);

}  // namespace simecs

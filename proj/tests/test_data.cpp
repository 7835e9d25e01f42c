#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "oracles.hpp"
#include "simecs/data.hpp"
#include "simecs/rng.hpp"
#include "simecs/simec.hpp"
#include "simecs/similarity.hpp"
#include "simecs/spectral.hpp"

using namespace simecs;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("idx files round-trip exactly") {
    Matrix images(3, 6);
    Rng rng(1);
    for (std::size_t i = 0; i < images.size(); ++i)
        images.data()[i] = static_cast<double>(rng.below(256));
    std::vector<int> labels = {7, 0, 9};

    const std::string img_path = temp_path("simecs_images.idx");
    const std::string lab_path = temp_path("simecs_labels.idx");
    write_idx_images(img_path, images, 2, 3);
    write_idx_labels(lab_path, labels);

    Dataset d = load_mnist_idx(img_path, lab_path);
    CHECK(d.size() == 3);
    CHECK(d.features == images);
    CHECK(d.labels == labels);
    CHECK(d.train_ids.size() == 3);
    CHECK(d.test_ids.empty());
}

TEST_CASE("official mnist test files parse to 10000 x 784 when available") {
    const char* dir = std::getenv("SIMECS_DATA_DIR");
    if (dir == nullptr) {
        MESSAGE("SIMECS_DATA_DIR not set; skipping the real-dataset check");
        return;
    }
    const std::string images = std::string(dir) + "/t10k-images-idx3-ubyte";
    const std::string labels = std::string(dir) + "/t10k-labels-idx1-ubyte";
    if (!std::filesystem::exists(images) || !std::filesystem::exists(labels)) {
        MESSAGE("t10k files not present; skipping the real-dataset check");
        return;
    }
    Dataset d = load_mnist_idx(images, labels);
    CHECK(d.size() == 10000);
    CHECK(d.features.cols() == 784);
    for (int label : d.labels) {
        CHECK(label >= 0);
        CHECK(label <= 9);
    }
}

TEST_CASE("idx loader failure modes are distinct") {
    Matrix images(2, 4, 0.0);
    std::vector<int> labels = {1, 2};
    const std::string img_path = temp_path("simecs_img2.idx");
    const std::string lab_path = temp_path("simecs_lab2.idx");
    write_idx_images(img_path, images, 2, 2);
    write_idx_labels(lab_path, labels);

    // bad magic: labels file offered as an image file
    CHECK_THROWS_WITH_AS(load_mnist_idx(lab_path, lab_path),
                         doctest::Contains("magic"), std::runtime_error);

    // truncated image payload
    {
        std::ifstream in(img_path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        const std::string trunc_path = temp_path("simecs_img_trunc.idx");
        std::ofstream out(trunc_path, std::ios::binary);
        out << bytes.substr(0, bytes.size() - 3);
        out.close();
        CHECK_THROWS_WITH_AS(load_mnist_idx(trunc_path, lab_path),
                             doctest::Contains("truncated"), std::runtime_error);
    }

    // image/label count mismatch
    {
        const std::string lab3_path = temp_path("simecs_lab3.idx");
        write_idx_labels(lab3_path, {1, 2, 3});
        CHECK_THROWS_WITH_AS(load_mnist_idx(img_path, lab3_path),
                             doctest::Contains("count"), std::runtime_error);
    }

    CHECK_THROWS_AS(load_mnist_idx(temp_path("missing_file.idx"), lab_path),
                    std::runtime_error);
}

TEST_CASE("preprocess centers on training rows and is near-idempotent") {
    Dataset d;
    d.features = Matrix(6, 3);
    Rng rng(2);
    for (std::size_t i = 0; i < 6; ++i) {
        d.features(i, 0) = 100.0 + 20.0 * rng.gaussian();
        d.features(i, 1) = 5.0;  // constant column
        d.features(i, 2) = 50.0 * rng.gaussian();
    }
    d.train_ids = {0, 1, 2, 3};
    d.test_ids = {4, 5};

    Dataset p = preprocess(d);

    // constant column becomes exactly zero on training rows
    for (std::size_t id : p.train_ids) CHECK(p.features(id, 1) == 0.0);

    // training column means vanish
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t id : p.train_ids) mean += p.features(id, j);
        mean /= static_cast<double>(p.train_ids.size());
        CHECK(std::abs(mean) < 1e-10);
    }

    // statistics come from training rows only: perturbing test rows of the
    // input changes nothing on the training side
    Dataset d2 = d;
    d2.features(4, 0) = 1e6;
    Dataset p2 = preprocess(d2);
    for (std::size_t id : p.train_ids)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(p.features(id, j) == p2.features(id, j));

    // second application is a near-identity
    Dataset pp = preprocess(p);
    double max_shift = 0.0;
    for (std::size_t i = 0; i < pp.features.size(); ++i)
        max_shift = std::max(max_shift,
                             std::abs(pp.features.data()[i] - p.features.data()[i]));
    CHECK(max_shift < 1e-12);

    CHECK_THROWS_AS(preprocess(Dataset{Matrix(3, 2), {}, {0, 1, 2}, {}}),
                    std::invalid_argument);
}

TEST_CASE("subsample filters classes, splits, and is deterministic") {
    Dataset d;
    const std::size_t total = 12000;
    d.features = Matrix(total, 2);
    d.labels.resize(total);
    Rng rng(3);
    for (std::size_t i = 0; i < total; ++i) {
        d.labels[i] = static_cast<int>(rng.below(10));
        d.features(i, 0) = static_cast<double>(d.labels[i]);
        d.features(i, 1) = rng.gaussian();
    }
    d.train_ids.resize(total);
    for (std::size_t i = 0; i < total; ++i) d.train_ids[i] = i;

    Dataset s = subsample(d, 10000, {}, 0.8, 4);
    CHECK(s.size() == 10000);
    CHECK(s.train_ids.size() == 8000);
    CHECK(s.test_ids.size() == 2000);

    Dataset zeros_sevens = subsample(d, 1500, {0, 7}, 0.8, 5);
    CHECK(zeros_sevens.size() == 1500);
    for (int label : zeros_sevens.labels) CHECK((label == 0 || label == 7));

    Dataset again = subsample(d, 1500, {0, 7}, 0.8, 5);
    CHECK(zeros_sevens.features == again.features);
    CHECK(zeros_sevens.labels == again.labels);

    CHECK_THROWS_AS(subsample(d, 13000, {}, 0.8, 6), std::invalid_argument);
    CHECK_THROWS_AS(subsample(d, 3000, {3}, 2.0, 6), std::invalid_argument);
}

TEST_CASE("synth_lowrank spectrum and recovery") {
    SynthLowRank clean = synth_lowrank(40, 6, 0.0, 7);
    // exactly d_true nonzero eigenvalues
    EigenDecomposition eig = eig_sym_topd(clean.s_true, 8, EigCriterion::LargestMagnitude);
    const double top = std::abs(eig.eigenvalues[0]);
    for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(eig.eigenvalues[j]) > 1e-6 * top);
    for (std::size_t j = 6; j < 8; ++j) CHECK(std::abs(eig.eigenvalues[j]) < 1e-8 * top);

    // exact recovery at d = d_true
    Matrix y = kpca_embed(clean.s_true, 6);
    CHECK(masked_mse(matmul_bt(y, y), clean.s_true) < 1e-10);

    // deterministic for a fixed seed
    SynthLowRank again = synth_lowrank(40, 6, 0.0, 7);
    CHECK(clean.features == again.features);
    CHECK(clean.s_true == again.s_true);

    CHECK_THROWS_AS(synth_lowrank(5, 6, 0.0, 8), std::invalid_argument);
}

TEST_CASE("linear simec fits a noiseless synthetic to near zero") {
    SynthLowRank clean = synth_lowrank(60, 4, 0.0, 9);
    SimEcConfig cfg;
    cfg.embed_dim = 4;
    cfg.lr = 0.02;
    cfg.epochs = 1500;
    cfg.seed = 10;
    TrainResult r = train(cfg, clean.features, TargetSpec::square(clean.s_true));
    CHECK(r.report.final_relation_mse < 1e-3);
}

TEST_CASE("synth_blobs produces separated labeled clusters") {
    Dataset d = synth_blobs(300, 10, 16, 0.25, 11);
    CHECK(d.size() == 300);
    CHECK(d.has_labels());
    CHECK(d.train_ids.size() == 240);
    int max_label = 0;
    for (int label : d.labels) max_label = std::max(max_label, label);
    CHECK(max_label <= 9);

    // same-class points are closer than cross-class points on average
    double within = 0.0, across = 0.0;
    std::size_t nw = 0, na = 0;
    for (std::size_t i = 0; i < 120; ++i) {
        for (std::size_t j = i + 1; j < 120; ++j) {
            double dist = 0.0;
            for (std::size_t c = 0; c < 16; ++c) {
                const double diff = d.features(i, c) - d.features(j, c);
                dist += diff * diff;
            }
            if (d.labels[i] == d.labels[j]) {
                within += dist;
                ++nw;
            } else {
                across += dist;
                ++na;
            }
        }
    }
    CHECK(within / static_cast<double>(nw) < 0.2 * across / static_cast<double>(na));
}

TEST_CASE("synth_strokes yields binary images with a non-metric overlap matrix") {
    Dataset d = synth_strokes(220, 12, 12);
    for (std::size_t i = 0; i < d.features.size(); ++i) {
        const double v = d.features.data()[i];
        CHECK((v == 0.0 || v == 1.0));
    }
    Matrix s = center(simpson_similarity(d.features));
    EigenDecomposition eig = eig_sym_topd(s, 5, EigCriterion::MostNegative);
    // significant negative spectrum is the whole point of this generator
    EigenDecomposition top = eig_sym_topd(s, 1, EigCriterion::LargestPositive);
    CHECK(eig.eigenvalues[0] < 0.0);
    CHECK(std::abs(eig.eigenvalues[0]) > 0.02 * top.eigenvalues[0]);
}

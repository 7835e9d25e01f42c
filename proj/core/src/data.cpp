#include "simecs/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "simecs/rng.hpp"
#include "simecs/spectral.hpp"

namespace simecs {

namespace {

Matrix gather_rows(const Matrix& a, const std::vector<std::size_t>& ids) {
    Matrix out(ids.size(), a.cols());
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(ids[i], j);
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& ids) {
    std::vector<int> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = labels[ids[i]];
    return out;
}

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("load_mnist_idx: truncated file " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>((v >> 24) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>(v & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void default_split_all_train(Dataset& d) {
    d.train_ids.resize(d.size());
    std::iota(d.train_ids.begin(), d.train_ids.end(), 0);
    d.test_ids.clear();
}

}  // namespace

Matrix Dataset::train_features() const { return gather_rows(features, train_ids); }
Matrix Dataset::test_features() const { return gather_rows(features, test_ids); }
std::vector<int> Dataset::train_labels() const { return gather_labels(labels, train_ids); }
std::vector<int> Dataset::test_labels() const { return gather_labels(labels, test_ids); }

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("load_mnist_idx: cannot open " + images_path);
    const std::uint32_t img_magic = read_u32_be(img, images_path);
    if (img_magic != 0x00000803u) {
        std::ostringstream os;
        os << "load_mnist_idx: bad IDX image magic 0x" << std::hex << img_magic << " in "
           << images_path;
        throw std::runtime_error(os.str());
    }
    const std::uint32_t count = read_u32_be(img, images_path);
    const std::uint32_t height = read_u32_be(img, images_path);
    const std::uint32_t width = read_u32_be(img, images_path);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("load_mnist_idx: cannot open " + labels_path);
    const std::uint32_t lab_magic = read_u32_be(lab, labels_path);
    if (lab_magic != 0x00000801u) {
        std::ostringstream os;
        os << "load_mnist_idx: bad IDX label magic 0x" << std::hex << lab_magic << " in "
           << labels_path;
        throw std::runtime_error(os.str());
    }
    const std::uint32_t lab_count = read_u32_be(lab, labels_path);
    if (lab_count != count) {
        std::ostringstream os;
        os << "load_mnist_idx: image count " << count << " does not match label count "
           << lab_count;
        throw std::runtime_error(os.str());
    }

    const std::size_t dim = static_cast<std::size_t>(height) * width;
    Dataset d;
    d.features = Matrix(count, dim);
    std::vector<unsigned char> row(dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(dim));
        if (!img) throw std::runtime_error("load_mnist_idx: truncated file " + images_path);
        for (std::size_t j = 0; j < dim; ++j)
            d.features(i, j) = static_cast<double>(row[j]);
    }
    d.labels.resize(count);
    std::vector<unsigned char> labs(count);
    lab.read(reinterpret_cast<char*>(labs.data()), static_cast<std::streamsize>(count));
    if (!lab) throw std::runtime_error("load_mnist_idx: truncated file " + labels_path);
    for (std::uint32_t i = 0; i < count; ++i) d.labels[i] = labs[i];

    default_split_all_train(d);
    return d;
}

void write_idx_images(const std::string& path, const Matrix& images, std::size_t height,
                      std::size_t width) {
    if (images.cols() != height * width)
        throw std::invalid_argument("write_idx_images: dims do not match columns");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_idx_images: cannot open " + path);
    write_u32_be(out, 0x00000803u);
    write_u32_be(out, static_cast<std::uint32_t>(images.rows()));
    write_u32_be(out, static_cast<std::uint32_t>(height));
    write_u32_be(out, static_cast<std::uint32_t>(width));
    for (std::size_t i = 0; i < images.rows(); ++i) {
        for (std::size_t j = 0; j < images.cols(); ++j) {
            const double v = images(i, j);
            if (v < 0.0 || v > 255.0 || v != std::floor(v))
                throw std::invalid_argument("write_idx_images: values must be 0..255");
            const unsigned char byte = static_cast<unsigned char>(v);
            out.write(reinterpret_cast<const char*>(&byte), 1);
        }
    }
    if (!out) throw std::runtime_error("write_idx_images: write failed");
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_idx_labels: cannot open " + path);
    write_u32_be(out, 0x00000801u);
    write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    for (int v : labels) {
        if (v < 0 || v > 255)
            throw std::invalid_argument("write_idx_labels: labels must be 0..255");
        const unsigned char byte = static_cast<unsigned char>(v);
        out.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!out) throw std::runtime_error("write_idx_labels: write failed");
}

Dataset preprocess(const Dataset& d) {
    if (d.train_ids.empty()) throw std::invalid_argument("preprocess: no training rows");
    const std::size_t dim = d.features.cols();

    double max_raw = 0.0;
    for (std::size_t id : d.train_ids)
        for (std::size_t j = 0; j < dim; ++j)
            max_raw = std::max(max_raw, std::abs(d.features(id, j)));
    if (max_raw == 0.0) throw std::invalid_argument("preprocess: all-zero features");

    std::vector<double> mean(dim, 0.0);
    for (std::size_t id : d.train_ids)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += d.features(id, j);
    for (double& v : mean) v /= static_cast<double>(d.train_ids.size());

    // scale by the largest centered magnitude on the training rows so the
    // transform is idempotent up to rounding
    double max_centered = 0.0;
    for (std::size_t id : d.train_ids)
        for (std::size_t j = 0; j < dim; ++j)
            max_centered = std::max(max_centered, std::abs(d.features(id, j) - mean[j]));
    if (max_centered == 0.0)
        throw std::invalid_argument("preprocess: features are constant on training rows");

    Dataset out = d;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j)
            out.features(i, j) = (d.features(i, j) - mean[j]) / max_centered;
    return out;
}

Dataset subsample(const Dataset& d, std::size_t m, const std::vector<int>& classes,
                  double train_fraction, std::uint64_t seed) {
    if (train_fraction < 0.0 || train_fraction > 1.0)
        throw std::invalid_argument("subsample: train_fraction must be in [0, 1]");
    std::vector<std::size_t> pool;
    if (classes.empty()) {
        pool.resize(d.size());
        std::iota(pool.begin(), pool.end(), 0);
    } else {
        if (!d.has_labels())
            throw std::invalid_argument("subsample: class filter on unlabeled data");
        for (std::size_t i = 0; i < d.size(); ++i)
            if (std::find(classes.begin(), classes.end(), d.labels[i]) != classes.end())
                pool.push_back(i);
    }
    if (m > pool.size()) {
        std::ostringstream os;
        os << "subsample: requested " << m << " rows but only " << pool.size()
           << " available after the class filter";
        throw std::invalid_argument(os.str());
    }

    Rng rng(seed);
    for (std::size_t i = pool.size(); i > 1; --i) {  // Fisher-Yates
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(pool[i - 1], pool[j]);
    }
    pool.resize(m);

    Dataset out;
    out.features = gather_rows(d.features, pool);
    if (d.has_labels()) out.labels = gather_labels(d.labels, pool);
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m)));
    out.train_ids.resize(n_train);
    std::iota(out.train_ids.begin(), out.train_ids.end(), 0);
    out.test_ids.resize(m - n_train);
    std::iota(out.test_ids.begin(), out.test_ids.end(), n_train);
    return out;
}

SynthLowRank synth_lowrank(std::size_t m, std::size_t d_true, double noise,
                           std::uint64_t seed, std::size_t feature_dim) {
    if (d_true > m) throw std::invalid_argument("synth_lowrank: d_true must be <= m");
    if (feature_dim == 0) feature_dim = 2 * d_true + 8;
    if (feature_dim < d_true)
        throw std::invalid_argument("synth_lowrank: feature_dim must be >= d_true");

    Rng rng(seed);
    Matrix z(m, d_true);
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = rng.gaussian();

    SynthLowRank out;
    out.s_true = matmul_bt(z, z);
    if (noise > 0.0) {
        for (std::size_t i = 0; i < m; ++i) {
            out.s_true(i, i) += noise * rng.gaussian();
            for (std::size_t j = i + 1; j < m; ++j) {
                const double e = noise * rng.gaussian();
                out.s_true(i, j) += e;
                out.s_true(j, i) += e;
            }
        }
    }

    Matrix q(d_true, feature_dim);
    for (std::size_t i = 0; i < q.size(); ++i) q.data()[i] = rng.gaussian();
    // orthonormal rows: features become a rotation of the latent factors
    Matrix qt = transpose(q);
    detail::orthonormalize_columns(qt, rng.next_u64());
    q = transpose(qt);

    out.features = matmul(z, q);
    if (noise > 0.0) {
        const double feature_noise = 0.05 * noise;
        for (std::size_t i = 0; i < out.features.size(); ++i)
            out.features.data()[i] += feature_noise * rng.gaussian();
    }
    return out;
}

Dataset synth_blobs(std::size_t m, std::size_t n_classes, std::size_t feature_dim,
                    double spread, std::uint64_t seed, double train_fraction) {
    if (n_classes == 0) throw std::invalid_argument("synth_blobs: n_classes must be > 0");
    Rng rng(seed);
    Matrix centers(n_classes, feature_dim);
    for (std::size_t i = 0; i < centers.size(); ++i)
        centers.data()[i] = 3.0 * rng.gaussian();

    Dataset d;
    d.features = Matrix(m, feature_dim);
    d.labels.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t c = static_cast<std::size_t>(rng.below(n_classes));
        d.labels[i] = static_cast<int>(c);
        for (std::size_t j = 0; j < feature_dim; ++j)
            d.features(i, j) = centers(c, j) + spread * rng.gaussian();
    }
    default_split_all_train(d);
    return subsample(d, m, {}, train_fraction, seed ^ 0x9e3779b9ULL);
}

Dataset synth_strokes(std::size_t m, std::size_t side, std::uint64_t seed,
                      double train_fraction) {
    if (side < 4) throw std::invalid_argument("synth_strokes: side must be >= 4");
    Rng rng(seed);
    const std::size_t dim = side * side;

    // a short skeleton path per class; the stroke body is several halo rings
    // whose inclusion depends on a per-sample stroke weight, so thin strokes
    // nest inside thick ones and the overlap similarity turns strongly
    // non-metric
    const std::size_t n_classes = 2;
    const std::size_t n_rings = 4;
    std::vector<std::vector<std::size_t>> skeleton(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t r = side / 2, col = c == 0 ? side / 3 : (2 * side) / 3;
        for (std::size_t step = 0; step < side; ++step) {
            skeleton[c].push_back(r * side + col);
            switch (rng.below(4)) {
                case 0: r = std::min(side - 1, r + 1); break;
                case 1: r = r > 0 ? r - 1 : 0; break;
                case 2: col = std::min(side - 1, col + 1); break;
                default: col = col > 0 ? col - 1 : 0; break;
            }
        }
    }

    auto halo = [&](const std::vector<std::size_t>& core) {
        std::vector<std::size_t> out;
        std::vector<char> in_core(dim, 0);
        for (std::size_t p : core) in_core[p] = 1;
        for (std::size_t p : core) {
            const std::size_t r = p / side, col = p % side;
            const std::size_t cand[4] = {p >= side ? p - side : p,
                                         r + 1 < side ? p + side : p,
                                         col > 0 ? p - 1 : p,
                                         col + 1 < side ? p + 1 : p};
            for (std::size_t q : cand)
                if (!in_core[q]) {
                    in_core[q] = 1;
                    out.push_back(q);
                }
        }
        return out;
    };
    std::vector<std::vector<std::vector<std::size_t>>> rings(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<std::size_t> grown = skeleton[c];
        for (std::size_t r = 0; r < n_rings; ++r) {
            std::vector<std::size_t> ring = halo(grown);
            grown.insert(grown.end(), ring.begin(), ring.end());
            rings[c].push_back(std::move(ring));
        }
    }

    Dataset d;
    d.features = Matrix(m, dim);
    d.labels.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t c = static_cast<std::size_t>(rng.below(n_classes));
        d.labels[i] = static_cast<int>(c);
        for (std::size_t p : skeleton[c]) d.features(i, p) = 1.0;
        const double weight = 0.05 + 0.95 * rng.uniform();
        double ring_p = weight;
        for (const std::vector<std::size_t>& ring : rings[c]) {
            for (std::size_t p : ring)
                if (rng.uniform() < ring_p) d.features(i, p) = 1.0;
            ring_p *= 0.8;
        }
    }
    default_split_all_train(d);
    return subsample(d, m, {}, train_fraction, seed ^ 0x7f4a7c15ULL);
}

}  // namespace simecs

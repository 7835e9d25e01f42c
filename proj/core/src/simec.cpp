#include "simecs/simec.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace simecs {

namespace {

std::vector<std::size_t> resolve_target_ids(const SimEcConfig& cfg,
                                            const TargetSpec& target) {
    const std::size_t cols = target.cols();
    const std::size_t n = cfg.n_targets == 0 ? cols : cfg.n_targets;
    if (n > cols) {
        std::ostringstream os;
        os << "train: n_targets = " << n << " exceeds target columns = " << cols;
        throw std::invalid_argument(os.str());
    }
    if (!cfg.target_column_ids.empty()) {
        if (cfg.target_column_ids.size() != n)
            throw std::invalid_argument(
                "train: target_column_ids length differs from n_targets");
        for (std::size_t id : cfg.target_column_ids)
            if (id >= cols)
                throw std::invalid_argument("train: target column id out of range");
        return cfg.target_column_ids;
    }
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    return ids;
}

Matrix select_columns(const Matrix& a, const std::vector<std::size_t>& ids) {
    Matrix out(a.rows(), ids.size());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < ids.size(); ++j) out(i, j) = a(i, ids[j]);
    return out;
}

Matrix select_block(const Matrix& a, const std::vector<std::size_t>& row_ids,
                    const std::vector<std::size_t>& col_ids) {
    Matrix out(row_ids.size(), col_ids.size());
    for (std::size_t i = 0; i < row_ids.size(); ++i)
        for (std::size_t j = 0; j < col_ids.size(); ++j)
            out(i, j) = a(row_ids[i], col_ids[j]);
    return out;
}

Matrix select_rows(const Matrix& a, std::size_t r0, std::size_t r1) {
    Matrix out(r1 - r0, a.cols());
    for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i - r0, j) = a(i, j);
    return out;
}

struct FinalMetrics {
    double relation_mse = 0.0;
    std::optional<double> gram_mse;
};

FinalMetrics compute_final_metrics(const NetworkParams& params, const Matrix& x,
                                   const TargetSpec& full_target,
                                   const TargetSpec& selected_target) {
    FinalMetrics out;
    ObjectiveConfig plain;  // data term only
    out.relation_mse = loss_terms(params, x, selected_target, plain).data;
    if (full_target.kind == TargetKind::SquareSymmetric && full_target.k() == 1) {
        Matrix y = forward_embed(params, x);
        Matrix gram = matmul_bt(y, y);
        out.gram_mse = masked_mse(gram, full_target.slices.front());
    }
    return out;
}

TargetSpec slice_target_rows(const TargetSpec& t, std::size_t r0, std::size_t r1) {
    TargetSpec out;
    out.kind = TargetKind::Rectangular;  // row block of a square target is not square
    for (const Matrix& s : t.slices) out.slices.push_back(select_rows(s, r0, r1));
    if (t.mask) out.mask = select_rows(*t.mask, r0, r1);
    return out;
}

TrainResult train_impl(const SimEcConfig& cfg_in, const Matrix& x,
                       const TargetSpec& target, const Matrix* preset_relation,
                       bool freeze_relation) {
    const auto t_start = std::chrono::steady_clock::now();
    target.validate();

    SimEcConfig cfg = cfg_in;
    if (cfg.input_dim == 0) cfg.input_dim = x.cols();
    if (cfg.input_dim != x.cols()) {
        std::ostringstream os;
        os << "train: input_dim = " << cfg.input_dim << " but x has " << x.cols()
           << " columns";
        throw std::invalid_argument(os.str());
    }
    if (cfg.embed_dim < 1) throw std::invalid_argument("train: embed_dim must be >= 1");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.k != target.k())
        throw std::invalid_argument("train: config k differs from target k");
    if (x.rows() != target.rows())
        throw std::invalid_argument("train: x rows differ from target rows");
    if (cfg.lambda_sym > 0.0 && cfg.k != 1)
        throw std::invalid_argument("train: lambda_sym > 0 requires k == 1");

    const std::vector<std::size_t> ids = resolve_target_ids(cfg, target);
    cfg.n_targets = ids.size();

    TargetSpec train_target;
    train_target.kind = target.kind;
    for (const Matrix& s : target.slices) train_target.slices.push_back(select_columns(s, ids));
    if (target.mask) train_target.mask = select_columns(*target.mask, ids);

    ObjectiveConfig obj;
    obj.lambda_sym = cfg.lambda_sym;
    obj.lambda_orth = cfg.lambda_orth;
    obj.lambda_l2 = cfg.lambda_l2;
    if (cfg.lambda_sym > 0.0) {
        if (target.kind != TargetKind::SquareSymmetric)
            throw std::invalid_argument(
                "train: lambda_sym > 0 requires a square_symmetric target");
        obj.sym_target = select_block(target.slices.front(), ids, ids);
        if (target.mask) obj.sym_mask = select_block(*target.mask, ids, ids);
    }

    NetShape shape;
    shape.input_dim = cfg.input_dim;
    shape.hidden = cfg.hidden_sizes;
    shape.embed_dim = cfg.embed_dim;
    shape.n_targets = cfg.n_targets;
    shape.k = cfg.k;
    shape.encoder_bias = cfg.encoder_bias;
    shape.output_bounds = cfg.output_bounds;

    NetworkParams params = init(shape, cfg.seed);
    if (preset_relation) {
        if (preset_relation->rows() != cfg.embed_dim ||
            preset_relation->cols() != cfg.n_targets)
            throw std::invalid_argument("train: preset relation weight shape mismatch");
        for (Matrix& w : params.relation) w = *preset_relation;
    }

    AdamState state = AdamState::for_params(params);
    TrainReport report;
    report.loss_trace.reserve(cfg.epochs);

    const std::size_t m = x.rows();
    const std::size_t batch = cfg.batch_rows == 0 ? m : std::min(cfg.batch_rows, m);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t r0 = 0; r0 < m; r0 += batch) {
            const std::size_t r1 = std::min(m, r0 + batch);
            double step_loss = 0.0;
            NetworkParams grads;
            if (r0 == 0 && r1 == m) {
                grads = backward(params, x, train_target, obj, &step_loss);
            } else {
                Matrix xb = select_rows(x, r0, r1);
                TargetSpec tb = slice_target_rows(train_target, r0, r1);
                grads = backward(params, xb, tb, obj, &step_loss);
            }
            if (freeze_relation)
                for (Matrix& w : grads.relation) w = Matrix(w.rows(), w.cols());
            adam_step(params, grads, state, cfg.lr);
            epoch_loss += step_loss;
            ++steps;
        }
        epoch_loss /= static_cast<double>(steps);
        if (!std::isfinite(epoch_loss)) {
            std::ostringstream os;
            os << "train: non-finite loss at epoch " << epoch + 1 << " of " << cfg.epochs;
            throw std::runtime_error(os.str());
        }
        report.loss_trace.push_back(epoch_loss);
    }

    FinalMetrics fin = compute_final_metrics(params, x, target, train_target);
    report.final_relation_mse = fin.relation_mse;
    report.final_gram_mse = fin.gram_mse;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    TrainResult result;
    result.model.params = std::move(params);
    result.model.config = cfg;
    result.model.target_column_ids = ids;
    result.report = std::move(report);
    return result;
}

}  // namespace

TrainResult train(const SimEcConfig& cfg, const Matrix& x, const TargetSpec& target) {
    return train_impl(cfg, x, target, nullptr, false);
}

Matrix embed(const SimEcModel& model, const Matrix& x_new) {
    return forward_embed(model.params, x_new);
}

std::vector<Matrix> predict_relations(const SimEcModel& model, const Matrix& x_new) {
    return forward_full(model.params, x_new);
}

Matrix gram_approx(const SimEcModel& model, const Matrix& x) {
    Matrix y = forward_embed(model.params, x);
    return matmul_bt(y, y);
}

TrainResult identity_factorize(const TargetSpec& target, std::size_t d,
                               double lambda_orth, const FactorizeOptions& opts) {
    SimEcConfig cfg;
    cfg.input_dim = target.rows();
    cfg.embed_dim = d;
    cfg.n_targets = 0;
    cfg.k = target.k();
    cfg.lambda_orth = lambda_orth;
    cfg.lambda_l2 = opts.lambda_l2;
    cfg.lr = opts.lr;
    cfg.epochs = opts.epochs;
    cfg.seed = opts.seed;
    cfg.encoder_bias = false;
    return train_impl(cfg, Matrix::identity(target.rows()), target, nullptr, false);
}

DualResult train_dual(const SimEcConfig& cfg1, const SimEcConfig& cfg2, const Matrix& x1,
                      const Matrix& x2, const TargetSpec& r) {
    if (r.kind != TargetKind::Rectangular)
        throw std::invalid_argument("train_dual: target must be rectangular");
    if (cfg1.embed_dim != cfg2.embed_dim) {
        std::ostringstream os;
        os << "train_dual: embed_dim mismatch " << cfg1.embed_dim << " vs "
           << cfg2.embed_dim;
        throw std::invalid_argument(os.str());
    }

    DualResult out;
    TrainResult stage1 = train_impl(cfg1, x1, r, nullptr, false);
    out.model1 = std::move(stage1.model);
    out.report1 = std::move(stage1.report);

    Matrix y1 = embed(out.model1, x1);  // m x d

    TargetSpec rt;
    rt.kind = TargetKind::Rectangular;
    for (const Matrix& s : r.slices) rt.slices.push_back(transpose(s));
    if (r.mask) rt.mask = transpose(*r.mask);

    SimEcConfig cfg2r = cfg2;
    const std::vector<std::size_t> ids2 = resolve_target_ids(cfg2r, rt);
    Matrix frozen(cfg2.embed_dim, ids2.size());
    for (std::size_t j = 0; j < ids2.size(); ++j)
        for (std::size_t i = 0; i < cfg2.embed_dim; ++i) frozen(i, j) = y1(ids2[j], i);

    TrainResult stage2 = train_impl(cfg2r, x2, rt, &frozen, true);
    out.model2 = std::move(stage2.model);
    out.report2 = std::move(stage2.report);
    return out;
}

TargetSpec multi_similarity_target(const std::vector<Matrix>& mats, MultiMode mode) {
    if (mats.size() < 2)
        throw std::invalid_argument("multi_similarity_target: need >= 2 matrices");
    const Matrix& first = mats.front();
    for (const Matrix& m : mats) {
        if (!m.same_shape(first))
            throw std::invalid_argument("multi_similarity_target: shape mismatch");
        if (m.rows() != m.cols())
            throw std::invalid_argument("multi_similarity_target: matrices must be square");
    }
    std::vector<Matrix> normalized;
    normalized.reserve(mats.size());
    for (const Matrix& m : mats) normalized.push_back(normalize_by_top_eigenvalue(m));

    if (mode == MultiMode::Averaged)
        return TargetSpec::square(average_similarities(normalized));

    TargetSpec t;
    t.kind = TargetKind::SquareSymmetric;
    t.slices = std::move(normalized);
    t.validate();
    return t;
}

EvalMetrics evaluate(const SimEcModel& model, const Matrix& x, const TargetSpec& target) {
    target.validate();
    const std::vector<std::size_t>& ids = model.target_column_ids;
    for (std::size_t id : ids)
        if (id >= target.cols())
            throw std::invalid_argument("evaluate: model target ids exceed target columns");
    TargetSpec selected;
    selected.kind = target.kind;
    for (const Matrix& s : target.slices) selected.slices.push_back(select_columns(s, ids));
    if (target.mask) selected.mask = select_columns(*target.mask, ids);
    FinalMetrics fin = compute_final_metrics(model.params, x, target, selected);
    EvalMetrics out;
    out.relation_mse = fin.relation_mse;
    out.gram_mse = fin.gram_mse;
    return out;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[6] = {'S', 'I', 'M', 'E', 'C', '1'};

void store_u32(std::string& out, std::uint32_t v) {
    char b[4];
    b[0] = static_cast<char>(v & 0xff);
    b[1] = static_cast<char>((v >> 8) & 0xff);
    b[2] = static_cast<char>((v >> 16) & 0xff);
    b[3] = static_cast<char>((v >> 24) & 0xff);
    out.append(b, 4);
}

void store_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.append(b, 8);
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    void bytes(char* dst, std::size_t n) {
        if (pos_ + n > data_.size())
            throw std::runtime_error("load_model: truncated model file");
        std::memcpy(dst, data_.data() + pos_, n);
        pos_ += n;
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }

    double f64() {
        unsigned char b[8];
        bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string text(std::size_t n) {
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    std::string data_;
    std::size_t pos_ = 0;
};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
std::string join_csv(const std::vector<T>& values) {
    std::ostringstream os;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << values[i];
    }
    return os.str();
}

std::vector<std::size_t> parse_size_csv(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(static_cast<std::size_t>(std::stoull(item)));
    }
    return out;
}

std::string config_text(const SimEcModel& model) {
    const SimEcConfig& c = model.config;
    std::ostringstream os;
    os << "format=1\n";
    os << "input_dim=" << c.input_dim << "\n";
    os << "embed_dim=" << c.embed_dim << "\n";
    os << "hidden_sizes=" << join_csv(c.hidden_sizes) << "\n";
    os << "n_targets=" << c.n_targets << "\n";
    os << "k=" << c.k << "\n";
    os << "lambda_sym=" << fmt_double(c.lambda_sym) << "\n";
    os << "lambda_orth=" << fmt_double(c.lambda_orth) << "\n";
    os << "lambda_l2=" << fmt_double(c.lambda_l2) << "\n";
    if (c.output_bounds)
        os << "output_bounds=" << fmt_double(c.output_bounds->lo) << ","
           << fmt_double(c.output_bounds->hi) << "\n";
    else
        os << "output_bounds=none\n";
    os << "lr=" << fmt_double(c.lr) << "\n";
    os << "epochs=" << c.epochs << "\n";
    os << "batch_rows=" << c.batch_rows << "\n";
    os << "seed=" << c.seed << "\n";
    os << "encoder_bias=" << (c.encoder_bias ? 1 : 0) << "\n";
    os << "target_column_ids=" << join_csv(model.target_column_ids) << "\n";
    return os.str();
}

void store_matrix(std::string& out, const Matrix& m) {
    store_u32(out, static_cast<std::uint32_t>(m.rows()));
    store_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) store_f64(out, m.data()[i]);
}

Matrix read_matrix(Reader& r) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
    return m;
}

}  // namespace

void save_model(const SimEcModel& model, const std::string& path) {
    std::string blob;
    blob.append(kMagic, sizeof(kMagic));
    const std::string cfg = config_text(model);
    store_u32(blob, static_cast<std::uint32_t>(cfg.size()));
    blob += cfg;

    std::vector<const Matrix*> mats;
    for (const LayerParams& layer : model.params.encoder) {
        mats.push_back(&layer.weights);
        if (layer.has_bias()) mats.push_back(&layer.bias);
    }
    for (const Matrix& w : model.params.relation) mats.push_back(&w);
    store_u32(blob, static_cast<std::uint32_t>(mats.size()));
    for (const Matrix* m : mats) store_matrix(blob, *m);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

SimEcModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    Reader r(buf.str());

    char magic[6];
    r.bytes(magic, 6);
    if (std::memcmp(magic, kMagic, 6) != 0)
        throw std::runtime_error("load_model: bad magic bytes in " + path);

    const std::uint32_t cfg_len = r.u32();
    const std::string cfg_text = r.text(cfg_len);

    std::map<std::string, std::string> kv;
    std::stringstream ss(cfg_text);
    std::string line;
    while (std::getline(ss, line)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw std::runtime_error("load_model: missing config key " + key);
        return it->second;
    };

    SimEcModel model;
    SimEcConfig& c = model.config;
    if (need("format") != "1")
        throw std::runtime_error("load_model: unsupported format " + need("format"));
    c.input_dim = std::stoull(need("input_dim"));
    c.embed_dim = std::stoull(need("embed_dim"));
    c.hidden_sizes = parse_size_csv(need("hidden_sizes"));
    c.n_targets = std::stoull(need("n_targets"));
    c.k = std::stoull(need("k"));
    c.lambda_sym = std::stod(need("lambda_sym"));
    c.lambda_orth = std::stod(need("lambda_orth"));
    c.lambda_l2 = std::stod(need("lambda_l2"));
    const std::string& bounds = need("output_bounds");
    if (bounds != "none") {
        const std::size_t comma = bounds.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("load_model: malformed output_bounds");
        c.output_bounds = OutputBounds{std::stod(bounds.substr(0, comma)),
                                       std::stod(bounds.substr(comma + 1))};
    }
    c.lr = std::stod(need("lr"));
    c.epochs = std::stoull(need("epochs"));
    c.batch_rows = std::stoull(need("batch_rows"));
    c.seed = std::stoull(need("seed"));
    c.encoder_bias = need("encoder_bias") == "1";
    model.target_column_ids = parse_size_csv(need("target_column_ids"));
    c.target_column_ids = model.target_column_ids;

    const std::uint32_t n_mats = r.u32();
    std::vector<Matrix> mats;
    mats.reserve(n_mats);
    for (std::uint32_t i = 0; i < n_mats; ++i) mats.push_back(read_matrix(r));

    const std::size_t n_layers = c.hidden_sizes.size() + 1;
    const std::size_t expected =
        n_layers * (c.encoder_bias ? 2 : 1) + c.k;
    if (mats.size() != expected)
        throw std::runtime_error("load_model: matrix count does not match config");

    NetworkParams& p = model.params;
    p.output_bounds = c.output_bounds;
    std::size_t cursor = 0;
    for (std::size_t t = 0; t < n_layers; ++t) {
        LayerParams layer;
        layer.weights = std::move(mats[cursor++]);
        if (c.encoder_bias) layer.bias = std::move(mats[cursor++]);
        layer.activation = (t + 1 == n_layers) ? Activation::Linear : Activation::Tanh;
        p.encoder.push_back(std::move(layer));
    }
    for (std::size_t i = 0; i < c.k; ++i) p.relation.push_back(std::move(mats[cursor++]));

    if (!r.at_end()) throw std::runtime_error("load_model: trailing bytes in " + path);
    if (p.embed_dim() != c.embed_dim || p.input_dim() != c.input_dim)
        throw std::runtime_error("load_model: weight shapes do not match config");
    return model;
}

}  // namespace simecs

#include "simecs/net.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "simecs/rng.hpp"

namespace simecs {

namespace {

void validate_net(const NetworkParams& p, const Matrix& x, const TargetSpec& target,
                  const ObjectiveConfig& obj) {
    if (p.encoder.empty()) throw std::invalid_argument("net: encoder has no layers");
    if (p.relation.empty()) throw std::invalid_argument("net: no relation weights");
    if (x.cols() != p.input_dim()) {
        std::ostringstream os;
        os << "net: input has " << x.cols() << " columns, encoder expects "
           << p.input_dim();
        throw std::invalid_argument(os.str());
    }
    std::size_t width = p.input_dim();
    for (const LayerParams& layer : p.encoder) {
        if (layer.weights.rows() != width)
            throw std::invalid_argument("net: inconsistent encoder layer shapes");
        if (layer.has_bias() &&
            (layer.bias.rows() != 1 || layer.bias.cols() != layer.weights.cols()))
            throw std::invalid_argument("net: bias shape mismatch");
        width = layer.weights.cols();
    }
    if (p.encoder.back().activation != Activation::Linear)
        throw std::invalid_argument("net: embedding layer must be linear");
    const std::size_t d = p.embed_dim(), n = target.cols();
    for (const Matrix& w : p.relation)
        if (w.rows() != d || w.cols() != n)
            throw std::invalid_argument("net: relation weight shape mismatch");
    if (p.k() != target.k())
        throw std::invalid_argument("net: relation slice count differs from target k");
    if (x.rows() != target.rows())
        throw std::invalid_argument("net: input rows differ from target rows");
    if (obj.lambda_sym > 0.0) {
        if (target.k() != 1)
            throw std::invalid_argument(
                "net: the sym regularizer is undefined for k > 1 targets");
        if (!obj.sym_target)
            throw std::invalid_argument("net: lambda_sym > 0 requires sym_target");
        if (obj.sym_target->rows() != n || obj.sym_target->cols() != n)
            throw std::invalid_argument("net: sym_target must be n x n");
        if (obj.sym_mask && !obj.sym_mask->same_shape(*obj.sym_target))
            throw std::invalid_argument("net: sym_mask shape mismatch");
    }
}

struct ForwardCache {
    std::vector<Matrix> h;    // h[0] = x, h[t] = activation of layer t
    std::vector<Matrix> out;  // activated outputs per slice
};

Matrix apply_layer(const LayerParams& layer, const Matrix& input) {
    Matrix z = matmul(input, layer.weights);
    if (layer.has_bias()) {
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double* zi = z.row_ptr(i);
            const double* b = layer.bias.row_ptr(0);
            for (std::size_t j = 0; j < z.cols(); ++j) zi[j] += b[j];
        }
    }
    if (layer.activation == Activation::Tanh) {
        double* pz = z.data();
        for (std::size_t i = 0; i < z.size(); ++i) pz[i] = std::tanh(pz[i]);
    }
    return z;
}

ForwardCache run_forward(const NetworkParams& p, const Matrix& x) {
    ForwardCache cache;
    cache.h.reserve(p.encoder.size() + 1);
    cache.h.push_back(x);
    for (const LayerParams& layer : p.encoder)
        cache.h.push_back(apply_layer(layer, cache.h.back()));
    const Matrix& y = cache.h.back();
    cache.out.reserve(p.k());
    for (const Matrix& w : p.relation) {
        Matrix z = matmul(y, w);
        if (p.output_bounds) {
            const double lo = p.output_bounds->lo, hi = p.output_bounds->hi;
            double* pz = z.data();
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double zi = pz[i];
                const double sig =
                    zi >= 0.0 ? 1.0 / (1.0 + std::exp(-zi))
                              : std::exp(zi) / (1.0 + std::exp(zi));
                pz[i] = lo + (hi - lo) * sig;
            }
        }
        cache.out.push_back(std::move(z));
    }
    return cache;
}

std::size_t observed_count(const TargetSpec& target) {
    if (!target.mask) return target.rows() * target.cols();
    std::size_t count = 0;
    const double* pm = target.mask->data();
    for (std::size_t i = 0; i < target.mask->size(); ++i)
        if (pm[i] == 1.0) ++count;
    if (count == 0) throw std::invalid_argument("net: no observed entries");
    return count;
}

std::size_t weight_count(const NetworkParams& p) {
    std::size_t count = 0;
    for (const LayerParams& layer : p.encoder) count += layer.weights.size();
    for (const Matrix& w : p.relation) count += w.size();
    return count;
}

LossTerms compute_terms(const NetworkParams& p, const ForwardCache& cache,
                        const TargetSpec& target, const ObjectiveConfig& obj) {
    LossTerms terms;
    const std::size_t n_obs = observed_count(target);
    const double data_scale =
        1.0 / (static_cast<double>(target.k()) * static_cast<double>(n_obs));

    for (std::size_t c = 0; c < target.k(); ++c) {
        const Matrix& pred = cache.out[c];
        const Matrix& t = target.slices[c];
        const double* pm = target.mask ? target.mask->data() : nullptr;
        const double* pp = pred.data();
        const double* pt = t.data();
        double acc = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pm && pm[i] != 1.0) continue;
            const double diff = pt[i] - pp[i];
            acc += diff * diff;
        }
        terms.data += acc * data_scale;
    }

    if (obj.lambda_sym > 0.0) {
        const Matrix& w = p.relation.front();
        Matrix wtw = matmul_at(w, w);  // n x n
        const Matrix& st = *obj.sym_target;
        const double* pm = obj.sym_mask ? obj.sym_mask->data() : nullptr;
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < wtw.size(); ++i) {
            if (pm && pm[i] != 1.0) continue;
            const double diff = st.data()[i] - wtw.data()[i];
            acc += diff * diff;
            ++count;
        }
        if (count == 0) throw std::invalid_argument("net: sym_mask has no observed entries");
        terms.sym = obj.lambda_sym * acc / static_cast<double>(count);
    }

    if (obj.lambda_orth > 0.0) {
        const std::size_t d = p.embed_dim();
        if (d > 1) {
            double acc = 0.0;
            for (const Matrix& w : p.relation) {
                Matrix wwt = matmul_bt(w, w);  // d x d
                for (std::size_t a = 0; a < d; ++a)
                    for (std::size_t b = 0; b < d; ++b)
                        if (a != b) acc += wwt(a, b) * wwt(a, b);
            }
            terms.orth = obj.lambda_orth * acc /
                         (static_cast<double>(p.k()) * static_cast<double>(d) *
                          static_cast<double>(d - 1));
        }
    }

    if (obj.lambda_l2 > 0.0) {
        double acc = 0.0;
        for (const LayerParams& layer : p.encoder) acc += frobenius_sq(layer.weights);
        for (const Matrix& w : p.relation) acc += frobenius_sq(w);
        terms.l2 = obj.lambda_l2 * acc / static_cast<double>(weight_count(p));
    }

    terms.total = terms.data + terms.sym + terms.orth + terms.l2;
    return terms;
}

}  // namespace

NetworkParams init(const NetShape& shape, std::uint64_t seed) {
    if (shape.input_dim == 0 || shape.embed_dim == 0 || shape.n_targets == 0 ||
        shape.k == 0)
        throw std::invalid_argument("init: dimensions must be positive");
    for (std::size_t h : shape.hidden)
        if (h == 0) throw std::invalid_argument("init: hidden layer of width 0");

    Rng rng(seed);
    NetworkParams p;
    p.output_bounds = shape.output_bounds;

    std::vector<std::size_t> widths;
    widths.push_back(shape.input_dim);
    for (std::size_t h : shape.hidden) widths.push_back(h);
    widths.push_back(shape.embed_dim);

    for (std::size_t t = 0; t + 1 < widths.size(); ++t) {
        LayerParams layer;
        const std::size_t fan_in = widths[t], fan_out = widths[t + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        layer.weights = Matrix(fan_in, fan_out);
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            layer.weights.data()[i] = rng.uniform(-limit, limit);
        if (shape.encoder_bias) layer.bias = Matrix(1, fan_out);
        const bool is_embedding_layer = t + 2 == widths.size();
        layer.activation = is_embedding_layer ? Activation::Linear : Activation::Tanh;
        p.encoder.push_back(std::move(layer));
    }

    const double limit =
        std::sqrt(6.0 / static_cast<double>(shape.embed_dim + shape.n_targets));
    for (std::size_t c = 0; c < shape.k; ++c) {
        Matrix w(shape.embed_dim, shape.n_targets);
        for (std::size_t i = 0; i < w.size(); ++i)
            w.data()[i] = rng.uniform(-limit, limit);
        p.relation.push_back(std::move(w));
    }
    return p;
}

Matrix forward_embed(const NetworkParams& p, const Matrix& x) {
    if (p.encoder.empty()) throw std::invalid_argument("net: encoder has no layers");
    if (x.cols() != p.input_dim()) {
        std::ostringstream os;
        os << "forward_embed: input has " << x.cols() << " columns, encoder expects "
           << p.input_dim();
        throw std::invalid_argument(os.str());
    }
    Matrix h = x;
    for (const LayerParams& layer : p.encoder) h = apply_layer(layer, h);
    detail::check_finite(h, "forward_embed");
    return h;
}

std::vector<Matrix> forward_full(const NetworkParams& p, const Matrix& x) {
    ForwardCache cache = run_forward(p, x);
    for (const Matrix& out : cache.out) detail::check_finite(out, "forward_full");
    return std::move(cache.out);
}

LossTerms loss_terms(const NetworkParams& p, const Matrix& x, const TargetSpec& target,
                     const ObjectiveConfig& obj) {
    validate_net(p, x, target, obj);
    ForwardCache cache = run_forward(p, x);
    return compute_terms(p, cache, target, obj);
}

double loss(const NetworkParams& p, const Matrix& x, const TargetSpec& target,
            const ObjectiveConfig& obj) {
    return loss_terms(p, x, target, obj).total;
}

NetworkParams backward(const NetworkParams& p, const Matrix& x, const TargetSpec& target,
                       const ObjectiveConfig& obj, double* loss_out) {
    validate_net(p, x, target, obj);
    ForwardCache cache = run_forward(p, x);
    if (loss_out) *loss_out = compute_terms(p, cache, target, obj).total;

    NetworkParams grads = zeroed_like(p);
    const Matrix& y = cache.h.back();
    const std::size_t batch = x.rows();
    const std::size_t n = target.cols();
    const std::size_t d = p.embed_dim();
    const std::size_t n_obs = observed_count(target);
    const double data_scale =
        2.0 / (static_cast<double>(target.k()) * static_cast<double>(n_obs));

    Matrix dy(batch, d);
    for (std::size_t c = 0; c < target.k(); ++c) {
        // dL/dZ for this slice: 2/(k N) * (pred - t) * g'(z), zero when masked
        Matrix g(batch, n);
        const Matrix& pred = cache.out[c];
        const Matrix& t = target.slices[c];
        const double* pm = target.mask ? target.mask->data() : nullptr;
        double* pg = g.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (pm && pm[i] != 1.0) continue;
            double v = data_scale * (pred.data()[i] - t.data()[i]);
            if (p.output_bounds) {
                const double lo = p.output_bounds->lo, hi = p.output_bounds->hi;
                const double sig = (pred.data()[i] - lo) / (hi - lo);
                v *= (hi - lo) * sig * (1.0 - sig);
            }
            pg[i] = v;
        }
        grads.relation[c] = add(grads.relation[c], matmul_at(y, g));
        dy = add(dy, matmul_bt(g, p.relation[c]));
    }

    if (obj.lambda_sym > 0.0) {
        const Matrix& w = p.relation.front();
        Matrix f = matmul_at(w, w);  // W^T W
        const Matrix& st = *obj.sym_target;
        const double* pm = obj.sym_mask ? obj.sym_mask->data() : nullptr;
        std::size_t count = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (pm && pm[i] != 1.0) {
                f.data()[i] = 0.0;
                continue;
            }
            f.data()[i] -= st.data()[i];
            ++count;
        }
        if (count == 0)
            throw std::invalid_argument("net: sym_mask has no observed entries");
        const double s = 2.0 * obj.lambda_sym / static_cast<double>(count);
        Matrix fsym = add(f, transpose(f));
        grads.relation[0] = add(grads.relation[0], scale(matmul(w, fsym), s));
    }

    if (obj.lambda_orth > 0.0 && d > 1) {
        const double s = 4.0 * obj.lambda_orth /
                         (static_cast<double>(p.k()) * static_cast<double>(d) *
                          static_cast<double>(d - 1));
        for (std::size_t c = 0; c < p.k(); ++c) {
            const Matrix& w = p.relation[c];
            Matrix wwt = matmul_bt(w, w);
            for (std::size_t a = 0; a < d; ++a) wwt(a, a) = 0.0;
            grads.relation[c] = add(grads.relation[c], scale(matmul(wwt, w), s));
        }
    }

    // backprop through the encoder stack
    Matrix delta = dy;
    for (std::size_t t = p.encoder.size(); t-- > 0;) {
        const LayerParams& layer = p.encoder[t];
        const Matrix& h_out = cache.h[t + 1];
        const Matrix& h_in = cache.h[t];
        if (layer.activation == Activation::Tanh) {
            double* pd = delta.data();
            const double* ph = h_out.data();
            for (std::size_t i = 0; i < delta.size(); ++i)
                pd[i] *= 1.0 - ph[i] * ph[i];
        }
        grads.encoder[t].weights = matmul_at(h_in, delta);
        if (layer.has_bias()) {
            Matrix db(1, layer.bias.cols());
            for (std::size_t i = 0; i < delta.rows(); ++i)
                for (std::size_t j = 0; j < delta.cols(); ++j) db(0, j) += delta(i, j);
            grads.encoder[t].bias = db;
        }
        if (t > 0) delta = matmul_bt(delta, layer.weights);
    }

    if (obj.lambda_l2 > 0.0) {
        const double s = 2.0 * obj.lambda_l2 / static_cast<double>(weight_count(p));
        for (std::size_t t = 0; t < p.encoder.size(); ++t)
            grads.encoder[t].weights =
                add(grads.encoder[t].weights, scale(p.encoder[t].weights, s));
        for (std::size_t c = 0; c < p.k(); ++c)
            grads.relation[c] = add(grads.relation[c], scale(p.relation[c], s));
    }

    return grads;
}

NetworkParams finite_diff_grad(const NetworkParams& p, const Matrix& x,
                               const TargetSpec& target, const ObjectiveConfig& obj,
                               double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
    NetworkParams work = p;
    NetworkParams grads = zeroed_like(p);
    std::vector<double*> wp = param_ptrs(work);
    std::vector<double*> gp = param_ptrs(grads);
    for (std::size_t i = 0; i < wp.size(); ++i) {
        const double orig = *wp[i];
        *wp[i] = orig + h;
        const double up = loss(work, x, target, obj);
        *wp[i] = orig - h;
        const double down = loss(work, x, target, obj);
        *wp[i] = orig;
        *gp[i] = (up - down) / (2.0 * h);
    }
    return grads;
}

NetworkParams zeroed_like(const NetworkParams& p) {
    NetworkParams z = p;
    for (LayerParams& layer : z.encoder) {
        layer.weights = Matrix(layer.weights.rows(), layer.weights.cols());
        if (layer.has_bias()) layer.bias = Matrix(1, layer.bias.cols());
    }
    for (Matrix& w : z.relation) w = Matrix(w.rows(), w.cols());
    return z;
}

std::vector<double*> param_ptrs(NetworkParams& p) {
    std::vector<double*> ptrs;
    for (LayerParams& layer : p.encoder) {
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            ptrs.push_back(layer.weights.data() + i);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            ptrs.push_back(layer.bias.data() + i);
    }
    for (Matrix& w : p.relation)
        for (std::size_t i = 0; i < w.size(); ++i) ptrs.push_back(w.data() + i);
    return ptrs;
}

AdamState AdamState::for_params(const NetworkParams& p) {
    AdamState state;
    state.m = zeroed_like(p);
    state.v = zeroed_like(p);
    state.step = 0;
    return state;
}

void adam_step(NetworkParams& p, const NetworkParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    if (lr <= 0.0) throw std::invalid_argument("adam_step: lr must be > 0");
    NetworkParams grads_copy = grads;  // traversal needs mutable access
    std::vector<double*> wp = param_ptrs(p);
    std::vector<double*> gp = param_ptrs(grads_copy);
    std::vector<double*> mp = param_ptrs(state.m);
    std::vector<double*> vp = param_ptrs(state.v);
    if (gp.size() != wp.size() || mp.size() != wp.size() || vp.size() != wp.size())
        throw std::invalid_argument("adam_step: state shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < wp.size(); ++i) {
        const double g = *gp[i];
        *mp[i] = beta1 * *mp[i] + (1.0 - beta1) * g;
        *vp[i] = beta2 * *vp[i] + (1.0 - beta2) * g * g;
        const double mhat = *mp[i] / bc1;
        const double vhat = *vp[i] / bc2;
        *wp[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace simecs

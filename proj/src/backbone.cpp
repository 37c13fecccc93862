#include "viforecast/backbone.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace viforecast {

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full_size() {
    ModelConfig c;
    c.width = 224;
    c.patch = 16;
    c.enc_dim = 768;
    c.enc_depth = 12;
    c.enc_heads = 12;
    c.dec_dim = 512;
    c.dec_depth = 8;
    c.dec_heads = 16;
    c.mlp_ratio = 4.0;
    c.heads = 9;
    return c;
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) {
        throw ConfigError("model." + key + ": " + why);
    };
    if (width <= 0 || patch <= 0 || width % patch != 0) fail("width", "must be a positive multiple of model.patch");
    if ((width / patch) % 2 != 0) fail("width", "width / patch must be even");
    if (enc_dim <= 0 || enc_heads <= 0 || enc_dim % enc_heads != 0) fail("enc_dim", "must be divisible by model.enc_heads");
    if (dec_dim <= 0 || dec_heads <= 0 || dec_dim % dec_heads != 0) fail("dec_dim", "must be divisible by model.dec_heads");
    if (enc_dim % 4 != 0) fail("enc_dim", "must be divisible by 4 for 2D sin-cos positions");
    if (dec_dim % 4 != 0) fail("dec_dim", "must be divisible by 4 for 2D sin-cos positions");
    if (enc_depth < 0 || dec_depth < 0) fail("enc_depth", "depths must be non-negative");
    if (!(mlp_ratio > 0.0) || enc_hidden() < 1 || dec_hidden() < 1) fail("mlp_ratio", "must be positive");
    if (heads < 1 || heads % 2 == 0) fail("heads", "must be a positive odd number");
}

// ---------------------------------------------------------------------------
// Parameter tree enumeration

Parameters Parameters::zeros_like(const Parameters& other) {
    Parameters z = other;
    for (auto& t : tensors(z)) {
        std::fill(t.data.begin(), t.data.end(), 0.0);
    }
    return z;
}

namespace {

template <class T, class P>
void visit_all(P& params, std::vector<BasicTensorRef<T>>& out) {
    auto mat = [&](std::string name, auto& m, bool decay) {
        out.push_back({std::move(name), {m.rows(), m.cols()}, std::span<T>(m.data(), static_cast<std::size_t>(m.size())), decay});
    };
    auto vec = [&](std::string name, auto& v) {
        out.push_back({std::move(name), {v.size()}, std::span<T>(v.data(), static_cast<std::size_t>(v.size())), false});
    };
    auto linear = [&](const std::string& prefix, auto& l) {
        mat(prefix + ".weight", l.weight, true);
        vec(prefix + ".bias", l.bias);
    };
    auto norm = [&](const std::string& prefix, auto& n) {
        vec(prefix + ".weight", n.weight);
        vec(prefix + ".bias", n.bias);
    };
    auto block = [&](const std::string& prefix, auto& b) {
        norm(prefix + ".norm1", b.norm1);
        linear(prefix + ".attn.qkv", b.qkv);
        linear(prefix + ".attn.proj", b.proj);
        norm(prefix + ".norm2", b.norm2);
        linear(prefix + ".mlp.fc1", b.fc1);
        linear(prefix + ".mlp.fc2", b.fc2);
    };
    linear("patch_embed", params.patch_embed);
    for (std::size_t k = 0; k < params.encoder.size(); ++k) block("enc." + std::to_string(k), params.encoder[k]);
    norm("enc_norm", params.enc_norm);
    linear("dec_embed", params.dec_embed);
    vec("mask_token", params.mask_token);
    for (std::size_t k = 0; k < params.decoder.size(); ++k) block("dec." + std::to_string(k), params.decoder[k]);
    norm("dec_norm", params.dec_norm);
    for (std::size_t i = 0; i < params.heads.size(); ++i) linear("head." + std::to_string(i), params.heads[i]);
}

}  // namespace

std::vector<TensorRef> tensors(Parameters& params) {
    std::vector<TensorRef> out;
    visit_all<double>(params, out);
    return out;
}

std::vector<ConstTensorRef> tensors(const Parameters& params) {
    std::vector<ConstTensorRef> out;
    visit_all<const double>(params, out);
    return out;
}

std::vector<TensorSpec> tensor_specs(const ModelConfig& c) {
    c.validate();
    std::vector<TensorSpec> out;
    auto linear = [&](const std::string& p, std::int64_t out_dim, std::int64_t in_dim) {
        out.push_back({p + ".weight", {out_dim, in_dim}});
        out.push_back({p + ".bias", {out_dim}});
    };
    auto norm = [&](const std::string& p, std::int64_t d) {
        out.push_back({p + ".weight", {d}});
        out.push_back({p + ".bias", {d}});
    };
    auto block = [&](const std::string& p, std::int64_t d, std::int64_t hidden) {
        norm(p + ".norm1", d);
        linear(p + ".attn.qkv", 3 * d, d);
        linear(p + ".attn.proj", d, d);
        norm(p + ".norm2", d);
        linear(p + ".mlp.fc1", hidden, d);
        linear(p + ".mlp.fc2", d, hidden);
    };
    linear("patch_embed", c.enc_dim, c.patch_dim());
    for (int k = 0; k < c.enc_depth; ++k) block("enc." + std::to_string(k), c.enc_dim, c.enc_hidden());
    norm("enc_norm", c.enc_dim);
    linear("dec_embed", c.dec_dim, c.enc_dim);
    out.push_back({"mask_token", {c.dec_dim}});
    for (int k = 0; k < c.dec_depth; ++k) block("dec." + std::to_string(k), c.dec_dim, c.dec_hidden());
    norm("dec_norm", c.dec_dim);
    for (int i = 0; i < c.heads; ++i) linear("head." + std::to_string(i), c.patch_dim(), c.dec_dim);
    return out;
}

std::int64_t parameter_count(const ModelConfig& config) {
    std::int64_t n = 0;
    for (const auto& t : tensor_specs(config)) {
        std::int64_t k = 1;
        for (auto d : t.shape) k *= d;
        n += k;
    }
    return n;
}

namespace {

LinearParams make_linear(int out_dim, int in_dim) {
    return {Matrix::Zero(out_dim, in_dim), Vector::Zero(out_dim)};
}

LayerNormParams make_norm(int d) {
    return {Vector::Ones(d), Vector::Zero(d)};
}

BlockParams make_block(int d, int hidden) {
    return {make_norm(d), make_linear(3 * d, d), make_linear(d, d), make_norm(d), make_linear(hidden, d),
            make_linear(d, hidden)};
}

}  // namespace

Parameters Parameters::allocate(const ModelConfig& c) {
    c.validate();
    Parameters p;
    p.patch_embed = make_linear(c.enc_dim, c.patch_dim());
    for (int k = 0; k < c.enc_depth; ++k) p.encoder.push_back(make_block(c.enc_dim, c.enc_hidden()));
    p.enc_norm = make_norm(c.enc_dim);
    p.dec_embed = make_linear(c.dec_dim, c.enc_dim);
    p.mask_token = Vector::Zero(c.dec_dim);
    for (int k = 0; k < c.dec_depth; ++k) p.decoder.push_back(make_block(c.dec_dim, c.dec_hidden()));
    p.dec_norm = make_norm(c.dec_dim);
    for (int i = 0; i < c.heads; ++i) p.heads.push_back(make_linear(c.patch_dim(), c.dec_dim));
    return p;
}

Parameters init_random(const ModelConfig& c) {
    Parameters p = Parameters::allocate(c);
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal(0.0, 0.02);
    auto trunc_normal = [&] {
        double x = normal(rng);
        while (std::abs(x) > 0.04) x = normal(rng);
        return x;
    };
    for (auto& t : tensors(p)) {
        const bool is_weight = t.shape.size() == 2;
        if (is_weight || t.name == "mask_token") {
            for (auto& x : t.data) x = trunc_normal();
        }
    }
    return p;
}

Matrix sincos_position_table(int n, int dim) {
    if (dim % 4 != 0) {
        throw ConfigError("positional dimension must be divisible by 4");
    }
    const int quarter = dim / 4;
    Matrix table(n * n, dim);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const int row = r * n + c;
            for (int i = 0; i < quarter; ++i) {
                const double omega = 1.0 / std::pow(10000.0, static_cast<double>(i) / quarter);
                table(row, i) = std::sin(c * omega);
                table(row, quarter + i) = std::cos(c * omega);
                table(row, 2 * quarter + i) = std::sin(r * omega);
                table(row, 3 * quarter + i) = std::cos(r * omega);
            }
        }
    }
    return table;
}

Matrix patchify(const Image& image, int s) {
    if (s <= 0 || image.width() != image.height() || image.width() % s != 0) {
        throw ShapeError("image of width " + std::to_string(image.width()) + " cannot be split into patches of " +
                         std::to_string(s));
    }
    const int n = image.width() / s;
    Matrix out(n * n, s * s * 3);
    for (int pr = 0; pr < n; ++pr) {
        for (int pc = 0; pc < n; ++pc) {
            const int row = pr * n + pc;
            for (int y = 0; y < s; ++y) {
                for (int x = 0; x < s; ++x) {
                    for (int ch = 0; ch < 3; ++ch) {
                        out(row, (y * s + x) * 3 + ch) = image.at(pr * s + y, pc * s + x, ch);
                    }
                }
            }
        }
    }
    return out;
}

Image unpatchify(const Matrix& patches, int s, int width) {
    const int n = width / s;
    if (patches.rows() != n * n || patches.cols() != s * s * 3) {
        throw ShapeError("patch matrix does not match a " + std::to_string(width) + " pixel image");
    }
    Image img(width, width);
    for (int pr = 0; pr < n; ++pr) {
        for (int pc = 0; pc < n; ++pc) {
            const int row = pr * n + pc;
            for (int y = 0; y < s; ++y) {
                for (int x = 0; x < s; ++x) {
                    for (int ch = 0; ch < 3; ++ch) {
                        img.at(pr * s + y, pc * s + x, ch) = patches(row, (y * s + x) * 3 + ch);
                    }
                }
            }
        }
    }
    return img;
}

// ---------------------------------------------------------------------------
// Layers

namespace {

constexpr double kNormEps = 1e-6;

Matrix linear(const Matrix& x, const LinearParams& p) {
    Matrix y = x * p.weight.transpose();
    y.rowwise() += p.bias.transpose();
    return y;
}

// Returns dx; accumulates dW and db.
Matrix linear_backward(const Matrix& x, const Matrix& dy, const LinearParams& p, LinearParams& g) {
    g.weight.noalias() += dy.transpose() * x;
    g.bias += dy.colwise().sum().transpose();
    return dy * p.weight;
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& p, LayerNormCache& cache) {
    const auto d = static_cast<double>(x.cols());
    cache.xhat.resize(x.rows(), x.cols());
    cache.rstd.resize(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mu = x.row(i).sum() / d;
        const double var = (x.row(i).array() - mu).square().sum() / d;
        const double rstd = 1.0 / std::sqrt(var + kNormEps);
        cache.rstd(i) = rstd;
        cache.xhat.row(i) = (x.row(i).array() - mu) * rstd;
    }
    Matrix y = cache.xhat.array().rowwise() * p.weight.transpose().array();
    y.rowwise() += p.bias.transpose();
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p, const LayerNormCache& cache,
                           LayerNormParams& g) {
    g.weight += dy.cwiseProduct(cache.xhat).colwise().sum().transpose();
    g.bias += dy.colwise().sum().transpose();
    const Matrix dxhat = dy.array().rowwise() * p.weight.transpose().array();
    const auto d = static_cast<double>(dy.cols());
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double mean_d = dxhat.row(i).sum() / d;
        const double mean_dx = dxhat.row(i).dot(cache.xhat.row(i)) / d;
        dx.row(i) = cache.rstd(i) * (dxhat.row(i).array() - mean_d - cache.xhat.row(i).array() * mean_dx);
    }
    return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

Matrix block_forward(const Matrix& x, int seq, int n_heads, const BlockParams& p, BlockCache& c) {
    const auto dim = static_cast<int>(x.cols());
    const int batch = static_cast<int>(x.rows()) / seq;
    const int dh = dim / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    c.h1 = layer_norm(x, p.norm1, c.ln1);
    c.qkv = linear(c.h1, p.qkv);
    c.attn.resize(x.rows(), dim);
    c.probs.resize(static_cast<std::size_t>(batch * n_heads));
    for (int b = 0; b < batch; ++b) {
        for (int k = 0; k < n_heads; ++k) {
            const auto q = c.qkv.block(b * seq, k * dh, seq, dh);
            const auto kk = c.qkv.block(b * seq, dim + k * dh, seq, dh);
            const auto v = c.qkv.block(b * seq, 2 * dim + k * dh, seq, dh);
            Matrix s = (q * kk.transpose()) * scale;
            for (int i = 0; i < seq; ++i) {
                const double mx = s.row(i).maxCoeff();
                s.row(i) = (s.row(i).array() - mx).exp();
                s.row(i) /= s.row(i).sum();
            }
            c.attn.block(b * seq, k * dh, seq, dh).noalias() = s * v;
            c.probs[static_cast<std::size_t>(b * n_heads + k)] = std::move(s);
        }
    }
    Matrix mid = x + linear(c.attn, p.proj);
    c.h2 = layer_norm(mid, p.norm2, c.ln2);
    c.pre = linear(c.h2, p.fc1);
    c.act = c.pre.unaryExpr(&gelu);
    return mid + linear(c.act, p.fc2);
}

Matrix block_backward(const Matrix& dout, int seq, int n_heads, const BlockParams& p, const BlockCache& c,
                      BlockParams& g) {
    const auto dim = static_cast<int>(dout.cols());
    const int batch = static_cast<int>(dout.rows()) / seq;
    const int dh = dim / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix dmid = dout;
    const Matrix dact = linear_backward(c.act, dout, p.fc2, g.fc2);
    const Matrix dpre = dact.cwiseProduct(c.pre.unaryExpr(&gelu_grad));
    const Matrix dh2 = linear_backward(c.h2, dpre, p.fc1, g.fc1);
    dmid += layer_norm_backward(dh2, p.norm2, c.ln2, g.norm2);

    const Matrix dattn = linear_backward(c.attn, dmid, p.proj, g.proj);
    Matrix dqkv(dout.rows(), 3 * dim);
    for (int b = 0; b < batch; ++b) {
        for (int k = 0; k < n_heads; ++k) {
            const auto q = c.qkv.block(b * seq, k * dh, seq, dh);
            const auto kk = c.qkv.block(b * seq, dim + k * dh, seq, dh);
            const auto v = c.qkv.block(b * seq, 2 * dim + k * dh, seq, dh);
            const Matrix& a = c.probs[static_cast<std::size_t>(b * n_heads + k)];
            const auto dout_h = dattn.block(b * seq, k * dh, seq, dh);
            dqkv.block(b * seq, 2 * dim + k * dh, seq, dh).noalias() = a.transpose() * dout_h;
            const Matrix da = dout_h * v.transpose();
            const Vector row_dot = da.cwiseProduct(a).rowwise().sum();
            const Matrix ds = a.cwiseProduct((da.colwise() - row_dot).matrix()) * scale;
            dqkv.block(b * seq, k * dh, seq, dh).noalias() = ds * kk;
            dqkv.block(b * seq, dim + k * dh, seq, dh).noalias() = ds.transpose() * q;
        }
    }
    const Matrix dh1 = linear_backward(c.h1, dqkv, p.qkv, g.qkv);
    return dmid + layer_norm_backward(dh1, p.norm1, c.ln1, g.norm1);
}

std::vector<int> mask_indices(const PatchMask& mask, bool masked) {
    std::vector<int> idx;
    const int total = mask.side() * mask.side();
    for (int i = 0; i < total; ++i) {
        if (mask.masked(i) == masked) idx.push_back(i);
    }
    return idx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Backbone

Backbone::Backbone(const ModelConfig& config, const Parameters& params)
    : config_(config), params_(&params) {
    config_.validate();
    if (static_cast<int>(params.heads.size()) != config.heads ||
        static_cast<int>(params.encoder.size()) != config.enc_depth ||
        static_cast<int>(params.decoder.size()) != config.dec_depth ||
        params.patch_embed.weight.rows() != config.enc_dim ||
        params.patch_embed.weight.cols() != config.patch_dim() || params.mask_token.size() != config.dec_dim) {
        throw ShapeError("parameters do not match the model config");
    }
    enc_pos_ = sincos_position_table(config_.patches_per_side(), config_.enc_dim);
    dec_pos_ = sincos_position_table(config_.patches_per_side(), config_.dec_dim);
}

BatchOutput Backbone::forward_batch(std::span<const Image* const> images, const PatchMask& mask,
                                    ForwardCache* cache) const {
    const auto& p = *params_;
    const int n = config_.patches_per_side();
    const int s = config_.patch;
    if (mask.side() != n) {
        throw ShapeError("mask is " + std::to_string(mask.side()) + "x" + std::to_string(mask.side()) +
                         ", model expects " + std::to_string(n) + "x" + std::to_string(n));
    }
    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;
    c.batch = static_cast<int>(images.size());
    c.visible = mask_indices(mask, false);
    c.masked = mask_indices(mask, true);
    const int nv = static_cast<int>(c.visible.size());
    const int nm = static_cast<int>(c.masked.size());
    const int tokens = n * n;
    if (nv == 0 || nm == 0) {
        throw ShapeError("mask must leave at least one visible and one masked patch");
    }
    const int batch = c.batch;

    c.patches.resize(batch * nv, config_.patch_dim());
    for (int b = 0; b < batch; ++b) {
        const Image& img = *images[static_cast<std::size_t>(b)];
        if (img.width() != config_.width || img.height() != config_.width) {
            throw ShapeError("input image must be " + std::to_string(config_.width) + "x" +
                             std::to_string(config_.width));
        }
        // Only visible pixels are read; masked patches never enter the network.
        for (int j = 0; j < nv; ++j) {
            const int pr = c.visible[static_cast<std::size_t>(j)] / n;
            const int pc = c.visible[static_cast<std::size_t>(j)] % n;
            for (int y = 0; y < s; ++y) {
                for (int x = 0; x < s; ++x) {
                    for (int ch = 0; ch < 3; ++ch) {
                        c.patches(b * nv + j, (y * s + x) * 3 + ch) = img.at(pr * s + y, pc * s + x, ch);
                    }
                }
            }
        }
    }

    Matrix x = linear(c.patches, p.patch_embed);
    for (int b = 0; b < batch; ++b) {
        for (int j = 0; j < nv; ++j) {
            x.row(b * nv + j) += enc_pos_.row(c.visible[static_cast<std::size_t>(j)]);
        }
    }
    c.encoder.resize(p.encoder.size());
    for (std::size_t k = 0; k < p.encoder.size(); ++k) {
        x = block_forward(x, nv, config_.enc_heads, p.encoder[k], c.encoder[k]);
    }
    c.enc_out = layer_norm(x, p.enc_norm, c.enc_norm);
    const Matrix embedded = linear(c.enc_out, p.dec_embed);

    Matrix y(batch * tokens, config_.dec_dim);
    for (int b = 0; b < batch; ++b) {
        int j = 0;
        for (int t = 0; t < tokens; ++t) {
            if (mask.masked(t)) {
                y.row(b * tokens + t) = p.mask_token.transpose();
            } else {
                y.row(b * tokens + t) = embedded.row(b * nv + j++);
            }
            y.row(b * tokens + t) += dec_pos_.row(t);
        }
    }
    c.decoder.resize(p.decoder.size());
    for (std::size_t k = 0; k < p.decoder.size(); ++k) {
        y = block_forward(y, tokens, config_.dec_heads, p.decoder[k], c.decoder[k]);
    }
    const Matrix z = layer_norm(y, p.dec_norm, c.dec_norm);
    c.dec_masked.resize(batch * nm, config_.dec_dim);
    for (int b = 0; b < batch; ++b) {
        for (int j = 0; j < nm; ++j) {
            c.dec_masked.row(b * nm + j) = z.row(b * tokens + c.masked[static_cast<std::size_t>(j)]);
        }
    }

    BatchOutput out;
    out.batch = batch;
    out.n_masked = nm;
    out.masked.reserve(p.heads.size());
    for (const auto& head : p.heads) {
        out.masked.push_back(linear(c.dec_masked, head));
    }
    return out;
}

void Backbone::backward(const ForwardCache& c, const std::vector<Matrix>& grad_masked, Parameters& g) const {
    const auto& p = *params_;
    const int n = config_.patches_per_side();
    const int tokens = n * n;
    const int nv = static_cast<int>(c.visible.size());
    const int nm = static_cast<int>(c.masked.size());
    const int batch = c.batch;
    if (grad_masked.size() != p.heads.size()) {
        throw ShapeError("expected one gradient per head");
    }

    Matrix dz_masked = Matrix::Zero(batch * nm, config_.dec_dim);
    for (std::size_t i = 0; i < p.heads.size(); ++i) {
        dz_masked += linear_backward(c.dec_masked, grad_masked[i], p.heads[i], g.heads[i]);
    }
    Matrix dz = Matrix::Zero(batch * tokens, config_.dec_dim);
    for (int b = 0; b < batch; ++b) {
        for (int j = 0; j < nm; ++j) {
            dz.row(b * tokens + c.masked[static_cast<std::size_t>(j)]) = dz_masked.row(b * nm + j);
        }
    }
    Matrix dy = layer_norm_backward(dz, p.dec_norm, c.dec_norm, g.dec_norm);
    for (std::size_t k = p.decoder.size(); k-- > 0;) {
        dy = block_backward(dy, tokens, config_.dec_heads, p.decoder[k], c.decoder[k], g.decoder[k]);
    }

    Matrix dembedded(batch * nv, config_.dec_dim);
    for (int b = 0; b < batch; ++b) {
        for (int j = 0; j < nv; ++j) {
            dembedded.row(b * nv + j) = dy.row(b * tokens + c.visible[static_cast<std::size_t>(j)]);
        }
        for (int j = 0; j < nm; ++j) {
            g.mask_token += dy.row(b * tokens + c.masked[static_cast<std::size_t>(j)]).transpose();
        }
    }
    const Matrix denc = linear_backward(c.enc_out, dembedded, p.dec_embed, g.dec_embed);
    Matrix dx = layer_norm_backward(denc, p.enc_norm, c.enc_norm, g.enc_norm);
    for (std::size_t k = p.encoder.size(); k-- > 0;) {
        dx = block_backward(dx, nv, config_.enc_heads, p.encoder[k], c.encoder[k], g.encoder[k]);
    }
    g.patch_embed.weight.noalias() += dx.transpose() * c.patches;
    g.patch_embed.bias += dx.colwise().sum().transpose();
}

std::vector<Image> Backbone::compose(const BatchOutput& out, int sample, const Image& input,
                                     const PatchMask& mask) const {
    const int n = config_.patches_per_side();
    const int s = config_.patch;
    std::vector<Image> images;
    images.reserve(out.masked.size());
    for (const auto& head : out.masked) {
        Image img = input;
        int j = 0;
        for (int t = 0; t < n * n; ++t) {
            if (!mask.masked(t)) continue;
            const auto row = head.row(sample * out.n_masked + j++);
            const int pr = t / n;
            const int pc = t % n;
            for (int y = 0; y < s; ++y) {
                for (int x = 0; x < s; ++x) {
                    for (int ch = 0; ch < 3; ++ch) {
                        img.at(pr * s + y, pc * s + x, ch) = row((y * s + x) * 3 + ch);
                    }
                }
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

std::vector<Image> forward(const Image& image, const PatchMask& mask, const Parameters& params,
                           const ModelConfig& config) {
    const Backbone model(config, params);
    const Image* batch[] = {&image};
    const BatchOutput out = model.forward_batch(batch, mask);
    return model.compose(out, 0, image, mask);
}

}  // namespace viforecast

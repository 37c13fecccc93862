#include "viforecast/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace viforecast {

namespace {

void check_loss_shapes(const std::vector<Matrix>& preds, const Matrix& target, const std::vector<double>& levels) {
    if (preds.size() != levels.size() || preds.empty()) {
        throw ShapeError("quantile loss needs one prediction per level");
    }
    for (const auto& p : preds) {
        if (p.rows() != target.rows() || p.cols() != target.cols()) {
            throw ShapeError("prediction shape " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                             " does not match target " + std::to_string(target.rows()) + "x" +
                             std::to_string(target.cols()));
        }
    }
}

}  // namespace

QuantileLossReport quantile_loss(const std::vector<Matrix>& preds, const Matrix& target,
                                 const std::vector<double>& levels) {
    check_loss_shapes(preds, target, levels);
    QuantileLossReport r;
    r.n_elements = target.size();
    r.per_level.resize(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double q = levels[i];
        const auto e = (target - preds[i]).array();
        r.per_level[i] = (q * e).max((q - 1.0) * e).mean();
    }
    double sum = 0.0;
    for (double l : r.per_level) sum += l;
    r.total = sum / static_cast<double>(levels.size());
    return r;
}

std::vector<Matrix> quantile_loss_grad(const std::vector<Matrix>& preds, const Matrix& target,
                                       const std::vector<double>& levels) {
    check_loss_shapes(preds, target, levels);
    const double scale = 1.0 / (static_cast<double>(target.size()) * static_cast<double>(levels.size()));
    std::vector<Matrix> grads;
    grads.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double q = levels[i];
        grads.push_back((target - preds[i]).unaryExpr([&](double e) {
            if (e > 0.0) return -q * scale;
            if (e < 0.0) return (1.0 - q) * scale;
            return 0.0;
        }));
    }
    return grads;
}

void OptimizerConfig::validate() const {
    if (!(base_lr > 0.0)) throw ConfigError("optim.base_lr must be positive");
    if (weight_decay < 0.0) throw ConfigError("optim.weight_decay must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optim.beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optim.beta2 must lie in [0, 1)");
    if (total_steps < 0) throw ConfigError("optim.total_steps must be non-negative");
    if (total_steps > 0 && (warmup_steps <= 0 || warmup_steps > total_steps)) {
        throw ConfigError("optim.warmup_steps must lie in (0, total_steps]");
    }
    if (batch_size < 1) throw ConfigError("optim.batch_size must be positive");
    if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("optim.grad_clip must be positive");
}

double lr_at_step(int step, const OptimizerConfig& cfg) {
    if (step < 0 || step > cfg.total_steps) {
        throw ConfigError("step " + std::to_string(step) + " outside [0, " + std::to_string(cfg.total_steps) + "]");
    }
    if (step < cfg.warmup_steps) {
        return cfg.base_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    }
    if (cfg.total_steps == cfg.warmup_steps) {
        return cfg.base_lr;
    }
    const double progress =
        static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(cfg.total_steps - cfg.warmup_steps);
    return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamState make_adam_state(const Parameters& params) {
    AdamState s;
    for (const auto& t : tensors(params)) {
        s.m.push_back(Vector::Zero(static_cast<Eigen::Index>(t.data.size())));
        s.v.push_back(Vector::Zero(static_cast<Eigen::Index>(t.data.size())));
    }
    return s;
}

void optimizer_step(Parameters& params, const Parameters& grads, AdamState& state, double lr,
                    const OptimizerConfig& cfg) {
    auto ps = tensors(params);
    const auto gs = tensors(grads);
    if (ps.size() != gs.size() || ps.size() != state.m.size()) {
        throw ShapeError("optimizer state does not match the parameter tree");
    }
    double clip_scale = 1.0;
    if (cfg.grad_clip) {
        double sq = 0.0;
        for (const auto& g : gs) {
            for (double x : g.data) sq += x * x;
        }
        const double norm = std::sqrt(sq);
        if (norm > *cfg.grad_clip) clip_scale = *cfg.grad_clip / norm;
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < ps.size(); ++k) {
        auto& p = ps[k];
        const auto& g = gs[k];
        if (p.data.size() != g.data.size() || static_cast<Eigen::Index>(p.data.size()) != state.m[k].size()) {
            throw ShapeError("gradient for " + p.name + " has the wrong size");
        }
        const double wd = p.decay ? cfg.weight_decay : 0.0;
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double gi = g.data[i] * clip_scale;
            m(ii) = cfg.beta1 * m(ii) + (1.0 - cfg.beta1) * gi;
            v(ii) = cfg.beta2 * v(ii) + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m(ii) / bc1;
            const double vhat = v(ii) / bc2;
            p.data[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + wd * p.data[i]);
        }
    }
}

// ---------------------------------------------------------------------------
// Batches

std::uint64_t Batch::fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& s : samples) {
        for (char c : s.raw.dataset_id) mix(static_cast<unsigned char>(c));
        mix(static_cast<std::uint64_t>(s.end));
        mix(static_cast<std::uint64_t>(s.raw.context_length()));
        mix(static_cast<std::uint64_t>(s.raw.horizon()));
    }
    return h;
}

TrainingSample prepare_sample(TimeSeriesSample raw, const ImageGeometry& geometry, const DataConfig& cfg,
                              ColorAssignment colors) {
    TrainingSample s;
    NormalizationStats stats = compute_stats(raw.context, cfg.r, cfg.eps);
    s.norm_context = normalize(raw.context, stats);
    s.norm_target = normalize(raw.target, stats);
    s.plan = make_plan(geometry, raw.context_length(), raw.horizon(), raw.period, std::move(colors), std::move(stats),
                       cfg.grayscale);
    s.raw = std::move(raw);
    return s;
}

Batch sample_batch(const DatasetArchive& archive, int batch_size, const ImageGeometry& geometry,
                   const DataConfig& cfg, std::mt19937_64& rng) {
    if (archive.empty()) {
        throw DataError("archive is empty");
    }
    if (batch_size < 1) {
        throw ConfigError("optim.batch_size must be positive");
    }
    if (cfg.horizon_multiples.empty() || cfg.lookback_ratios.empty()) {
        throw ConfigError("data.horizons and data.lookback_ratios must be non-empty");
    }
    const PixelBounds bounds = cfg.bounds();
    std::uniform_int_distribution<std::size_t> pick_dataset(0, archive.datasets.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_horizon(0, cfg.horizon_multiples.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_ratio(0, cfg.lookback_ratios.size() - 1);

    Batch batch;
    std::int64_t streak = 0;
    std::int64_t unusable = 0;
    const std::int64_t max_streak = 10LL * batch_size;
    while (static_cast<int>(batch.samples.size()) < batch_size) {
        const Dataset& ds = archive.datasets[pick_dataset(rng)];
        const int period = ds.period;
        const int horizon = cfg.horizon_multiples[pick_horizon(rng)] * period;
        const int ratio = cfg.lookback_ratios[pick_ratio(rng)];
        const int available = ds.train_end - horizon;
        const int context = std::min(ratio * horizon, available);
        if (context < period || ds.variates() > geometry.width) {
            if (++unusable > max_streak) {
                throw DataError("no dataset in the archive has enough training history for the sampled windows");
            }
            continue;
        }
        unusable = 0;
        std::uniform_int_distribution<int> pick_end(context + horizon, ds.train_end);
        const int end = pick_end(rng);
        TimeSeriesSample raw = split_window(ds.values, context, horizon, end);
        raw.frequency = ds.frequency;
        raw.period = period;
        raw.dataset_id = ds.name;
        ColorAssignment colors = assign_colors(ds.variates(), ColorMode::Random, rng);
        TrainingSample s = prepare_sample(std::move(raw), geometry, cfg, std::move(colors));
        s.end = end;
        ++batch.candidates;
        if (cfg.filter && !filter_sample(s.norm_context, s.norm_target, bounds)) {
            ++batch.rejected;
            if (++streak >= max_streak) {
                char msg[160];
                std::snprintf(msg, sizeof msg, "data quality: %lld consecutive windows rejected by the filter (reject rate %.3f)",
                              static_cast<long long>(streak), batch.reject_rate());
                throw DataError(msg);
            }
            continue;
        }
        streak = 0;
        batch.samples.push_back(std::move(s));
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Loss over a batch

QuantileLossReport batch_loss_and_grad(const Backbone& model, const std::vector<TrainingSample>& samples,
                                       Parameters* grads) {
    const ModelConfig& cfg = model.config();
    const ImageGeometry geometry = cfg.geometry();
    const PatchMask mask = PatchMask::right_half(cfg.patches_per_side());
    const QuantileSet quantiles(cfg.heads);

    std::vector<Image> inputs;
    inputs.reserve(samples.size());
    for (const auto& s : samples) {
        inputs.push_back(build_model_input(render_context(s.norm_context, s.plan), geometry).image);
    }
    std::vector<const Image*> ptrs;
    for (const auto& img : inputs) ptrs.push_back(&img);

    ForwardCache cache;
    const BatchOutput out = model.forward_batch(ptrs, mask, grads != nullptr ? &cache : nullptr);

    QuantileLossReport report;
    report.per_level.assign(static_cast<std::size_t>(cfg.heads), 0.0);
    std::vector<Matrix> grad_masked;
    if (grads != nullptr) {
        for (int i = 0; i < cfg.heads; ++i) {
            grad_masked.push_back(Matrix::Zero(out.masked[static_cast<std::size_t>(i)].rows(), cfg.patch_dim()));
        }
    }
    const double inv_batch = 1.0 / static_cast<double>(samples.size());
    const int n = cfg.patches_per_side();
    for (std::size_t b = 0; b < samples.size(); ++b) {
        const auto& s = samples[b];
        // Head predictions on the masked half, as images; visible pixels are
        // never read by extraction.
        std::vector<Matrix> preds;
        preds.reserve(out.masked.size());
        Matrix patches = Matrix::Zero(n * n, cfg.patch_dim());
        for (const auto& head : out.masked) {
            int j = 0;
            for (int t = 0; t < n * n; ++t) {
                if (mask.masked(t)) patches.row(t) = head.row(static_cast<Eigen::Index>(b) * out.n_masked + j++);
            }
            preds.push_back(extract_normalized(unpatchify(patches, cfg.patch, cfg.width), s.plan));
        }
        const QuantileLossReport r = quantile_loss(preds, s.norm_target, quantiles.levels());
        report.total += r.total * inv_batch;
        report.n_elements += r.n_elements;
        for (std::size_t i = 0; i < r.per_level.size(); ++i) report.per_level[i] += r.per_level[i] * inv_batch;
        if (grads == nullptr) continue;

        const std::vector<Matrix> dpred = quantile_loss_grad(preds, s.norm_target, quantiles.levels());
        for (std::size_t i = 0; i < dpred.size(); ++i) {
            const Matrix dimg = patchify(extract_normalized_adjoint(dpred[i] * inv_batch, s.plan), cfg.patch);
            int j = 0;
            for (int t = 0; t < n * n; ++t) {
                if (mask.masked(t)) {
                    grad_masked[i].row(static_cast<Eigen::Index>(b) * out.n_masked + j++) = dimg.row(t);
                }
            }
        }
    }
    if (grads != nullptr) {
        model.backward(cache, grad_masked, *grads);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const DatasetArchive& archive, const ModelConfig& model_cfg, const OptimizerConfig& opt_cfg,
                  const DataConfig& data_cfg, Parameters init, const TrainOptions& options) {
    model_cfg.validate();
    opt_cfg.validate();
    TrainResult result{std::move(init), {}};
    if (opt_cfg.total_steps == 0) {
        return result;
    }
    const ImageGeometry geometry = model_cfg.geometry();
    std::mt19937_64 rng(options.seed);
    AdamState state = make_adam_state(result.params);
    Parameters grads = Parameters::zeros_like(result.params);
    result.trace.reserve(static_cast<std::size_t>(opt_cfg.total_steps));

    for (int step = 0; step < opt_cfg.total_steps; ++step) {
        const Batch batch = sample_batch(archive, opt_cfg.batch_size, geometry, data_cfg, rng);
        for (auto& t : tensors(grads)) std::fill(t.data.begin(), t.data.end(), 0.0);
        const Backbone model(model_cfg, result.params);
        const QuantileLossReport report = batch_loss_and_grad(model, batch.samples, &grads);
        if (!std::isfinite(report.total)) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "non-finite loss at step %d (batch fingerprint %016llx)", step,
                          static_cast<unsigned long long>(batch.fingerprint()));
            throw NumericError(msg);
        }
        optimizer_step(result.params, grads, state, lr_at_step(step + 1, opt_cfg), opt_cfg);
        TraceRow row{step, report.total, report.per_level, batch.reject_rate()};
        if (options.on_log && options.log_every > 0 && (step % options.log_every == 0 || step + 1 == opt_cfg.total_steps)) {
            options.on_log(row);
        }
        result.trace.push_back(std::move(row));
    }
    return result;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace, const std::vector<double>& levels) {
    std::ostringstream out;
    out << "step,loss";
    char buf[64];
    for (double q : levels) {
        std::snprintf(buf, sizeof buf, ",l_%g", q);
        out << buf;
    }
    out << ",reject_rate\n";
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g", row.step, row.loss);
        out << buf;
        for (double l : row.per_level) {
            std::snprintf(buf, sizeof buf, ",%.17g", l);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", row.reject_rate);
        out << buf;
    }
    return out.str();
}

}  // namespace viforecast

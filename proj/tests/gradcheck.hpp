// Central finite-difference check of the full training loss (render, model,
// extraction, pinball) against the analytic backward pass.
#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "viforecast/training.hpp"

namespace gradcheck {

using namespace viforecast;

struct TensorResult {
    std::string name;
    double rel_error = 0.0;
    double grad_norm = 0.0;
};

inline ModelConfig tiny_config() {
    ModelConfig c;
    c.width = 16;
    c.patch = 8;
    c.enc_dim = 16;
    c.enc_depth = 1;
    c.enc_heads = 2;
    c.dec_dim = 16;
    c.dec_depth = 1;
    c.dec_heads = 2;
    c.heads = 3;
    c.seed = 5;
    return c;
}

// Two-variate windows with period 4; targets lie off the pinball kinks.
inline std::vector<TrainingSample> tiny_samples(const ImageGeometry& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    std::vector<TrainingSample> out;
    for (int b = 0; b < 2; ++b) {
        TimeSeriesSample raw;
        raw.context.resize(8, 2);
        raw.target.resize(6, 2);
        raw.period = 4;
        for (Eigen::Index i = 0; i < raw.context.size(); ++i) raw.context.data()[i] = n(rng);
        for (Eigen::Index i = 0; i < raw.target.size(); ++i) raw.target.data()[i] = n(rng);
        out.push_back(prepare_sample(std::move(raw), g, DataConfig{}, assign_colors(2, ColorMode::Cyclic)));
    }
    return out;
}

inline double loss_of(const ModelConfig& cfg, const Parameters& p, const std::vector<TrainingSample>& s) {
    Backbone model(cfg, p);
    return batch_loss_and_grad(model, s, nullptr).total;
}

// Moves every target at least `margin` away from every head prediction.
inline void avoid_kinks(const ModelConfig& cfg, const Parameters& p, std::vector<TrainingSample>& samples,
                        double margin) {
    Backbone model(cfg, p);
    const PatchMask mask = PatchMask::right_half(cfg.patches_per_side());
    for (auto& s : samples) {
        const Image input = build_model_input(render_context(s.norm_context, s.plan), cfg.geometry()).image;
        const Image* ptr = &input;
        const BatchOutput out = model.forward_batch(std::span<const Image* const>(&ptr, 1), mask);
        const auto images = model.compose(out, 0, input, mask);
        for (const auto& img : images) {
            const Matrix pred = extract_normalized(img, s.plan);
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
                if (std::abs(pred.data()[i] - s.norm_target.data()[i]) < margin) s.norm_target.data()[i] += 1e-2;
            }
        }
    }
}

inline std::vector<TensorResult> run(std::uint64_t seed, double step = 1e-4) {
    const ModelConfig cfg = tiny_config();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Parameters params = init_random(cfg);
    // Larger weights than the default init so every nonlinearity is exercised.
    for (auto& t : tensors(params)) {
        const bool gain = t.name.ends_with("norm1.weight") || t.name.ends_with("norm2.weight") ||
                          t.name.ends_with("norm.weight");
        for (double& v : t.data) v = gain ? 1.0 + 0.2 * n(rng) : 0.3 * n(rng);
    }
    std::vector<TrainingSample> samples = tiny_samples(cfg.geometry(), rng);
    avoid_kinks(cfg, params, samples, 1e-3);

    Parameters grads = Parameters::zeros_like(params);
    {
        Backbone model(cfg, params);
        batch_loss_and_grad(model, samples, &grads);
    }
    std::vector<TensorResult> results;
    auto ptensors = tensors(params);
    const auto gtensors = tensors(static_cast<const Parameters&>(grads));
    for (std::size_t k = 0; k < ptensors.size(); ++k) {
        double diff2 = 0, a2 = 0, f2 = 0;
        for (std::size_t i = 0; i < ptensors[k].data.size(); ++i) {
            double& w = ptensors[k].data[i];
            const double saved = w;
            w = saved + step;
            const double up = loss_of(cfg, params, samples);
            w = saved - step;
            const double down = loss_of(cfg, params, samples);
            w = saved;
            const double fd = (up - down) / (2 * step);
            const double an = gtensors[k].data[i];
            diff2 += (fd - an) * (fd - an);
            a2 += an * an;
            f2 += fd * fd;
        }
        const double scale = std::max({std::sqrt(a2), std::sqrt(f2), 1e-12});
        results.push_back({ptensors[k].name, std::sqrt(diff2) / scale, std::sqrt(a2)});
    }
    return results;
}

}  // namespace gradcheck

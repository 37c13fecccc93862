#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "viforecast/backbone.hpp"
#include "viforecast/converter.hpp"
#include "viforecast/dataset.hpp"
#include "viforecast/filtering.hpp"

namespace viforecast {

struct QuantileLossReport {
    double total = 0.0;
    std::vector<double> per_level;
    std::int64_t n_elements = 0;
};

/// Pinball loss averaged over elements, then over the h levels.
QuantileLossReport quantile_loss(const std::vector<Matrix>& preds, const Matrix& target,
                                 const std::vector<double>& levels);

/// d total / d pred_i for every head. Exact ties take the zero subgradient.
std::vector<Matrix> quantile_loss_grad(const std::vector<Matrix>& preds, const Matrix& target,
                                       const std::vector<double>& levels);

struct OptimizerConfig {
    double base_lr = 1e-4;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    int warmup_steps = 10000;
    int total_steps = 100000;
    int batch_size = 512;
    std::optional<double> grad_clip;

    void validate() const;
};

/// Linear warm-up then cosine decay to zero at total_steps.
double lr_at_step(int step, const OptimizerConfig& cfg);

/// Decoupled-weight-decay Adam state: one first/second moment per tensor.
struct AdamState {
    std::vector<Vector> m;
    std::vector<Vector> v;
    std::int64_t step = 0;
};

AdamState make_adam_state(const Parameters& params);

void optimizer_step(Parameters& params, const Parameters& grads, AdamState& state, double lr,
                    const OptimizerConfig& cfg);

/// Window sampling and preprocessing knobs.
struct DataConfig {
    std::vector<int> horizon_multiples{1, 2, 4};  // T = k * P
    std::vector<int> lookback_ratios{1, 2, 3, 4};  // L = lambda * T
    bool filter = true;
    bool grayscale = false;
    double r = 0.4;
    double eps = 1e-6;
    std::array<double, 3> pixel_mean{0.485, 0.456, 0.406};
    std::array<double, 3> pixel_std{0.229, 0.224, 0.225};

    PixelBounds bounds() const { return make_pixel_bounds(pixel_mean, pixel_std); }
};

/// A normalized, accepted window and its pixel plan.
struct TrainingSample {
    TimeSeriesSample raw;
    int end = 0;
    Matrix norm_context;
    Matrix norm_target;
    ColorImagePlan plan;
};

struct Batch {
    std::vector<TrainingSample> samples;
    std::int64_t candidates = 0;
    std::int64_t rejected = 0;

    double reject_rate() const { return candidates == 0 ? 0.0 : static_cast<double>(rejected) / candidates; }
    std::uint64_t fingerprint() const;
};

Batch sample_batch(const DatasetArchive& archive, int batch_size, const ImageGeometry& geometry,
                   const DataConfig& cfg, std::mt19937_64& rng);

/// Normalizes a window and builds its plan; shared by training and inference.
TrainingSample prepare_sample(TimeSeriesSample raw, const ImageGeometry& geometry, const DataConfig& cfg,
                              ColorAssignment colors);

/// Forward + loss + backward on one batch. Gradients are accumulated into
/// `grads` (which must be zero on entry for a plain gradient).
QuantileLossReport batch_loss_and_grad(const Backbone& model, const std::vector<TrainingSample>& samples,
                                       Parameters* grads);

struct TraceRow {
    int step = 0;
    double loss = 0.0;
    std::vector<double> per_level;
    double reject_rate = 0.0;
};

struct TrainResult {
    Parameters params;
    std::vector<TraceRow> trace;
};

struct TrainOptions {
    std::uint64_t seed = 0;
    int log_every = 100;
    std::function<void(const TraceRow&)> on_log;
};

TrainResult train(const DatasetArchive& archive, const ModelConfig& model_cfg, const OptimizerConfig& opt_cfg,
                  const DataConfig& data_cfg, Parameters init, const TrainOptions& options = {});

/// `step,loss,l_0.1,...,reject_rate`
std::string trace_to_csv(const std::vector<TraceRow>& trace, const std::vector<double>& levels);

}  // namespace viforecast

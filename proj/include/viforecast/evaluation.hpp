#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "viforecast/backbone.hpp"
#include "viforecast/core.hpp"
#include "viforecast/dataset.hpp"
#include "viforecast/training.hpp"

namespace viforecast {

struct PointErrors {
    double mse = 0.0;
    double mae = 0.0;
};

PointErrors mse_mae(const Matrix& forecast, const Matrix& target);

/// forecast[t] = context[L - m + (t mod m)].
Matrix seasonal_naive(const Matrix& context, int horizon, int season);

/// In-sample seasonal-naive MAE over t in [m, L), the MASE denominator.
double seasonal_scale(const Matrix& insample, int season);

double mase(const Matrix& forecast, const Matrix& target, const Matrix& insample, int season);

/// Mean weighted quantile loss: (1/h) sum_i 2 * sum |pinball_i| / sum |target|.
/// Falls back to the unnormalized pinball sum when the target is all zeros.
double crps_from_quantiles(const ForecastSet& forecasts, const Matrix& target);

/// Numerator and denominator of crps_from_quantiles, for pooling over windows.
struct CrpsParts {
    double weighted_pinball = 0.0;
    double abs_target = 0.0;
};
CrpsParts crps_parts(const ForecastSet& forecasts, const Matrix& target);

/// Geometric mean over datasets of model MAE / naive MAE.
double normalized_mae_aggregate(const std::map<std::string, double>& per_dataset_mae,
                                const std::map<std::string, double>& per_dataset_naive_mae);

/// Fraction of elements with target <= forecast, per head.
std::vector<double> coverage(const ForecastSet& forecasts, const Matrix& target);

struct MetricReport {
    double mse = 0.0;
    double mae = 0.0;
    double mase = 0.0;
    double crps = 0.0;
    std::vector<double> coverage;  // empty for single-head forecasts
    std::int64_t windows = 0;
};

/// Anything that turns a window into quantile forecasts. Implementations may
/// only look at sample.context; the target is there for plumbing tests.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual ForecastSet forecast(const TimeSeriesSample& sample) const = 0;
};

/// Zero-shot inference through the image pipeline with cyclic colors.
class ModelForecaster final : public Forecaster {
public:
    ModelForecaster(ModelConfig config, Parameters params, DataConfig data = {});
    ForecastSet forecast(const TimeSeriesSample& sample) const override;

    /// Same, also returning the model input and the per-head reconstructions.
    ForecastSet forecast(const TimeSeriesSample& sample, Image* input, std::vector<Image>* reconstructed) const;

    const ModelConfig& config() const { return config_; }

private:
    ModelConfig config_;
    Parameters params_;
    DataConfig data_;
};

/// Repeats the last season on every head.
class SeasonalNaiveForecaster final : public Forecaster {
public:
    explicit SeasonalNaiveForecaster(int heads = 1, std::optional<int> season = std::nullopt)
        : heads_(heads), season_(season) {}
    ForecastSet forecast(const TimeSeriesSample& sample) const override;

private:
    int heads_;
    std::optional<int> season_;
};

struct ProtocolEntry {
    std::string dataset;
    int context_length = 0;
    int horizon = 0;
    int stride = 0;
};

/// Rolling windows whose targets start at train_end, train_end + stride, ...
std::vector<TimeSeriesSample> rolling_windows(const Dataset& ds, const ProtocolEntry& entry);

struct DatasetReport {
    std::string dataset;
    MetricReport model;
    MetricReport naive;
};

struct EvaluationReport {
    std::vector<DatasetReport> datasets;  // sorted by name
    std::optional<double> normalized_mae;
    MetricReport mean_model;
};

/// Pooled metrics per protocol entry. MASE uses each window's context as the
/// in-sample series with season = dataset period; point metrics use the
/// median head.
EvaluationReport evaluate(const Forecaster& model, const DatasetArchive& archive,
                          const std::vector<ProtocolEntry>& protocol);

std::string report_to_json(const EvaluationReport& report, int indent = 2);

}  // namespace viforecast

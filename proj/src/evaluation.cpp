#include "viforecast/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <nlohmann/json.hpp>
#include <thread>

namespace viforecast {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " differ");
    }
}

void check_forecast_shape(const ForecastSet& f, const Matrix& target) {
    for (const auto& head : f.per_head) check_same_shape(head, target, "forecast");
}

}  // namespace

PointErrors mse_mae(const Matrix& forecast, const Matrix& target) {
    check_same_shape(forecast, target, "mse_mae");
    if (target.size() == 0) return {};
    const auto e = (forecast - target).array();
    return {e.square().mean(), e.abs().mean()};
}

Matrix seasonal_naive(const Matrix& context, int horizon, int season) {
    const auto len = static_cast<int>(context.rows());
    if (season < 1 || len < season) {
        throw DataError("seasonal naive needs a context of at least one season (L=" + std::to_string(len) +
                        ", m=" + std::to_string(season) + ")");
    }
    Matrix out(horizon, context.cols());
    for (int t = 0; t < horizon; ++t) {
        out.row(t) = context.row(len - season + (t % season));
    }
    return out;
}

double seasonal_scale(const Matrix& insample, int season) {
    const auto len = static_cast<int>(insample.rows());
    if (season < 1 || len <= season) {
        throw DataError("MASE needs more than one season of in-sample data");
    }
    const double scale =
        (insample.bottomRows(len - season) - insample.topRows(len - season)).array().abs().mean();
    if (!(scale > 0.0)) {
        throw DataError("MASE undefined: constant seasonal in-sample");
    }
    return scale;
}

double mase(const Matrix& forecast, const Matrix& target, const Matrix& insample, int season) {
    check_same_shape(forecast, target, "mase");
    if (insample.cols() != target.cols()) {
        throw ShapeError("mase: in-sample variates differ from target");
    }
    const double scale = seasonal_scale(insample, season);
    return (forecast - target).array().abs().mean() / scale;
}

CrpsParts crps_parts(const ForecastSet& forecasts, const Matrix& target) {
    check_forecast_shape(forecasts, target);
    CrpsParts parts;
    const int h = forecasts.quantiles.size();
    for (int i = 0; i < h; ++i) {
        const double q = forecasts.quantiles[i];
        const auto e = (target - forecasts.per_head[static_cast<std::size_t>(i)]).array();
        parts.weighted_pinball += 2.0 * (q * e).max((q - 1.0) * e).sum() / h;
    }
    parts.abs_target = target.array().abs().sum();
    return parts;
}

double crps_from_quantiles(const ForecastSet& forecasts, const Matrix& target) {
    const CrpsParts p = crps_parts(forecasts, target);
    return p.abs_target > 0.0 ? p.weighted_pinball / p.abs_target : p.weighted_pinball;
}

double normalized_mae_aggregate(const std::map<std::string, double>& mae, const std::map<std::string, double>& naive) {
    if (mae.size() != naive.size()) {
        throw DataError("model and naive MAE cover different datasets");
    }
    if (mae.empty()) {
        throw DataError("normalized MAE over zero datasets");
    }
    double log_sum = 0.0;
    for (const auto& [name, value] : mae) {
        auto it = naive.find(name);
        if (it == naive.end()) {
            throw DataError("no naive MAE for dataset " + name);
        }
        if (!(it->second > 0.0)) {
            throw DataError("naive MAE for dataset " + name + " is not positive");
        }
        log_sum += std::log(value / it->second);
    }
    return std::exp(log_sum / static_cast<double>(mae.size()));
}

std::vector<double> coverage(const ForecastSet& forecasts, const Matrix& target) {
    check_forecast_shape(forecasts, target);
    std::vector<double> out;
    for (const auto& head : forecasts.per_head) {
        const auto covered = (target.array() <= head.array()).count();
        out.push_back(target.size() == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(target.size()));
    }
    return out;
}

// ---------------------------------------------------------------------------

ModelForecaster::ModelForecaster(ModelConfig config, Parameters params, DataConfig data)
    : config_(std::move(config)), params_(std::move(params)), data_(std::move(data)) {
    config_.validate();
}

ForecastSet ModelForecaster::forecast(const TimeSeriesSample& sample) const {
    return forecast(sample, nullptr, nullptr);
}

ForecastSet ModelForecaster::forecast(const TimeSeriesSample& sample, Image* input,
                                      std::vector<Image>* reconstructed) const {
    const ImageGeometry geometry = config_.geometry();
    TimeSeriesSample window;
    window.context = sample.context;
    window.target = Matrix::Zero(sample.horizon(), sample.variates());
    window.period = sample.period;
    window.frequency = sample.frequency;
    window.dataset_id = sample.dataset_id;
    const TrainingSample prepared =
        prepare_sample(std::move(window), geometry, data_, assign_colors(sample.variates(), ColorMode::Cyclic));
    const ModelInput in = build_model_input(render_context(prepared.norm_context, prepared.plan), geometry);
    std::vector<Image> images = viforecast::forward(in.image, in.mask, params_, config_);
    ForecastSet out = extract_forecasts(images, prepared.plan, sample.horizon());
    if (input != nullptr) *input = in.image;
    if (reconstructed != nullptr) *reconstructed = std::move(images);
    return out;
}

ForecastSet SeasonalNaiveForecaster::forecast(const TimeSeriesSample& sample) const {
    const Matrix f = seasonal_naive(sample.context, sample.horizon(), season_.value_or(sample.period));
    return ForecastSet(std::vector<Matrix>(static_cast<std::size_t>(heads_), f), QuantileSet(heads_));
}

std::vector<TimeSeriesSample> rolling_windows(const Dataset& ds, const ProtocolEntry& entry) {
    if (entry.context_length < 1 || entry.horizon < 1 || entry.stride < 1) {
        throw ConfigError("protocol entry for " + ds.name + " needs positive context, horizon and stride");
    }
    std::vector<TimeSeriesSample> windows;
    for (int start = ds.train_end; start + entry.horizon <= ds.length(); start += entry.stride) {
        if (start - entry.context_length < 0) continue;
        TimeSeriesSample s = split_window(ds.values, entry.context_length, entry.horizon, start + entry.horizon);
        s.frequency = ds.frequency;
        s.period = ds.period;
        s.dataset_id = ds.name;
        windows.push_back(std::move(s));
    }
    return windows;
}

namespace {

struct Accumulator {
    double sq = 0.0;
    double abs = 0.0;
    double mase_sum = 0.0;
    CrpsParts crps;
    std::vector<double> covered;
    std::int64_t elements = 0;
    std::int64_t windows = 0;

    void add(const ForecastSet& f, const TimeSeriesSample& s) {
        const Matrix& point = f.point();
        const auto e = (point - s.target).array();
        sq += e.square().sum();
        abs += e.abs().sum();
        mase_sum += mase(point, s.target, s.context, s.period);
        const CrpsParts p = crps_parts(f, s.target);
        crps.weighted_pinball += p.weighted_pinball;
        crps.abs_target += p.abs_target;
        // A lone median head has no interval to calibrate.
        if (f.per_head.size() > 1) {
            const auto cov = coverage(f, s.target);
            covered.resize(cov.size(), 0.0);
            for (std::size_t i = 0; i < cov.size(); ++i) covered[i] += cov[i] * static_cast<double>(s.target.size());
        }
        elements += s.target.size();
        windows += 1;
    }

    MetricReport report() const {
        MetricReport r;
        r.windows = windows;
        if (windows == 0) return r;
        const auto n = static_cast<double>(elements);
        r.mse = sq / n;
        r.mae = abs / n;
        r.mase = mase_sum / static_cast<double>(windows);
        r.crps = crps.abs_target > 0.0 ? crps.weighted_pinball / crps.abs_target : crps.weighted_pinball;
        for (double c : covered) r.coverage.push_back(c / n);
        return r;
    }
};

}  // namespace

EvaluationReport evaluate(const Forecaster& model, const DatasetArchive& archive,
                          const std::vector<ProtocolEntry>& protocol) {
    std::map<std::string, std::vector<ProtocolEntry>> by_dataset;
    for (const auto& entry : protocol) {
        archive.find(entry.dataset);  // throws for unknown datasets
        by_dataset[entry.dataset].push_back(entry);
    }
    std::vector<std::string> names;
    for (const auto& [name, entries] : by_dataset) names.push_back(name);

    EvaluationReport report;
    report.datasets.resize(names.size());
    std::vector<std::exception_ptr> errors(names.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < names.size(); k = next++) {
            try {
                const Dataset& ds = archive.find(names[k]);
                Accumulator acc_model;
                Accumulator acc_naive;
                const SeasonalNaiveForecaster naive(1, ds.period);
                for (const auto& entry : by_dataset.at(names[k])) {
                    for (const auto& window : rolling_windows(ds, entry)) {
                        acc_model.add(model.forecast(window), window);
                        acc_naive.add(naive.forecast(window), window);
                    }
                }
                report.datasets[k] = {names[k], acc_model.report(), acc_naive.report()};
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t workers =
        std::min<std::size_t>(names.size(), std::max(1u, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::map<std::string, double> mae;
    std::map<std::string, double> naive_mae;
    bool naive_ok = true;
    for (const auto& d : report.datasets) {
        if (d.model.windows == 0) continue;
        mae[d.dataset] = d.model.mae;
        naive_mae[d.dataset] = d.naive.mae;
        naive_ok = naive_ok && d.naive.mae > 0.0;
        report.mean_model.mse += d.model.mse;
        report.mean_model.mae += d.model.mae;
        report.mean_model.mase += d.model.mase;
        report.mean_model.crps += d.model.crps;
        report.mean_model.windows += d.model.windows;
        report.mean_model.coverage.resize(d.model.coverage.size(), 0.0);
        for (std::size_t i = 0; i < d.model.coverage.size(); ++i) report.mean_model.coverage[i] += d.model.coverage[i];
    }
    if (!mae.empty()) {
        const auto n = static_cast<double>(mae.size());
        report.mean_model.mse /= n;
        report.mean_model.mae /= n;
        report.mean_model.mase /= n;
        report.mean_model.crps /= n;
        for (auto& c : report.mean_model.coverage) c /= n;
        if (naive_ok) report.normalized_mae = normalized_mae_aggregate(mae, naive_mae);
    }
    return report;
}

namespace {

nlohmann::json metrics_json(const MetricReport& m) {
    return {{"mse", m.mse}, {"mae", m.mae}, {"mase", m.mase}, {"crps", m.crps},
            {"coverage", m.coverage.empty() ? nlohmann::json(nullptr) : nlohmann::json(m.coverage)},
            {"windows", m.windows}};
}

}  // namespace

std::string report_to_json(const EvaluationReport& report, int indent) {
    nlohmann::json j;
    j["datasets"] = nlohmann::json::object();
    for (const auto& d : report.datasets) {
        auto block = metrics_json(d.model);
        block["seasonal_naive"] = metrics_json(d.naive);
        j["datasets"][d.dataset] = block;
    }
    nlohmann::json agg = metrics_json(report.mean_model);
    agg["normalized_mae"] = report.normalized_mae ? nlohmann::json(*report.normalized_mae) : nlohmann::json(nullptr);
    j["aggregate"] = agg;
    return j.dump(indent);
}

}  // namespace viforecast

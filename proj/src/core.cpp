#include "viforecast/core.hpp"

#include <cmath>
#include <map>

namespace viforecast {

ImageGeometry::ImageGeometry(int width_, int patch_) : width(width_), patch(patch_) {
    if (width <= 0 || patch <= 0 || width % patch != 0) {
        throw ConfigError("image width " + std::to_string(width) +
                          " is not a positive multiple of patch size " + std::to_string(patch));
    }
    if ((width / patch) % 2 != 0) {
        throw ConfigError("patches per side must be even, got " + std::to_string(width / patch));
    }
}

int legacy_visible_cols(int patches_per_side, int context_length, int horizon) {
    const long num = static_cast<long>(patches_per_side) * context_length;
    return static_cast<int>(num / (context_length + horizon));
}

QuantileSet::QuantileSet(int h) {
    if (h < 1) {
        throw ConfigError("number of quantile heads must be positive, got " + std::to_string(h));
    }
    levels_.reserve(static_cast<std::size_t>(h));
    for (int i = 1; i <= h; ++i) {
        levels_.push_back(static_cast<double>(i) / static_cast<double>(h + 1));
    }
}

ForecastSet::ForecastSet(std::vector<Matrix> heads, QuantileSet levels)
    : per_head(std::move(heads)), quantiles(std::move(levels)) {
    if (static_cast<int>(per_head.size()) != quantiles.size()) {
        throw ShapeError("forecast set has " + std::to_string(per_head.size()) +
                         " heads but " + std::to_string(quantiles.size()) + " levels");
    }
    for (const auto& m : per_head) {
        if (m.rows() != per_head.front().rows() || m.cols() != per_head.front().cols()) {
            throw ShapeError("forecast heads disagree in shape");
        }
    }
}

const Matrix& ForecastSet::point() const {
    return per_head.at(static_cast<std::size_t>(quantiles.median_index()));
}

int ForecastSet::horizon() const {
    return per_head.empty() ? 0 : static_cast<int>(per_head.front().rows());
}

int ForecastSet::variates() const {
    return per_head.empty() ? 0 : static_cast<int>(per_head.front().cols());
}

std::optional<int> lookup_period(const std::string& frequency) {
    static const std::map<std::string, int> table = {
        {"H", 24}, {"30min", 48}, {"15min", 96}, {"D", 7},
        {"W", 52}, {"M", 12},     {"Q", 4},      {"Y", 1},
    };
    if (auto it = table.find(frequency); it != table.end()) {
        return it->second;
    }
    return std::nullopt;
}

int autocorrelation_period(const Matrix& series) {
    const Eigen::Index n = series.rows();
    if (n < 4 || series.cols() == 0) {
        return 1;
    }
    const Vector x = series.rowwise().mean();
    const double mean = x.mean();
    const Vector centered = x.array() - mean;
    const double denom = centered.squaredNorm();
    if (denom <= 0.0) {
        return 1;
    }
    auto acf = [&](Eigen::Index lag) {
        if (lag >= n) return 0.0;
        return centered.head(n - lag).dot(centered.tail(n - lag)) / denom;
    };
    // Highest local peak; smooth series always correlate strongly at tiny
    // lags, so a plain argmax would pick lag 2.
    int best_lag = 1;
    double best = 0.1;
    double prev = acf(1);
    double cur = acf(2);
    for (Eigen::Index lag = 2; lag <= n / 2; ++lag) {
        const double next = acf(lag + 1);
        if (cur > prev && cur >= next && cur > best) {
            best = cur;
            best_lag = static_cast<int>(lag);
        }
        prev = cur;
        cur = next;
    }
    return best_lag;
}

int infer_periodicity(const std::string& frequency, const Matrix* series) {
    if (auto p = lookup_period(frequency)) {
        return *p;
    }
    if (series == nullptr) {
        throw DataError("cannot infer period for frequency '" + frequency + "'");
    }
    return autocorrelation_period(*series);
}

TimeSeriesSample split_window(const Matrix& series, int context_length, int horizon, int end) {
    if (context_length < 1 || horizon < 1) {
        throw DataError("window lengths must be positive");
    }
    if (end < context_length + horizon || end > series.rows()) {
        throw DataError("window end " + std::to_string(end) + " invalid for L=" +
                        std::to_string(context_length) + ", T=" + std::to_string(horizon) +
                        ", series length " + std::to_string(series.rows()));
    }
    TimeSeriesSample s;
    s.context = series.middleRows(end - horizon - context_length, context_length);
    s.target = series.middleRows(end - horizon, horizon);
    return s;
}

}  // namespace viforecast

// Brute-force reference implementations used only by tests. Each one is
// written directly from the defining formula and shares no code with the
// library path it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "viforecast/core.hpp"

namespace oracle {

using viforecast::Matrix;

// Per-pixel bilinear sample with half-pixel centres and edge clamping.
inline Matrix resize(const Matrix& src, int out_h, int out_w) {
    const int h = static_cast<int>(src.rows());
    const int w = static_cast<int>(src.cols());
    Matrix out(out_h, out_w);
    for (int i = 0; i < out_h; ++i) {
        for (int j = 0; j < out_w; ++j) {
            double sy = (i + 0.5) * (static_cast<double>(h) / out_h) - 0.5;
            double sx = (j + 0.5) * (static_cast<double>(w) / out_w) - 0.5;
            sy = std::min(std::max(sy, 0.0), h - 1.0);
            sx = std::min(std::max(sx, 0.0), w - 1.0);
            const int y0 = static_cast<int>(sy);
            const int x0 = static_cast<int>(sx);
            const int y1 = std::min(y0 + 1, h - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const double fy = sy - y0;
            const double fx = sx - x0;
            out(i, j) = (1 - fy) * ((1 - fx) * src(y0, x0) + fx * src(y0, x1)) +
                        fy * ((1 - fx) * src(y1, x0) + fx * src(y1, x1));
        }
    }
    return out;
}

inline double pinball(double q, double target, double pred) {
    const double e = target - pred;
    return e >= 0 ? q * e : (q - 1) * e;
}

// Mean over elements then over levels, with explicit loops.
inline double quantile_loss(const std::vector<Matrix>& preds, const Matrix& target, const std::vector<double>& levels) {
    double total = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        double s = 0;
        for (Eigen::Index r = 0; r < target.rows(); ++r)
            for (Eigen::Index c = 0; c < target.cols(); ++c) s += pinball(levels[i], target(r, c), preds[i](r, c));
        total += s / static_cast<double>(target.size());
    }
    return total / static_cast<double>(levels.size());
}

// Biased sample autocorrelation of the variate mean, every lag evaluated,
// highest local peak wins.
inline int acf_period(const Matrix& series) {
    const auto n = series.rows();
    std::vector<double> x(static_cast<std::size_t>(n));
    double mean = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        double s = 0;
        for (Eigen::Index v = 0; v < series.cols(); ++v) s += series(t, v);
        x[static_cast<std::size_t>(t)] = s / static_cast<double>(series.cols());
        mean += x[static_cast<std::size_t>(t)];
    }
    mean /= static_cast<double>(n);
    double var = 0;
    for (double xi : x) var += (xi - mean) * (xi - mean);
    std::vector<double> acf(static_cast<std::size_t>(n + 1), 0.0);
    for (Eigen::Index lag = 1; lag < n; ++lag) {
        double s = 0;
        for (Eigen::Index t = 0; t + lag < n; ++t)
            s += (x[static_cast<std::size_t>(t)] - mean) * (x[static_cast<std::size_t>(t + lag)] - mean);
        acf[static_cast<std::size_t>(lag)] = s / var;
    }
    int best = 1;
    double best_acf = 0.1;
    for (Eigen::Index lag = 2; lag <= n / 2; ++lag) {
        const auto k = static_cast<std::size_t>(lag);
        const bool peak = acf[k] > acf[k - 1] && acf[k] >= acf[k + 1];
        if (peak && acf[k] > best_acf) {
            best_acf = acf[k];
            best = static_cast<int>(lag);
        }
    }
    return best;
}

inline double mse(const Matrix& f, const Matrix& y) {
    double s = 0;
    for (Eigen::Index r = 0; r < y.rows(); ++r)
        for (Eigen::Index c = 0; c < y.cols(); ++c) s += (f(r, c) - y(r, c)) * (f(r, c) - y(r, c));
    return s / static_cast<double>(y.size());
}

inline double mae(const Matrix& f, const Matrix& y) {
    double s = 0;
    for (Eigen::Index r = 0; r < y.rows(); ++r)
        for (Eigen::Index c = 0; c < y.cols(); ++c) s += std::abs(f(r, c) - y(r, c));
    return s / static_cast<double>(y.size());
}

inline double mase(const Matrix& f, const Matrix& y, const Matrix& insample, int m) {
    double denom = 0;
    int count = 0;
    for (Eigen::Index t = m; t < insample.rows(); ++t)
        for (Eigen::Index c = 0; c < insample.cols(); ++c) {
            denom += std::abs(insample(t, c) - insample(t - m, c));
            ++count;
        }
    return mae(f, y) / (denom / count);
}

inline double crps(const std::vector<Matrix>& heads, const std::vector<double>& levels, const Matrix& y) {
    double num = 0;
    double den = 0;
    for (Eigen::Index r = 0; r < y.rows(); ++r)
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            den += std::abs(y(r, c));
            for (std::size_t i = 0; i < heads.size(); ++i)
                num += 2 * pinball(levels[i], y(r, c), heads[i](r, c)) / static_cast<double>(heads.size());
        }
    return den > 0 ? num / den : num;
}

inline double geometric_mean_ratio(const std::vector<double>& model, const std::vector<double>& naive) {
    double prod_log = 0;
    for (std::size_t i = 0; i < model.size(); ++i) prod_log += std::log(model[i] / naive[i]);
    return std::exp(prod_log / static_cast<double>(model.size()));
}

}  // namespace oracle

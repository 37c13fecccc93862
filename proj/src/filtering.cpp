#include "viforecast/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace viforecast {

NormalizationStats compute_stats(const Matrix& context, double r, double eps) {
    if (context.rows() < 1) {
        throw DataError("cannot normalize an empty context");
    }
    if (!(r > 0.0 && r <= 1.0)) {
        throw ConfigError("norm.r must lie in (0, 1], got " + std::to_string(r));
    }
    if (!(eps > 0.0)) {
        throw ConfigError("norm.eps must be positive");
    }
    NormalizationStats stats;
    stats.r = r;
    stats.eps = eps;
    stats.mean = context.colwise().mean().transpose();
    stats.std.resize(context.cols());
    for (Eigen::Index v = 0; v < context.cols(); ++v) {
        const double var = (context.col(v).array() - stats.mean(v)).square().mean();
        stats.std(v) = std::max(std::sqrt(var), eps);
    }
    return stats;
}

namespace {

void check_columns(const Matrix& values, const NormalizationStats& stats) {
    if (values.cols() != stats.mean.size() || values.cols() != stats.std.size()) {
        throw ShapeError("matrix has " + std::to_string(values.cols()) + " columns but stats cover " +
                         std::to_string(stats.mean.size()) + " variates");
    }
}

}  // namespace

Matrix normalize(const Matrix& values, const NormalizationStats& stats) {
    check_columns(values, stats);
    Matrix out(values.rows(), values.cols());
    for (Eigen::Index v = 0; v < values.cols(); ++v) {
        out.col(v) = stats.r * (values.col(v).array() - stats.mean(v)) / stats.std(v);
    }
    return out;
}

Matrix denormalize(const Matrix& values, const NormalizationStats& stats) {
    check_columns(values, stats);
    Matrix out(values.rows(), values.cols());
    for (Eigen::Index v = 0; v < values.cols(); ++v) {
        out.col(v) = values.col(v).array() / stats.r * stats.std(v) + stats.mean(v);
    }
    return out;
}

PixelBounds make_pixel_bounds(const std::array<double, 3>& channel_mean,
                              const std::array<double, 3>& channel_std) {
    PixelBounds b;
    b.channel_mean = channel_mean;
    b.channel_std = channel_std;
    b.lo = -std::numeric_limits<double>::infinity();
    b.hi = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < 3; ++c) {
        if (!(channel_std[c] > 0.0)) {
            throw ConfigError("pixel.std must be positive in every channel");
        }
        b.lo = std::max(b.lo, (0.0 - channel_mean[c]) / channel_std[c]);
        b.hi = std::min(b.hi, (1.0 - channel_mean[c]) / channel_std[c]);
    }
    if (!(b.lo < b.hi)) {
        throw ConfigError("pixel constants leave an empty valid range");
    }
    return b;
}

bool filter_sample(const Matrix& norm_context, const Matrix& norm_target, const PixelBounds& bounds) {
    auto inside = [&](const Matrix& m) {
        return m.size() == 0 || (m.allFinite() && m.minCoeff() >= bounds.lo && m.maxCoeff() <= bounds.hi);
    };
    return inside(norm_context) && inside(norm_target);
}

}  // namespace viforecast

#pragma once

#include <array>

#include "viforecast/core.hpp"

namespace viforecast {

/// Per-variate context statistics plus the modality scale r.
struct NormalizationStats {
    Vector mean;
    Vector std;
    double r = 0.4;
    double eps = 1e-6;

    int variates() const { return static_cast<int>(mean.size()); }
};

/// Range of valid normalized pixel values, intersected over the three
/// channels so that it does not depend on which channel a variate lands on.
struct PixelBounds {
    std::array<double, 3> channel_mean{};
    std::array<double, 3> channel_std{};
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
};

inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

NormalizationStats compute_stats(const Matrix& context, double r = 0.4, double eps = 1e-6);

/// r * (x - mean) / std, columnwise.
Matrix normalize(const Matrix& values, const NormalizationStats& stats);

/// Exact inverse of normalize.
Matrix denormalize(const Matrix& values, const NormalizationStats& stats);

PixelBounds make_pixel_bounds(const std::array<double, 3>& channel_mean,
                              const std::array<double, 3>& channel_std);

/// True iff every element of both matrices lies in [lo, hi].
bool filter_sample(const Matrix& norm_context, const Matrix& norm_target, const PixelBounds& bounds);

}  // namespace viforecast

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "viforecast/error.hpp"

namespace viforecast {

/// Row-major dense matrix; rows are time steps, columns are variates.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// A (context, target) window pair. The target starts at the step after the
/// context ends.
struct TimeSeriesSample {
    Matrix context;  // L x M, raw units
    Matrix target;   // T x M, raw units
    std::string frequency;
    int period = 1;
    std::string dataset_id;

    int context_length() const { return static_cast<int>(context.rows()); }
    int horizon() const { return static_cast<int>(target.rows()); }
    int variates() const { return static_cast<int>(context.cols()); }
};

/// Pixel geometry of the square model input: W x W pixels split into N x N
/// patches of side S. The left N/2 patch columns are visible.
struct ImageGeometry {
    int width = 0;
    int patch = 0;

    ImageGeometry() = default;
    ImageGeometry(int width, int patch);

    int patches_per_side() const { return width / patch; }
    int visible_cols() const { return patches_per_side() / 2; }
    int half_width() const { return width / 2; }
};

/// Visible patch columns under the older alignment rule
/// n = floor(N * L / (L + T)). Kept for reference only; the converter always
/// splits the image in half.
int legacy_visible_cols(int patches_per_side, int context_length, int horizon);

/// Evenly spaced quantile levels i / (h + 1), i = 1..h.
class QuantileSet {
public:
    explicit QuantileSet(int h);

    int size() const { return static_cast<int>(levels_.size()); }
    const std::vector<double>& levels() const { return levels_; }
    double operator[](int i) const { return levels_[static_cast<std::size_t>(i)]; }
    /// Head whose level is 0.5; for even h the lower of the two central heads.
    int median_index() const { return (size() - 1) / 2; }
    bool has_exact_median() const { return size() % 2 == 1; }

private:
    std::vector<double> levels_;
};

/// h aligned forecasts of shape (T, M).
struct ForecastSet {
    std::vector<Matrix> per_head;
    QuantileSet quantiles{1};

    ForecastSet() = default;
    ForecastSet(std::vector<Matrix> heads, QuantileSet levels);

    const Matrix& point() const;
    int horizon() const;
    int variates() const;
};

/// Seasonal period from a frequency token, falling back to the
/// autocorrelation peak of the variate-mean series when the token is unknown.
int infer_periodicity(const std::string& frequency, const Matrix* series = nullptr);

/// Known frequency tokens; nullopt for anything else.
std::optional<int> lookup_period(const std::string& frequency);

/// Lag in [2, len/2] at the highest local peak of the autocorrelation of the
/// variate mean, or 1 when no peak exceeds 0.1. Ties go to the smaller lag.
int autocorrelation_period(const Matrix& series);

/// Context rows [end-T-L, end-T), target rows [end-T, end).
TimeSeriesSample split_window(const Matrix& series, int context_length, int horizon, int end);

}  // namespace viforecast

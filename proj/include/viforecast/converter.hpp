#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "viforecast/core.hpp"
#include "viforecast/filtering.hpp"
#include "viforecast/image.hpp"

namespace viforecast {

enum class ColorMode { Random, Cyclic };

ColorMode parse_color_mode(const std::string& token);
std::string to_string(ColorMode mode);

/// RGB channel index per variate; neighbouring variates never share one.
struct ColorAssignment {
    std::vector<int> channels;
    ColorMode mode = ColorMode::Cyclic;
};

ColorAssignment assign_colors(int variates, ColorMode mode, std::optional<std::uint64_t> seed = std::nullopt);
ColorAssignment assign_colors(int variates, ColorMode mode, std::mt19937_64& rng);

/// Pixel-space bookkeeping for one sample: where each variate lives in the
/// image and how to map it back.
struct ColorImagePlan {
    ImageGeometry geometry;
    int variates = 0;
    int period = 0;
    int context_length = 0;
    int horizon = 0;
    int context_cols = 0;  // floor(L / P)
    int target_cols = 0;   // ceil(T / P)
    int sub_h = 0;         // floor(W / M)
    int pad_rows = 0;      // W - sub_h * M
    ColorAssignment colors;
    NormalizationStats stats;
    // Replicate each variate over all three channels and average on the way back.
    bool grayscale = false;

    int row_begin(int variate) const { return variate * sub_h; }
};

/// Receives converter warnings (thin subfigures). Defaults to stderr.
void set_warning_handler(std::function<void(const std::string&)> handler);

ColorImagePlan make_plan(const ImageGeometry& geometry, int context_length, int horizon, int period,
                         ColorAssignment colors, NormalizationStats stats, bool grayscale = false);

/// Keep the most recent floor(L/P)*P points and stack them one period per column.
Matrix fold_by_period(const Vector& series, int period);

/// Concatenate columns and keep the first `length` values.
Vector unfold_by_period(const Matrix& folded, int length);

/// out x in bilinear weights, half-pixel centres, edge clamped.
Matrix interpolation_matrix(int in_size, int out_size);

Matrix bilinear_resize(const Matrix& m, int out_h, int out_w);

/// Left (visible) half of the model input, W x W/2 x 3.
Image render_context(const Matrix& norm_context, const ColorImagePlan& plan);

struct ModelInput {
    Image image;
    PatchMask mask;
};

ModelInput build_model_input(const Image& left_image, const ImageGeometry& geometry);

/// Image -> normalized (T x M) series read from the right half.
Matrix extract_normalized(const Image& reconstructed, const ColorImagePlan& plan);

/// Adjoint of extract_normalized: spreads a (T x M) gradient back onto a
/// W x W x 3 image gradient. Non-zero only on the assigned channel of the
/// right half.
Image extract_normalized_adjoint(const Matrix& grad, const ColorImagePlan& plan);

/// Per-head extraction followed by de-normalization to raw units.
ForecastSet extract_forecasts(const std::vector<Image>& reconstructed, const ColorImagePlan& plan,
                              int horizon);

}  // namespace viforecast

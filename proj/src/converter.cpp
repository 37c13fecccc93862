#include "viforecast/converter.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>

namespace viforecast {

namespace {

std::function<void(const std::string&)>& warning_handler() {
    static std::function<void(const std::string&)> handler = [](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}

void warn(const std::string& msg) {
    std::lock_guard lock(warning_mutex());
    if (warning_handler()) {
        warning_handler()(msg);
    }
}

}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
    std::lock_guard lock(warning_mutex());
    warning_handler() = std::move(handler);
}

ColorMode parse_color_mode(const std::string& token) {
    if (token == "random") return ColorMode::Random;
    if (token == "cyclic") return ColorMode::Cyclic;
    throw ConfigError("unknown color mode '" + token + "'");
}

std::string to_string(ColorMode mode) {
    return mode == ColorMode::Random ? "random" : "cyclic";
}

ColorAssignment assign_colors(int variates, ColorMode mode, std::mt19937_64& rng) {
    if (variates < 1) {
        throw DataError("color assignment needs at least one variate");
    }
    ColorAssignment a;
    a.mode = mode;
    a.channels.resize(static_cast<std::size_t>(variates));
    if (mode == ColorMode::Cyclic) {
        for (int v = 0; v < variates; ++v) {
            a.channels[static_cast<std::size_t>(v)] = v % 3;
        }
        return a;
    }
    std::uniform_int_distribution<int> pick(0, 2);
    for (std::size_t v = 0; v < a.channels.size(); ++v) {
        int c = pick(rng);
        while (v > 0 && c == a.channels[v - 1]) {
            c = pick(rng);
        }
        a.channels[v] = c;
    }
    return a;
}

ColorAssignment assign_colors(int variates, ColorMode mode, std::optional<std::uint64_t> seed) {
    std::mt19937_64 rng(seed.value_or(0));
    return assign_colors(variates, mode, rng);
}

ColorImagePlan make_plan(const ImageGeometry& geometry, int context_length, int horizon, int period,
                         ColorAssignment colors, NormalizationStats stats, bool grayscale) {
    const int variates = static_cast<int>(colors.channels.size());
    if (period < 1) {
        throw DataError("period must be positive");
    }
    if (context_length < period) {
        throw DataError("context length " + std::to_string(context_length) +
                        " shorter than period " + std::to_string(period));
    }
    if (horizon < 1) {
        throw DataError("horizon must be positive");
    }
    if (variates < 1 || variates > geometry.width) {
        throw DataError("variate count " + std::to_string(variates) + " must lie in [1, " +
                        std::to_string(geometry.width) + "]");
    }
    if (stats.variates() != variates) {
        throw ShapeError("normalization stats cover " + std::to_string(stats.variates()) +
                         " variates, colors cover " + std::to_string(variates));
    }
    ColorImagePlan plan;
    plan.geometry = geometry;
    plan.variates = variates;
    plan.period = period;
    plan.context_length = context_length;
    plan.horizon = horizon;
    plan.context_cols = context_length / period;
    plan.target_cols = (horizon + period - 1) / period;
    plan.sub_h = geometry.width / variates;
    plan.pad_rows = geometry.width - plan.sub_h * variates;
    plan.colors = std::move(colors);
    plan.stats = std::move(stats);
    plan.grayscale = grayscale;
    if (plan.sub_h < geometry.patch) {
        warn("subfigure height " + std::to_string(plan.sub_h) + " is below the patch size " +
             std::to_string(geometry.patch) + "; variates share patches");
    }
    return plan;
}

Matrix fold_by_period(const Vector& series, int period) {
    const auto n = static_cast<int>(series.size());
    if (period < 1 || n < period) {
        throw DataError("cannot fold a series of length " + std::to_string(n) + " by period " +
                        std::to_string(period));
    }
    const int cols = n / period;
    const int skip = n - cols * period;
    Matrix out(period, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < period; ++i) {
            out(i, j) = series(skip + j * period + i);
        }
    }
    return out;
}

Vector unfold_by_period(const Matrix& folded, int length) {
    const auto period = static_cast<int>(folded.rows());
    const auto cols = static_cast<int>(folded.cols());
    if (length < 0 || static_cast<long>(period) * cols < length) {
        throw DataError("cannot unfold " + std::to_string(period) + "x" + std::to_string(cols) +
                        " into " + std::to_string(length) + " steps");
    }
    Vector out(length);
    for (int t = 0; t < length; ++t) {
        out(t) = folded(t % period, t / period);
    }
    return out;
}

Matrix interpolation_matrix(int in_size, int out_size) {
    if (in_size < 1 || out_size < 1) {
        throw DataError("resize sizes must be positive");
    }
    Matrix w = Matrix::Zero(out_size, in_size);
    if (in_size == out_size) {
        w.setIdentity();
        return w;
    }
    const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
    for (int d = 0; d < out_size; ++d) {
        double src = (d + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
        const int i0 = static_cast<int>(std::floor(src));
        const int i1 = std::min(i0 + 1, in_size - 1);
        const double frac = src - i0;
        w(d, i0) += 1.0 - frac;
        w(d, i1) += frac;
    }
    return w;
}

Matrix bilinear_resize(const Matrix& m, int out_h, int out_w) {
    if (m.rows() < 1 || m.cols() < 1 || out_h < 1 || out_w < 1) {
        throw DataError("resize sizes must be positive");
    }
    if (m.rows() == out_h && m.cols() == out_w) {
        return m;
    }
    const Matrix ry = interpolation_matrix(static_cast<int>(m.rows()), out_h);
    const Matrix rx = interpolation_matrix(static_cast<int>(m.cols()), out_w);
    return ry * m * rx.transpose();
}

namespace {

void check_plan_columns(const Matrix& m, const ColorImagePlan& plan, const char* what) {
    if (m.cols() != plan.variates) {
        throw ShapeError(std::string(what) + " has " + std::to_string(m.cols()) +
                         " variates, plan expects " + std::to_string(plan.variates));
    }
}

}  // namespace

Image render_context(const Matrix& norm_context, const ColorImagePlan& plan) {
    check_plan_columns(norm_context, plan, "context");
    if (norm_context.rows() != plan.context_length) {
        throw ShapeError("context has " + std::to_string(norm_context.rows()) +
                         " steps, plan expects " + std::to_string(plan.context_length));
    }
    const int half = plan.geometry.half_width();
    Image left(plan.geometry.width, half);
    for (int v = 0; v < plan.variates; ++v) {
        const Matrix folded = fold_by_period(norm_context.col(v), plan.period);
        const Matrix sub = bilinear_resize(folded, plan.sub_h, half);
        const int row0 = plan.row_begin(v);
        const int channel = plan.colors.channels[static_cast<std::size_t>(v)];
        for (int y = 0; y < plan.sub_h; ++y) {
            for (int x = 0; x < half; ++x) {
                if (plan.grayscale) {
                    for (int c = 0; c < Image::kChannels; ++c) {
                        left.at(row0 + y, x, c) = sub(y, x);
                    }
                } else {
                    left.at(row0 + y, x, channel) = sub(y, x);
                }
            }
        }
    }
    return left;
}

ModelInput build_model_input(const Image& left_image, const ImageGeometry& geometry) {
    if (left_image.width() != geometry.half_width() || left_image.height() != geometry.width) {
        throw ShapeError("left image must be " + std::to_string(geometry.width) + "x" +
                         std::to_string(geometry.half_width()));
    }
    ModelInput in{Image(geometry.width, geometry.width), PatchMask::right_half(geometry.patches_per_side())};
    for (int y = 0; y < left_image.height(); ++y) {
        for (int x = 0; x < left_image.width(); ++x) {
            for (int c = 0; c < Image::kChannels; ++c) {
                in.image.at(y, x, c) = left_image.at(y, x, c);
            }
        }
    }
    return in;
}

Matrix extract_normalized(const Image& reconstructed, const ColorImagePlan& plan) {
    const int w = plan.geometry.width;
    const int half = plan.geometry.half_width();
    if (reconstructed.width() != w || reconstructed.height() != w) {
        throw ShapeError("reconstructed image must be " + std::to_string(w) + "x" + std::to_string(w));
    }
    const Matrix ry = interpolation_matrix(plan.sub_h, plan.period);
    const Matrix rx = interpolation_matrix(half, plan.target_cols);
    Matrix out(plan.horizon, plan.variates);
    Matrix region(plan.sub_h, half);
    for (int v = 0; v < plan.variates; ++v) {
        const int row0 = plan.row_begin(v);
        const int channel = plan.colors.channels[static_cast<std::size_t>(v)];
        for (int y = 0; y < plan.sub_h; ++y) {
            for (int x = 0; x < half; ++x) {
                if (plan.grayscale) {
                    region(y, x) = (reconstructed.at(row0 + y, half + x, 0) + reconstructed.at(row0 + y, half + x, 1) +
                                    reconstructed.at(row0 + y, half + x, 2)) /
                                   3.0;
                } else {
                    region(y, x) = reconstructed.at(row0 + y, half + x, channel);
                }
            }
        }
        const Matrix folded = (plan.sub_h == plan.period && half == plan.target_cols)
                                  ? region
                                  : Matrix(ry * region * rx.transpose());
        out.col(v) = unfold_by_period(folded, plan.horizon);
    }
    return out;
}

Image extract_normalized_adjoint(const Matrix& grad, const ColorImagePlan& plan) {
    check_plan_columns(grad, plan, "gradient");
    if (grad.rows() != plan.horizon) {
        throw ShapeError("gradient horizon mismatch");
    }
    const int w = plan.geometry.width;
    const int half = plan.geometry.half_width();
    const Matrix ry = interpolation_matrix(plan.sub_h, plan.period);
    const Matrix rx = interpolation_matrix(half, plan.target_cols);
    Image out(w, w);
    Matrix folded = Matrix::Zero(plan.period, plan.target_cols);
    for (int v = 0; v < plan.variates; ++v) {
        folded.setZero();
        for (int t = 0; t < plan.horizon; ++t) {
            folded(t % plan.period, t / plan.period) = grad(t, v);
        }
        const Matrix region = ry.transpose() * folded * rx;
        const int row0 = plan.row_begin(v);
        const int channel = plan.colors.channels[static_cast<std::size_t>(v)];
        for (int y = 0; y < plan.sub_h; ++y) {
            for (int x = 0; x < half; ++x) {
                if (plan.grayscale) {
                    for (int c = 0; c < Image::kChannels; ++c) {
                        out.at(row0 + y, half + x, c) += region(y, x) / 3.0;
                    }
                } else {
                    out.at(row0 + y, half + x, channel) += region(y, x);
                }
            }
        }
    }
    return out;
}

ForecastSet extract_forecasts(const std::vector<Image>& reconstructed, const ColorImagePlan& plan,
                              int horizon) {
    if (reconstructed.empty()) {
        throw ShapeError("no reconstructed images to extract from");
    }
    if (horizon > plan.target_cols * plan.period || horizon != plan.horizon) {
        throw ShapeError("horizon " + std::to_string(horizon) + " does not fit plan (" +
                         std::to_string(plan.target_cols) + " columns of " + std::to_string(plan.period) + ")");
    }
    std::vector<Matrix> heads;
    heads.reserve(reconstructed.size());
    for (const auto& img : reconstructed) {
        heads.push_back(denormalize(extract_normalized(img, plan), plan.stats));
    }
    return ForecastSet(std::move(heads), QuantileSet(static_cast<int>(reconstructed.size())));
}

}  // namespace viforecast

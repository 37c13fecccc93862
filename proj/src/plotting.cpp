#include "viforecast/plotting.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace viforecast {

Canvas::Canvas(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

void Canvas::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

void Canvas::line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        set(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void write_png(const std::filesystem::path& path, const Canvas& canvas) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw DataError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed encoding " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(canvas.width), static_cast<png_uint_32>(canvas.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < canvas.height; ++y) {
        png_write_row(png, canvas.rgb.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(canvas.width) * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Canvas image_to_canvas(const Image& image, double lo, double hi) {
    Canvas c(image.width(), image.height(), 0);
    const double span = hi > lo ? hi - lo : 1.0;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            std::uint8_t px[3];
            for (int ch = 0; ch < 3; ++ch) {
                const double u = std::clamp((image.at(y, x, ch) - lo) / span, 0.0, 1.0);
                px[ch] = static_cast<std::uint8_t>(std::lround(u * 255.0));
            }
            c.set(x, y, px[0], px[1], px[2]);
        }
    }
    return c;
}

Canvas plot_forecast(const Matrix& context, const ForecastSet& forecast, int panel_width, int panel_height) {
    const int variates = static_cast<int>(context.cols());
    const int len = static_cast<int>(context.rows());
    const int horizon = forecast.horizon();
    Canvas canvas(panel_width, panel_height * variates);
    const int total = len + horizon;
    const auto lower = forecast.per_head.front();
    const auto upper = forecast.per_head.back();
    const Matrix& point = forecast.point();
    for (int v = 0; v < variates; ++v) {
        double lo = std::min({context.col(v).minCoeff(), lower.col(v).minCoeff(), point.col(v).minCoeff()});
        double hi = std::max({context.col(v).maxCoeff(), upper.col(v).maxCoeff(), point.col(v).maxCoeff()});
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const int top = v * panel_height;
        auto px = [&](int t) { return static_cast<int>(std::lround(t * (panel_width - 1.0) / std::max(total - 1, 1))); };
        auto py = [&](double value) {
            const double u = (value - lo) / (hi - lo);
            return top + 4 + static_cast<int>(std::lround((1.0 - u) * (panel_height - 9)));
        };
        for (int t = 0; t < horizon; ++t) {
            const int x = px(len + t);
            for (int y = py(upper(t, v)); y <= py(lower(t, v)); ++y) canvas.set(x, y, 190, 215, 245);
        }
        for (int t = 1; t < len; ++t) canvas.line(px(t - 1), py(context(t - 1, v)), px(t), py(context(t, v)), 0, 0, 0);
        int prev_x = px(len - 1);
        int prev_y = py(context(len - 1, v));
        for (int t = 0; t < horizon; ++t) {
            const int x = px(len + t);
            const int y = py(point(t, v));
            canvas.line(prev_x, prev_y, x, y, 30, 90, 200);
            prev_x = x;
            prev_y = y;
        }
        for (int x = 0; x < panel_width; ++x) canvas.set(x, top + panel_height - 1, 200, 200, 200);
    }
    return canvas;
}

}  // namespace viforecast

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "viforecast/core.hpp"
#include "viforecast/image.hpp"

namespace viforecast {

/// 8-bit RGB raster.
struct Canvas {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Canvas(int w, int h, std::uint8_t fill = 255);
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

void write_png(const std::filesystem::path& path, const Canvas& canvas);

/// Model-space image mapped linearly from [lo, hi] to [0, 255], clamped.
Canvas image_to_canvas(const Image& image, double lo, double hi);

/// One panel per variate: context (black), point forecast (blue) and the
/// band between the lowest and highest head (light blue).
Canvas plot_forecast(const Matrix& context, const ForecastSet& forecast, int panel_width = 640,
                     int panel_height = 160);

}  // namespace viforecast

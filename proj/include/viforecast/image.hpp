#pragma once

#include <cstdint>
#include <vector>

namespace viforecast {

/// Height x width x 3 tensor in row-major HWC order.
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;
    Image(int height, int width)
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * kChannels, 0.0) {}

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    double at(int y, int x, int c) const { return data_[index(y, x, c)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Image& other) const = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * kChannels +
               static_cast<std::size_t>(c);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// N x N patch mask; true marks a masked (hidden) patch.
class PatchMask {
public:
    PatchMask() = default;
    explicit PatchMask(int n) : n_(n), masked_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0) {}

    /// Right half masked, the forecasting layout.
    static PatchMask right_half(int n) {
        PatchMask m(n);
        for (int r = 0; r < n; ++r) {
            for (int c = n / 2; c < n; ++c) {
                m.set(r, c, true);
            }
        }
        return m;
    }

    int side() const { return n_; }
    bool masked(int r, int c) const { return masked_[flat(r, c)] != 0; }
    bool masked(int patch_index) const { return masked_[static_cast<std::size_t>(patch_index)] != 0; }
    void set(int r, int c, bool value) { masked_[flat(r, c)] = value ? 1 : 0; }

    int count_masked() const {
        int k = 0;
        for (auto v : masked_) k += v;
        return k;
    }

    bool operator==(const PatchMask& other) const = default;

private:
    std::size_t flat(int r, int c) const { return static_cast<std::size_t>(r) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c); }

    int n_ = 0;
    std::vector<std::uint8_t> masked_;
};

}  // namespace viforecast

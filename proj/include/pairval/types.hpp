#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pairval {

enum class Label : std::uint8_t { invalid = 0, valid = 1 };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

/// Row-major 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c);
    Image(int w, int h, int c, std::vector<std::uint8_t> samples);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::uint8_t at(int row, int col, int ch = 0) const {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    std::uint8_t& at(int row, int col, int ch = 0) {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
    bool operator==(const Image&) const = default;
};

struct ImagePair {
    std::string id;
    Image original;
    Image transformed;
    std::optional<Label> ground_truth;
};

inline constexpr std::size_t kMetricCount = 13;

/// Column order is the on-disk cache order and the classifier feature order.
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "psnr", "ssim", "mse", "tsi", "ws", "cs", "kl",
    "hist_int", "hist_cor", "cpl", "sss", "vae_re", "vif"};

enum class MetricIndex : std::size_t {
    psnr, ssim, mse, tsi, ws, cs, kl, hist_int, hist_cor, cpl, sss, vae_re, vif
};

std::optional<MetricIndex> parse_metric_name(std::string_view name);

struct MetricVector {
    std::array<double, kMetricCount> values{};

    double& operator[](MetricIndex m) { return values[static_cast<std::size_t>(m)]; }
    double operator[](MetricIndex m) const { return values[static_cast<std::size_t>(m)]; }
    std::span<const double> span() const { return values; }
    bool all_finite() const;
    bool operator==(const MetricVector&) const = default;
};

}  // namespace pairval

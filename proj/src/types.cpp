#include "pairval/types.hpp"

#include <cmath>

#include "pairval/errors.hpp"

namespace pairval {

std::string_view to_string(Label label) { return label == Label::valid ? "valid" : "invalid"; }

std::optional<Label> parse_label(std::string_view text) {
    if (text == "valid") return Label::valid;
    if (text == "invalid") return Label::invalid;
    return std::nullopt;
}

Image::Image(int w, int h, int c) : Image(w, h, c, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * c)) {}

Image::Image(int w, int h, int c, std::vector<std::uint8_t> samples)
    : width(w), height(h), channels(c), data(std::move(samples)) {
    require(w >= 1 && h >= 1, ErrorCode::invalid_argument, "image dimensions must be >= 1");
    require(c == 1 || c == 3, ErrorCode::invalid_argument, "image must have 1 or 3 channels");
    require(data.size() == static_cast<std::size_t>(w) * h * c, ErrorCode::invalid_argument,
            "sample count does not match width*height*channels");
}

std::optional<MetricIndex> parse_metric_name(std::string_view name) {
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        if (kMetricNames[i] == name) return static_cast<MetricIndex>(i);
    }
    return std::nullopt;
}

bool MetricVector::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace pairval

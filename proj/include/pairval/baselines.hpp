#pragma once

#include <span>
#include <string_view>

#include "json.hpp"
#include "pairval/types.hpp"

namespace pairval::baselines {

enum class Direction { valid_if_ge, valid_if_le };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

/// vif: valid_if_ge; vae_re: valid_if_le. Other similarity metrics (psnr, ssim,
/// tsi, cs, hist_int, hist_cor, sss) are valid_if_ge; distances are valid_if_le.
Direction default_direction(MetricIndex metric);

struct ThresholdValidator {
    MetricIndex metric = MetricIndex::vif;
    double threshold = 0.0;
    Direction direction = Direction::valid_if_ge;
    double training_accuracy = 0.0;

    /// Boundary is inclusive on the valid side. Throws on non-finite input.
    Label classify(double value) const;
    nlohmann::json to_json() const;
    static ThresholdValidator from_json(const nlohmann::json& j);
};

/// Sweeps t = min + k*step for k = 0.. while t <= max (plus max itself when the
/// grid misses it) and keeps the most accurate threshold; ties go to the smallest.
ThresholdValidator fit_threshold(std::span<const double> values, std::span<const Label> labels,
                                 MetricIndex metric, Direction direction, double step = 1e-3);
inline ThresholdValidator fit_threshold(std::span<const double> values, std::span<const Label> labels,
                                        MetricIndex metric, double step = 1e-3) {
    return fit_threshold(values, labels, metric, default_direction(metric), step);
}

}  // namespace pairval::baselines

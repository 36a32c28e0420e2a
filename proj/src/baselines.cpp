#include "pairval/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pairval/errors.hpp"

namespace pairval::baselines {

using nlohmann::json;

std::string_view to_string(Direction d) { return d == Direction::valid_if_ge ? "valid_if_ge" : "valid_if_le"; }

Direction parse_direction(std::string_view text) {
    if (text == "valid_if_ge") return Direction::valid_if_ge;
    if (text == "valid_if_le") return Direction::valid_if_le;
    fail(ErrorCode::invalid_argument, "unknown threshold direction '" + std::string(text) + "'");
}

Direction default_direction(MetricIndex metric) {
    switch (metric) {
        case MetricIndex::mse:
        case MetricIndex::ws:
        case MetricIndex::kl:
        case MetricIndex::cpl:
        case MetricIndex::vae_re: return Direction::valid_if_le;
        default: return Direction::valid_if_ge;
    }
}

Label ThresholdValidator::classify(double value) const {
    require(std::isfinite(value), ErrorCode::numeric, "non-finite metric value");
    const bool valid = direction == Direction::valid_if_ge ? value >= threshold : value <= threshold;
    return valid ? Label::valid : Label::invalid;
}

json ThresholdValidator::to_json() const {
    return {{"metric", kMetricNames[static_cast<std::size_t>(metric)]},
            {"threshold", threshold},
            {"direction", to_string(direction)},
            {"training_accuracy", training_accuracy}};
}

ThresholdValidator ThresholdValidator::from_json(const json& j) {
    ThresholdValidator v;
    const auto name = j.at("metric").get<std::string>();
    const auto m = parse_metric_name(name);
    require(m.has_value(), ErrorCode::parse, "unknown metric '" + name + "'");
    v.metric = *m;
    v.threshold = j.at("threshold").get<double>();
    require(std::isfinite(v.threshold), ErrorCode::parse, "threshold must be finite");
    v.direction = parse_direction(j.at("direction").get<std::string>());
    v.training_accuracy = j.value("training_accuracy", 0.0);
    return v;
}

ThresholdValidator fit_threshold(std::span<const double> values, std::span<const Label> labels, MetricIndex metric,
                                 Direction direction, double step) {
    require(values.size() == labels.size(), ErrorCode::dimension_mismatch, "values and labels differ in length");
    require(!values.empty(), ErrorCode::invalid_argument, "empty training set");
    require(step > 0.0 && std::isfinite(step), ErrorCode::invalid_argument, "step must be positive");
    for (double v : values) require(std::isfinite(v), ErrorCode::numeric, "non-finite training value");
    const auto n_valid = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::valid));
    require(n_valid > 0 && n_valid < labels.size(), ErrorCode::degenerate_data,
            "threshold fitting needs both valid and invalid examples");

    // Sorted values with prefix counts of valid labels: below(t) = #values < t.
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> sorted(values.size());
    std::vector<std::size_t> valid_prefix(values.size() + 1, 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted[i] = values[order[i]];
        valid_prefix[i + 1] = valid_prefix[i] + (labels[order[i]] == Label::valid ? 1 : 0);
    }
    const std::size_t n = sorted.size();
    const std::size_t n_invalid = n - n_valid;

    auto correct_at = [&](double t) {
        if (direction == Direction::valid_if_ge) {
            const auto below = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
            const std::size_t valid_below = valid_prefix[below];
            const std::size_t invalid_below = below - valid_below;
            return (n_valid - valid_below) + invalid_below;
        }
        const auto upto = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        const std::size_t valid_upto = valid_prefix[upto];
        const std::size_t invalid_upto = upto - valid_upto;
        return valid_upto + (n_invalid - invalid_upto);
    };

    const double lo = sorted.front();
    const double hi = sorted.back();
    const double span = (hi - lo) / step;
    require(span < 1e8, ErrorCode::invalid_argument, "threshold sweep would exceed 1e8 steps; increase the step");
    std::size_t best_correct = correct_at(lo);
    double best_t = lo;
    double last = lo;
    auto consider = [&](double t) {
        const std::size_t c = correct_at(t);
        if (c > best_correct) {
            best_correct = c;
            best_t = t;
        }
        last = t;
    };
    for (std::size_t k = 1;; ++k) {
        const double t = lo + static_cast<double>(k) * step;
        if (t > hi) break;
        consider(t);
    }
    if (last < hi) consider(hi);
    ThresholdValidator v;
    v.metric = metric;
    v.direction = direction;
    v.threshold = best_t;
    v.training_accuracy = static_cast<double>(best_correct) / static_cast<double>(n);
    return v;
}

}  // namespace pairval::baselines

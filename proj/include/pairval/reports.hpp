#pragma once

#include <span>
#include <string>

#include "pairval/eval.hpp"

namespace pairval::eval {

/// Accuracy (y) against human effort (x); front points drawn larger and joined.
std::string pareto_svg(std::span<const ParetoPoint> points, std::span<const std::size_t> front);

std::string pareto_markdown(std::span<const ParetoPoint> points, std::span<const std::size_t> front);
nlohmann::json pareto_json(std::span<const ParetoPoint> points, std::span<const std::size_t> front);

std::string grid_markdown(std::span<const RunResult> results);

}  // namespace pairval::eval

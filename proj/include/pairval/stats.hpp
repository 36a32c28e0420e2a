#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pairval/types.hpp"

namespace pairval::stats {

/// Positive class is `valid`. Precision/recall are unset when their denominator is 0.
struct Score {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;

    nlohmann::json to_json() const;  // undefined values become null
};

Score score(std::span<const Label> predicted, std::span<const Label> truth);

struct PearsonResult {
    std::optional<double> r;        // unset when either input is constant
    std::optional<double> p_value;  // two-sided, Student t with n - 2 df
};

PearsonResult pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided rank-sum p-value. Normal approximation with tie and continuity
/// correction when both samples have at least 10 values, exact otherwise.
double wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);
/// Exact two-sided p-value by enumerating the rank-sum distribution (midranks for ties).
double wilcoxon_exact(std::span<const double> a, std::span<const double> b);
double wilcoxon_normal(std::span<const double> a, std::span<const double> b);
/// Midranks of the pooled sample, a first then b.
std::vector<double> midranks(std::span<const double> pooled);

/// P(a > b) + 0.5 P(a = b).
double vargha_delaney_a12(std::span<const double> a, std::span<const double> b);

enum class EffectSize { negligible, small, medium, large };
/// Bands on |A12 - 0.5| mirrored: < 0.56 negligible, < 0.64 small, < 0.71 medium.
EffectSize a12_band(double a12);
std::string_view to_string(EffectSize e);

/// Unset when chance agreement is 1 (both raters constant).
std::optional<double> cohens_kappa(std::span<const int> r1, std::span<const int> r2);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stdev(std::span<const double> x);

}  // namespace pairval::stats

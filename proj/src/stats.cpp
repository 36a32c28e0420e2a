#include "pairval/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "pairval/errors.hpp"

namespace pairval::stats {

using nlohmann::json;

json Score::to_json() const {
    json j = {{"accuracy", accuracy}};
    j["precision"] = precision ? json(*precision) : json(nullptr);
    j["recall"] = recall ? json(*recall) : json(nullptr);
    return j;
}

Score score(std::span<const Label> predicted, std::span<const Label> truth) {
    require(predicted.size() == truth.size(), ErrorCode::dimension_mismatch, "predictions and truth differ in length");
    require(!truth.empty(), ErrorCode::invalid_argument, "cannot score an empty set");
    std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == Label::valid;
        const bool t = truth[i] == Label::valid;
        if (p == t) ++correct;
        if (p && t) ++tp;
        if (p && !t) ++fp;
        if (!p && t) ++fn;
    }
    Score s;
    s.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return s;
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorCode::dimension_mismatch, "pearson inputs differ in length");
    require(x.size() >= 3, ErrorCode::invalid_argument, "pearson needs at least 3 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    PearsonResult out;
    if (sxx <= 0.0 || syy <= 0.0) return out;
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    out.r = r;
    const double df = n - 2.0;
    if (1.0 - r * r <= 0.0) {
        out.p_value = 0.0;
    } else {
        const double t = std::abs(r) * std::sqrt(df / (1.0 - r * r));
        const boost::math::students_t dist(df);
        out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
    }
    return out;
}

std::vector<double> midranks(std::span<const double> pooled) {
    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(pooled.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

std::vector<double> pooled_of(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    for (double v : pooled) require(std::isfinite(v), ErrorCode::numeric, "non-finite sample value");
    return pooled;
}

}  // namespace

double wilcoxon_exact(std::span<const double> a, std::span<const double> b) {
    require(!a.empty() && !b.empty(), ErrorCode::invalid_argument, "rank-sum test needs two non-empty samples");
    const auto pooled = pooled_of(a, b);
    const auto ranks = midranks(pooled);
    const std::size_t n1 = a.size();
    const std::size_t total = pooled.size();
    // Doubled midranks are integers, so the subset-sum DP runs over integers.
    std::vector<int> doubled(total);
    for (std::size_t i = 0; i < total; ++i) doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
    int observed = 0;
    for (std::size_t i = 0; i < n1; ++i) observed += doubled[i];
    const int max_sum = std::accumulate(doubled.begin(), doubled.end(), 0);
    // ways[k][s]: number of k-subsets of the items seen so far with doubled rank sum s.
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t item = 0; item < total; ++item) {
        const int r = doubled[item];
        for (std::size_t k = std::min(n1, item + 1); k >= 1; --k) {
            for (int s = max_sum; s >= r; --s) ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - r)];
        }
    }
    double all = 0.0, le = 0.0, ge = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
        const double w = ways[n1][static_cast<std::size_t>(s)];
        all += w;
        if (s <= observed) le += w;
        if (s >= observed) ge += w;
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / all);
}

double wilcoxon_normal(std::span<const double> a, std::span<const double> b) {
    require(!a.empty() && !b.empty(), ErrorCode::invalid_argument, "rank-sum test needs two non-empty samples");
    const auto pooled = pooled_of(a, b);
    const auto ranks = midranks(pooled);
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double n = n1 + n2;
    double w = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) w += ranks[i];
    std::map<double, double> ties;
    for (double v : pooled) ties[v] += 1.0;
    double tie_term = 0.0;
    for (const auto& [v, t] : ties) tie_term += t * t * t - t;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) return 1.0;
    const double mu = n1 * (n + 1.0) / 2.0;
    const double z = std::max(0.0, std::abs(w - mu) - 0.5) / std::sqrt(var);
    const boost::math::normal unit;
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(unit, z)));
}

double wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
    if (a.size() >= 10 && b.size() >= 10) return wilcoxon_normal(a, b);
    return wilcoxon_exact(a, b);
}

double vargha_delaney_a12(std::span<const double> a, std::span<const double> b) {
    require(!a.empty() && !b.empty(), ErrorCode::invalid_argument, "A12 needs two non-empty samples");
    // Rank form: (R1/n1 - (n1+1)/2) / n2, exact for ties via midranks.
    const auto ranks = midranks(pooled_of(a, b));
    double r1 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r1 += ranks[i];
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    return (r1 / n1 - (n1 + 1.0) / 2.0) / n2;
}

EffectSize a12_band(double a12) {
    const double d = 0.5 + std::abs(a12 - 0.5);
    if (d < 0.56) return EffectSize::negligible;
    if (d < 0.64) return EffectSize::small;
    if (d < 0.71) return EffectSize::medium;
    return EffectSize::large;
}

std::string_view to_string(EffectSize e) {
    switch (e) {
        case EffectSize::negligible: return "negligible";
        case EffectSize::small: return "small";
        case EffectSize::medium: return "medium";
        case EffectSize::large: return "large";
    }
    return "unknown";
}

std::optional<double> cohens_kappa(std::span<const int> r1, std::span<const int> r2) {
    require(r1.size() == r2.size(), ErrorCode::dimension_mismatch, "rater label lists differ in length");
    require(!r1.empty(), ErrorCode::invalid_argument, "kappa needs at least one rating");
    std::map<int, double> m1, m2;
    double agree = 0.0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        m1[r1[i]] += 1.0;
        m2[r2[i]] += 1.0;
        if (r1[i] == r2[i]) agree += 1.0;
    }
    const double n = static_cast<double>(r1.size());
    const double po = agree / n;
    double pe = 0.0;
    for (const auto& [cat, c] : m1) {
        const auto it = m2.find(cat);
        if (it != m2.end()) pe += (c / n) * (it->second / n);
    }
    if (pe >= 1.0) return std::nullopt;
    return (po - pe) / (1.0 - pe);
}

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stdev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace pairval::stats

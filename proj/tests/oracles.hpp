#pragma once

// Independent reference implementations. They favour directness over speed
// and share no code with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pairval/types.hpp"

namespace oracles {

/// Every ordered co-occurring pair for the given offsets, listed explicitly (both directions).
inline std::vector<std::pair<int, int>> cooccurrence_list(const pairval::Image& img, int levels,
                                                          const std::vector<std::pair<int, int>>& offs) {
    std::vector<std::pair<int, int>> out;
    for (int r1 = 0; r1 < img.height; ++r1)
        for (int c1 = 0; c1 < img.width; ++c1)
            for (int r2 = 0; r2 < img.height; ++r2)
                for (int c2 = 0; c2 < img.width; ++c2)
                    for (const auto& [dr, dc] : offs) {
                        if (r2 - r1 != dr || c2 - c1 != dc) continue;
                        const int i = img.at(r1, c1) * levels / 256;
                        const int j = img.at(r2, c2) * levels / 256;
                        out.emplace_back(i, j);
                        out.emplace_back(j, i);
                    }
    return out;
}

inline std::vector<double> glcm_bruteforce(const pairval::Image& img, int levels,
                                           const std::vector<std::pair<int, int>>& offs) {
    std::vector<double> counts(static_cast<std::size_t>(levels * levels), 0.0);
    for (auto [i, j] : cooccurrence_list(img, levels, offs)) counts[static_cast<std::size_t>(i * levels + j)] += 1.0;
    return counts;
}

/// Optimum of the transportation LP between histograms p and q (equal total
/// mass) with cost |i - j| * bin_width, solved as a min-cost flow by
/// successive shortest paths (Bellman-Ford on the residual graph).
inline double transport_lp(const std::vector<double>& p, const std::vector<double>& q, double bin_width) {
    const int n = static_cast<int>(p.size());
    const int source = 2 * n, sink = 2 * n + 1, nodes = 2 * n + 2;
    struct Edge {
        int to;
        double cap, cost;
        int rev;
    };
    std::vector<std::vector<Edge>> g(static_cast<std::size_t>(nodes));
    auto add = [&](int u, int v, double cap, double cost) {
        g[u].push_back({v, cap, cost, static_cast<int>(g[v].size())});
        g[v].push_back({u, 0.0, -cost, static_cast<int>(g[u].size()) - 1});
    };
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) add(source, i, p[i], 0.0);
    for (int j = 0; j < n; ++j) add(n + j, sink, q[j], 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) add(i, n + j, inf, std::abs(i - j) * bin_width);
    const double eps = 1e-15;
    double total_cost = 0.0;
    for (;;) {
        std::vector<double> dist(static_cast<std::size_t>(nodes), inf);
        std::vector<std::pair<int, int>> prev(static_cast<std::size_t>(nodes), {-1, -1});
        dist[source] = 0.0;
        for (int round = 0; round < nodes; ++round) {
            bool changed = false;
            for (int u = 0; u < nodes; ++u) {
                if (dist[u] == inf) continue;
                for (int k = 0; k < static_cast<int>(g[u].size()); ++k) {
                    const auto& e = g[u][k];
                    if (e.cap > eps && dist[u] + e.cost < dist[e.to] - 1e-12) {
                        dist[e.to] = dist[u] + e.cost;
                        prev[e.to] = {u, k};
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }
        if (dist[sink] == inf) break;
        double push = inf;
        for (int v = sink; v != source; v = prev[v].first) push = std::min(push, g[prev[v].first][prev[v].second].cap);
        for (int v = sink; v != source; v = prev[v].first) {
            auto& e = g[prev[v].first][prev[v].second];
            e.cap -= push;
            g[e.to][e.rev].cap += push;
        }
        total_cost += push * dist[sink];
    }
    return total_cost;
}

struct Point {
    std::string id;
    double accuracy, effort;
};

/// Non-dominated points among the first occurrence of each id, in input order.
inline std::vector<std::size_t> pareto_bruteforce(const std::vector<Point>& pts) {
    std::vector<std::size_t> firsts, out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (seen.insert(pts[i].id).second) firsts.push_back(i);
    for (std::size_t i : firsts) {
        bool dominated = false;
        for (std::size_t j : firsts) {
            dominated = dominated || (pts[j].accuracy >= pts[i].accuracy && pts[j].effort <= pts[i].effort &&
                                      (pts[j].accuracy > pts[i].accuracy || pts[j].effort < pts[i].effort));
        }
        if (!dominated) out.push_back(i);
    }
    return out;
}

inline std::vector<double> midranks(const std::vector<double>& pooled) {
    std::vector<double> r(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : pooled) less += v < pooled[i], equal += v == pooled[i];
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

/// Two-sided exact rank-sum p-value by listing every assignment of pooled ranks to sample a.
inline double wilcoxon_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto r = midranks(pooled);
    const std::size_t n = pooled.size();
    double observed = 0;
    for (std::size_t i = 0; i < a.size(); ++i) observed += r[i];
    double all = 0, le = 0, ge = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) s += r[i];
        all += 1;
        le += s <= observed + 1e-9;
        ge += s >= observed - 1e-9;
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / all);
}

inline double a12_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (double x : a)
        for (double y : b) s += x > y ? 1.0 : x == y ? 0.5 : 0.0;
    return s / static_cast<double>(a.size() * b.size());
}

/// Kappa of a 2x2 agreement table [[a, b], [c, d]].
inline double kappa_table(double a, double b, double c, double d) {
    const double n = a + b + c + d;
    const double po = (a + d) / n;
    const double pe = ((a + b) / n) * ((a + c) / n) + ((c + d) / n) * ((b + d) / n);
    return (po - pe) / (1.0 - pe);
}

inline double pearson_textbook(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracles

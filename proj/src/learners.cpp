#include "pairval/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pairval/errors.hpp"
#include "pairval/util.hpp"

namespace pairval::learn {

using nlohmann::json;

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::random_forest: return "random_forest";
        case ClassifierKind::decision_tree: return "decision_tree";
        case ClassifierKind::svm: return "svm";
        case ClassifierKind::logistic_regression: return "logistic_regression";
    }
    return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view text) {
    if (text == "random_forest" || text == "rf") return ClassifierKind::random_forest;
    if (text == "decision_tree" || text == "dt") return ClassifierKind::decision_tree;
    if (text == "svm") return ClassifierKind::svm;
    if (text == "logistic_regression" || text == "lr") return ClassifierKind::logistic_regression;
    fail(ErrorCode::invalid_argument, "unknown classifier kind '" + std::string(text) + "'");
}

void FeatureMatrix::push_row(std::span<const double> row) {
    if (rows_ == 0 && cols_ == 0) cols_ = row.size();
    require(row.size() == cols_, ErrorCode::dimension_mismatch, "feature row has the wrong length");
    data_.insert(data_.end(), row.begin(), row.end());
    ++rows_;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
    FeatureMatrix out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * cols_), cols_,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return out;
}

json Hyperparams::to_json() const {
    json j = {{"trees", trees},         {"min_leaf", min_leaf},     {"c", c},
              {"l2", l2},               {"iterations", iterations}, {"step", step}};
    j["max_depth"] = max_depth ? json(*max_depth) : json(nullptr);
    return j;
}

Hyperparams Hyperparams::from_json(const json& j) {
    Hyperparams h;
    h.trees = j.value("trees", h.trees);
    if (j.contains("max_depth") && !j.at("max_depth").is_null()) h.max_depth = j.at("max_depth").get<int>();
    h.min_leaf = j.value("min_leaf", h.min_leaf);
    h.c = j.value("c", h.c);
    h.l2 = j.value("l2", h.l2);
    h.iterations = j.value("iterations", h.iterations);
    h.step = j.value("step", h.step);
    require(h.trees >= 1 && h.min_leaf >= 1 && h.c > 0.0 && h.l2 >= 0.0 && h.iterations >= 1 && h.step > 0.0,
            ErrorCode::invalid_argument, "hyperparameter out of range");
    return h;
}

TuneGrid TuneGrid::defaults() {
    TuneGrid g;
    for (std::optional<int> depth : {std::optional<int>(8), std::optional<int>()}) {
        for (int leaf : {1, 5}) {
            Hyperparams h;
            h.trees = 100;
            h.max_depth = depth;
            h.min_leaf = leaf;
            g.random_forest.push_back(h);
        }
    }
    for (std::optional<int> depth : {std::optional<int>(4), std::optional<int>(8), std::optional<int>()}) {
        for (int leaf : {1, 5}) {
            Hyperparams h;
            h.max_depth = depth;
            h.min_leaf = leaf;
            g.decision_tree.push_back(h);
        }
    }
    for (double c : {0.1, 1.0, 10.0}) {
        Hyperparams h;
        h.c = c;
        g.svm.push_back(h);
    }
    for (double l2 : {0.01, 0.1, 1.0}) {
        Hyperparams h;
        h.l2 = l2;
        h.iterations = 500;
        g.logistic_regression.push_back(h);
    }
    return g;
}

const std::vector<Hyperparams>& TuneGrid::for_kind(ClassifierKind kind) const {
    switch (kind) {
        case ClassifierKind::random_forest: return random_forest;
        case ClassifierKind::decision_tree: return decision_tree;
        case ClassifierKind::svm: return svm;
        case ClassifierKind::logistic_regression: return logistic_regression;
    }
    fail(ErrorCode::invalid_argument, "unknown classifier kind");
}

json TuneGrid::to_json() const {
    auto list = [](const std::vector<Hyperparams>& v) {
        json a = json::array();
        for (const auto& h : v) a.push_back(h.to_json());
        return a;
    };
    return {{"random_forest", list(random_forest)},
            {"decision_tree", list(decision_tree)},
            {"svm", list(svm)},
            {"logistic_regression", list(logistic_regression)},
            {"folds", folds}};
}

TuneGrid TuneGrid::from_json(const json& j) {
    TuneGrid g = defaults();
    auto read = [&](const char* key, std::vector<Hyperparams>& out) {
        if (!j.contains(key)) return;
        out.clear();
        for (const auto& h : j.at(key)) out.push_back(Hyperparams::from_json(h));
        require(!out.empty(), ErrorCode::invalid_argument, std::string("empty grid for ") + key);
    };
    read("random_forest", g.random_forest);
    read("decision_tree", g.decision_tree);
    read("svm", g.svm);
    read("logistic_regression", g.logistic_regression);
    g.folds = j.value("folds", g.folds);
    require(g.folds >= 2, ErrorCode::invalid_argument, "folds must be >= 2");
    return g;
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
    Standardizer s;
    s.mean.assign(x.cols(), 0.0);
    s.scale.assign(x.cols(), 1.0);
    if (x.rows() == 0) return s;
    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) m += x(r, c);
        m /= n;
        double v = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) v += (x(r, c) - m) * (x(r, c) - m);
        const double sd = std::sqrt(v / n);
        s.mean[c] = m;
        s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? sd : 1.0;
    }
    return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
    FeatureMatrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) apply(x.row(r), out.row(r));
    return out;
}

// ---------------------------------------------------------------- trees

namespace {

double gini(double wv, double wt) {
    if (wt <= 0.0) return 0.0;
    const double p = wv / wt;
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

}  // namespace

DecisionTree DecisionTree::fit(const FeatureMatrix& x, std::span<const Label> y, std::span<const double> weights,
                               const Options& opts, std::mt19937_64& rng) {
    const std::size_t d = x.cols();
    DecisionTree tree;
    struct Work {
        int node;
        std::vector<std::size_t> rows;
        int depth;
    };
    std::vector<std::size_t> root_rows;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (weights[i] > 0.0) root_rows.push_back(i);
    }
    tree.nodes_.push_back({});
    std::vector<Work> stack;
    stack.push_back({0, std::move(root_rows), 0});
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    const std::size_t n_candidates =
        opts.max_features > 0 ? std::min<std::size_t>(d, static_cast<std::size_t>(opts.max_features)) : d;
    const double min_leaf = static_cast<double>(opts.min_leaf);

    while (!stack.empty()) {
        Work work = std::move(stack.back());
        stack.pop_back();
        double wv = 0.0;
        double wt = 0.0;
        for (auto i : work.rows) {
            wt += weights[i];
            if (y[i] == Label::valid) wv += weights[i];
        }
        TreeNode& node = tree.nodes_[work.node];
        node.weight_valid = wv;
        node.weight_total = wt;
        const bool pure = wv <= 0.0 || wv >= wt;
        if (pure || (opts.max_depth && work.depth >= *opts.max_depth) || wt < 2.0 * min_leaf) continue;

        if (n_candidates < d) {
            for (std::size_t k = 0; k < n_candidates; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, d - 1);
                std::swap(features[k], features[pick(rng)]);
            }
        } else {
            std::iota(features.begin(), features.end(), 0);
        }
        const double parent = wt * gini(wv, wt);
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> sorted = work.rows;
        for (std::size_t k = 0; k < n_candidates; ++k) {
            const std::size_t f = features[k];
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                const double xa = x(a, f);
                const double xb = x(b, f);
                return xa < xb || (xa == xb && a < b);
            });
            double lv = 0.0;
            double lt = 0.0;
            for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
                const std::size_t i = sorted[pos];
                lt += weights[i];
                if (y[i] == Label::valid) lv += weights[i];
                const double xa = x(i, f);
                const double xb = x(sorted[pos + 1], f);
                if (xa == xb) continue;
                const double rt = wt - lt;
                if (lt < min_leaf || rt < min_leaf) continue;
                const double gain = parent - lt * gini(lv, lt) - rt * gini(wv - lv, rt);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    double mid = 0.5 * (xa + xb);
                    if (!(mid < xb)) mid = xa;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) continue;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (auto i : work.rows) {
            (x(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows : right_rows).push_back(i);
        }
        const int left = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({});
        tree.nodes_.push_back({});
        TreeNode& parent_node = tree.nodes_[work.node];
        parent_node.feature = best_feature;
        parent_node.threshold = best_threshold;
        parent_node.left = left;
        parent_node.right = left + 1;
        // Right pushed first so the left subtree is built first (node order is stable).
        stack.push_back({left + 1, std::move(right_rows), work.depth + 1});
        stack.push_back({left, std::move(left_rows), work.depth + 1});
    }
    return tree;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    require(!nodes_.empty(), ErrorCode::not_fitted, "decision tree is empty");
    std::size_t idx = 0;
    while (nodes_[idx].feature >= 0) {
        const TreeNode& n = nodes_[idx];
        idx = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[idx];
}

std::vector<double> DecisionTree::impurity_decrease(std::size_t n_features) const {
    std::vector<double> imp(n_features, 0.0);
    for (const auto& n : nodes_) {
        if (n.feature < 0) continue;
        const auto& l = nodes_[static_cast<std::size_t>(n.left)];
        const auto& r = nodes_[static_cast<std::size_t>(n.right)];
        const double dec = n.weight_total * gini(n.weight_valid, n.weight_total) -
                           l.weight_total * gini(l.weight_valid, l.weight_total) -
                           r.weight_total * gini(r.weight_valid, r.weight_total);
        imp[static_cast<std::size_t>(n.feature)] += std::max(0.0, dec);
    }
    return imp;
}

json DecisionTree::to_json() const {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         wv = json::array(), wt = json::array();
    for (const auto& n : nodes_) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        wv.push_back(n.weight_valid);
        wt.push_back(n.weight_total);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left},
            {"right", right},     {"weight_valid", wv},     {"weight_total", wt}};
}

DecisionTree DecisionTree::from_json(const json& j) {
    DecisionTree t;
    const auto& feature = j.at("feature");
    const std::size_t n = feature.size();
    for (const char* key : {"threshold", "left", "right", "weight_valid", "weight_total"}) {
        require(j.at(key).size() == n, ErrorCode::parse, "tree arrays differ in length");
    }
    t.nodes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes_[i];
        node.feature = feature[i].get<int>();
        node.threshold = j["threshold"][i].get<double>();
        node.left = j["left"][i].get<int>();
        node.right = j["right"][i].get<int>();
        node.weight_valid = j["weight_valid"][i].get<double>();
        node.weight_total = j["weight_total"][i].get<double>();
        if (node.feature >= 0) {
            require(node.left > static_cast<int>(i) && node.right > static_cast<int>(i) &&
                        node.left < static_cast<int>(n) && node.right < static_cast<int>(n),
                    ErrorCode::parse, "tree child index out of range");
        }
    }
    require(n > 0, ErrorCode::parse, "tree has no nodes");
    return t;
}

// ------------------------------------------------------------- linear models

namespace {

double dot(std::span<const double> w, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
    return s;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double sign_of(Label l) { return l == Label::valid ? 1.0 : -1.0; }

// Dual coordinate descent for the L1-loss linear SVM (bias folded in as a
// constant feature). Returns weights with the bias last.
std::vector<double> train_linear_svm(const FeatureMatrix& xs, std::span<const Label> y, double c,
                                     std::uint64_t seed) {
    const std::size_t n = xs.rows();
    const std::size_t d = xs.cols();
    std::vector<double> w(d + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = xs.row(i);
        qii[i] = dot(row, row) + 1.0;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    constexpr int kMaxEpochs = 1000;
    constexpr double kTol = 1e-3;
    for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double max_pg = -std::numeric_limits<double>::infinity();
        double min_pg = std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            const auto row = xs.row(i);
            const double yi = sign_of(y[i]);
            const double g = yi * (dot(w, row) + w[d]) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] >= c) pg = std::max(g, 0.0);
            max_pg = std::max(max_pg, pg);
            min_pg = std::min(min_pg, pg);
            if (std::abs(pg) > 1e-12) {
                const double old = alpha[i];
                alpha[i] = std::clamp(alpha[i] - g / qii[i], 0.0, c);
                const double delta = (alpha[i] - old) * yi;
                for (std::size_t k = 0; k < d; ++k) w[k] += delta * row[k];
                w[d] += delta;
            }
        }
        if (max_pg - min_pg < kTol) break;
    }
    return w;
}

double svm_margin(std::span<const double> w, std::span<const double> x) { return dot(w, x) + w[x.size()]; }

}  // namespace

std::pair<double, double> fit_platt(std::span<const double> dec, std::span<const Label> y) {
    require(dec.size() == y.size(), ErrorCode::dimension_mismatch, "Platt inputs differ in length");
    double prior1 = 0.0;
    double prior0 = 0.0;
    for (auto l : y) (l == Label::valid ? prior1 : prior0) += 1.0;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == Label::valid ? hi : lo;

    double a = 0.0;
    double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    auto objective = [&](double aa, double bb) {
        double f = 0.0;
        for (std::size_t i = 0; i < dec.size(); ++i) {
            const double z = dec[i] * aa + bb;
            f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return f;
    };
    double fval = objective(a, b);
    constexpr double kSigma = 1e-12;
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < dec.size(); ++i) {
            const double z = dec[i] * a + b;
            double p;
            double q;
            if (z >= 0.0) {
                p = std::exp(-z) / (1.0 + std::exp(-z));
                q = 1.0 / (1.0 + std::exp(-z));
            } else {
                p = 1.0 / (1.0 + std::exp(z));
                q = std::exp(z) / (1.0 + std::exp(z));
            }
            const double d2 = p * q;
            h11 += dec[i] * dec[i] * d2;
            h22 += d2;
            h21 += dec[i] * d2;
            const double d1 = t[i] - p;
            g1 += dec[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double stepsize = 1.0;
        while (stepsize >= 1e-10) {
            const double na = a + stepsize * da;
            const double nb = b + stepsize * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * stepsize * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            stepsize /= 2.0;
        }
        if (stepsize < 1e-10) break;
    }
    return {a, b};
}

std::vector<int> stratified_folds(std::span<const Label> y, int folds, std::uint64_t seed) {
    require(folds >= 2, ErrorCode::invalid_argument, "need at least 2 folds");
    std::vector<int> assignment(y.size(), 0);
    std::mt19937_64 rng(seed);
    int next = 0;
    for (Label cls : {Label::invalid, Label::valid}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == cls) idx.push_back(i);
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        // Continue the round-robin across classes so small folds stay balanced.
        for (std::size_t i : idx) {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    return assignment;
}

Classifier Classifier::train(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y,
                             const Hyperparams& hp, std::uint64_t seed) {
    require(x.rows() == y.size() && x.rows() > 0, ErrorCode::invalid_argument, "training data is empty or misaligned");
    Classifier c;
    c.kind_ = kind;
    c.hp_ = hp;
    c.seed_ = seed;
    c.n_features_ = x.cols();
    c.standardizer_ = Standardizer::fit(x);
    const FeatureMatrix xs = c.standardizer_.apply(x);
    const std::size_t n = xs.rows();
    const std::size_t d = xs.cols();

    switch (kind) {
        case ClassifierKind::random_forest: {
            DecisionTree::Options opts{hp.max_depth, hp.min_leaf,
                                       std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d))))};
            std::vector<double> weights(n);
            for (int t = 0; t < hp.trees; ++t) {
                std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
                std::fill(weights.begin(), weights.end(), 0.0);
                std::uniform_int_distribution<std::size_t> pick(0, n - 1);
                for (std::size_t i = 0; i < n; ++i) weights[pick(rng)] += 1.0;
                c.trees_.push_back(DecisionTree::fit(xs, y, weights, opts, rng));
            }
            break;
        }
        case ClassifierKind::decision_tree: {
            DecisionTree::Options opts{hp.max_depth, hp.min_leaf, 0};
            std::vector<double> weights(n, 1.0);
            std::mt19937_64 rng(seed);
            c.trees_.push_back(DecisionTree::fit(xs, y, weights, opts, rng));
            break;
        }
        case ClassifierKind::logistic_regression: {
            c.weights_.assign(d, 0.0);
            c.bias_ = 0.0;
            std::vector<double> gw(d);
            for (int it = 0; it < hp.iterations; ++it) {
                std::fill(gw.begin(), gw.end(), 0.0);
                double gb = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto row = xs.row(i);
                    const double err = sigmoid(dot(c.weights_, row) + c.bias_) - (y[i] == Label::valid ? 1.0 : 0.0);
                    for (std::size_t k = 0; k < d; ++k) gw[k] += err * row[k];
                    gb += err;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    c.weights_[k] -= hp.step * (gw[k] / static_cast<double>(n) + hp.l2 * c.weights_[k]);
                }
                c.bias_ -= hp.step * gb / static_cast<double>(n);
            }
            break;
        }
        case ClassifierKind::svm: {
            auto w = train_linear_svm(xs, y, hp.c, seed);
            c.bias_ = w.back();
            w.pop_back();
            c.weights_ = std::move(w);
            // Platt scaling on out-of-fold margins; fall back to in-sample margins when a
            // fold cannot be trained on both classes.
            std::vector<double> margins(n, 0.0);
            bool out_of_fold = true;
            const auto folds = stratified_folds(y, 5, derive_seed(seed, "platt"));
            for (int k = 0; k < 5 && out_of_fold; ++k) {
                std::vector<std::size_t> train_rows;
                std::vector<Label> train_y;
                bool has_valid = false;
                bool has_invalid = false;
                for (std::size_t i = 0; i < n; ++i) {
                    if (folds[i] == k) continue;
                    train_rows.push_back(i);
                    train_y.push_back(y[i]);
                    (y[i] == Label::valid ? has_valid : has_invalid) = true;
                }
                if (!has_valid || !has_invalid) {
                    out_of_fold = false;
                    break;
                }
                // Margins are computed in the full model's standardized space; the fold
                // models see the same standardized rows.
                const auto wf = train_linear_svm(xs.select(train_rows), train_y, hp.c,
                                                 derive_seed(seed, static_cast<std::uint64_t>(k)));
                for (std::size_t i = 0; i < n; ++i) {
                    if (folds[i] == k) margins[i] = svm_margin(wf, xs.row(i));
                }
            }
            if (!out_of_fold) {
                for (std::size_t i = 0; i < n; ++i) margins[i] = dot(c.weights_, xs.row(i)) + c.bias_;
            }
            std::tie(c.platt_a_, c.platt_b_) = fit_platt(margins, y);
            break;
        }
    }
    c.fitted_ = true;
    return c;
}

Prediction Classifier::predict(std::span<const double> raw) const {
    require(fitted_, ErrorCode::not_fitted, "classifier used before fit");
    require(raw.size() == n_features_, ErrorCode::dimension_mismatch, "feature vector has the wrong length");
    for (double v : raw) require(std::isfinite(v), ErrorCode::numeric, "non-finite feature passed to predict");
    std::vector<double> x(raw.size());
    standardizer_.apply(raw, x);
    double p = 0.5;
    switch (kind_) {
        case ClassifierKind::random_forest: {
            std::size_t votes = 0;
            for (const auto& t : trees_) {
                if (t.p_valid(x) > 0.5) ++votes;
            }
            p = static_cast<double>(votes) / static_cast<double>(trees_.size());
            break;
        }
        case ClassifierKind::decision_tree: p = trees_.front().p_valid(x); break;
        case ClassifierKind::logistic_regression: p = sigmoid(dot(weights_, x) + bias_); break;
        case ClassifierKind::svm: p = sigmoid(-(platt_a_ * (dot(weights_, x) + bias_) + platt_b_)); break;
    }
    Prediction out;
    out.p_valid = p;
    out.label = p > 0.5 ? Label::valid : Label::invalid;
    out.confidence = std::max(p, 1.0 - p);
    return out;
}

std::vector<double> Classifier::feature_importance() const {
    require(fitted_, ErrorCode::not_fitted, "classifier used before fit");
    require(kind_ == ClassifierKind::random_forest || kind_ == ClassifierKind::decision_tree,
            ErrorCode::invalid_argument,
            "feature importance is only defined for random_forest and decision_tree");
    std::vector<double> total(n_features_, 0.0);
    for (const auto& t : trees_) {
        auto imp = t.impurity_decrease(n_features_);
        const double s = std::accumulate(imp.begin(), imp.end(), 0.0);
        if (s <= 0.0) continue;
        for (std::size_t k = 0; k < imp.size(); ++k) total[k] += imp[k] / s;
    }
    const double s = std::accumulate(total.begin(), total.end(), 0.0);
    if (s > 0.0) {
        for (double& v : total) v /= s;
    }
    return total;
}

json Classifier::to_json() const {
    json trees = json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"format", "pairval-classifier"},
            {"version", 1},
            {"kind", to_string(kind_)},
            {"hyperparameters", hp_.to_json()},
            {"seed", seed_},
            {"n_features", n_features_},
            {"standardization", {{"mean", standardizer_.mean}, {"scale", standardizer_.scale}}},
            {"trees", trees},
            {"weights", weights_},
            {"bias", bias_},
            {"platt", {{"a", platt_a_}, {"b", platt_b_}}}};
}

Classifier Classifier::from_json(const json& j) {
    require(j.value("format", "") == "pairval-classifier" && j.value("version", 0) == 1, ErrorCode::parse,
            "not a version-1 pairval classifier dump");
    Classifier c;
    c.kind_ = parse_classifier_kind(j.at("kind").get<std::string>());
    c.hp_ = Hyperparams::from_json(j.at("hyperparameters"));
    c.seed_ = j.at("seed").get<std::uint64_t>();
    c.n_features_ = j.at("n_features").get<std::size_t>();
    c.standardizer_.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    c.standardizer_.scale = j.at("standardization").at("scale").get<std::vector<double>>();
    require(c.standardizer_.mean.size() == c.n_features_ && c.standardizer_.scale.size() == c.n_features_,
            ErrorCode::parse, "standardization length mismatch");
    for (const auto& t : j.at("trees")) c.trees_.push_back(DecisionTree::from_json(t));
    c.weights_ = j.at("weights").get<std::vector<double>>();
    c.bias_ = j.at("bias").get<double>();
    c.platt_a_ = j.at("platt").at("a").get<double>();
    c.platt_b_ = j.at("platt").at("b").get<double>();
    switch (c.kind_) {
        case ClassifierKind::random_forest:
        case ClassifierKind::decision_tree:
            require(!c.trees_.empty(), ErrorCode::parse, "tree model without trees");
            break;
        default:
            require(c.weights_.size() == c.n_features_, ErrorCode::parse, "linear model weight length mismatch");
    }
    c.fitted_ = true;
    return c;
}

std::string Classifier::fingerprint() const { return hex64(fnv1a64(to_json().dump())); }

double cross_validate(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y, const Hyperparams& hp,
                      int folds, std::uint64_t seed) {
    const auto assignment = stratified_folds(y, folds, seed);
    std::size_t correct = 0;
    std::size_t total = 0;
    for (int k = 0; k < folds; ++k) {
        std::vector<std::size_t> train_rows;
        std::vector<std::size_t> test_rows;
        std::vector<Label> train_y;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (assignment[i] == k) {
                test_rows.push_back(i);
            } else {
                train_rows.push_back(i);
                train_y.push_back(y[i]);
            }
        }
        if (test_rows.empty() || train_rows.empty()) continue;
        const auto model = Classifier::train(kind, x.select(train_rows), train_y, hp,
                                             derive_seed(seed, static_cast<std::uint64_t>(k)));
        for (auto i : test_rows) {
            if (model.predict(x.row(i)).label == y[i]) ++correct;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TunedClassifier fit(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y, const TuneGrid& grid,
                    std::uint64_t seed) {
    require(x.rows() == y.size(), ErrorCode::invalid_argument, "features and labels differ in length");
    require(x.rows() >= 10, ErrorCode::invalid_argument,
            "need at least 10 labelled examples to fit, got " + std::to_string(x.rows()));
    const bool has_valid = std::find(y.begin(), y.end(), Label::valid) != y.end();
    const bool has_invalid = std::find(y.begin(), y.end(), Label::invalid) != y.end();
    require(has_valid && has_invalid, ErrorCode::degenerate_data,
            "training set contains a single class; both valid and invalid examples are required");
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (double v : x.row(r)) require(std::isfinite(v), ErrorCode::numeric, "non-finite training feature");
    }
    const auto& candidates = grid.for_kind(kind);
    require(!candidates.empty(), ErrorCode::invalid_argument, "empty hyperparameter grid");

    TunedClassifier best{Classifier{}, candidates.front(), -1.0};
    const std::uint64_t cv_seed = derive_seed(seed, "cv");
    for (const auto& hp : candidates) {
        const double acc = cross_validate(kind, x, y, hp, grid.folds, cv_seed);
        if (acc > best.cv_accuracy) {
            best.cv_accuracy = acc;
            best.chosen = hp;
        }
    }
    best.model = Classifier::train(kind, x, y, best.chosen, seed);
    return best;
}

TunedClassifier fit(ClassifierKind kind, std::span<const LabeledExample> examples, const TuneGrid& grid,
                    std::uint64_t seed) {
    FeatureMatrix x;
    std::vector<Label> y;
    for (const auto& e : examples) {
        x.push_row(e.features.span());
        y.push_back(e.label);
    }
    return fit(kind, x, y, grid, seed);
}

}  // namespace pairval::learn

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pairval/types.hpp"

namespace pairval::learn {

enum class ClassifierKind { random_forest, decision_tree, svm, logistic_regression };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view text);

/// Dense row-major feature matrix.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    void push_row(std::span<const double> row);
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    FeatureMatrix select(std::span<const std::size_t> rows) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LabeledExample {
    std::string id;
    MetricVector features;
    Label label = Label::invalid;
};

struct Hyperparams {
    int trees = 100;
    std::optional<int> max_depth;  // nullopt: grow until pure
    int min_leaf = 1;
    double c = 1.0;                // SVM box constraint
    double l2 = 0.01;              // logistic regression L2 strength
    int iterations = 500;          // logistic regression gradient steps
    double step = 0.5;             // logistic regression step size

    nlohmann::json to_json() const;
    static Hyperparams from_json(const nlohmann::json& j);
    bool operator==(const Hyperparams&) const = default;
};

struct TuneGrid {
    std::vector<Hyperparams> random_forest;
    std::vector<Hyperparams> decision_tree;
    std::vector<Hyperparams> svm;
    std::vector<Hyperparams> logistic_regression;
    int folds = 5;

    /// RF {100 trees; depth 8|none; min_leaf 1|5}, DT {depth 4|8|none; min_leaf 1|5},
    /// linear SVM {C 0.1|1|10}, LR {L2 0.01|0.1|1; 500 steps}.
    static TuneGrid defaults();
    const std::vector<Hyperparams>& for_kind(ClassifierKind kind) const;

    nlohmann::json to_json() const;
    /// Missing kinds fall back to the defaults.
    static TuneGrid from_json(const nlohmann::json& j);
};

struct Prediction {
    Label label = Label::invalid;
    double confidence = 0.5;  // max class probability, in [0.5, 1]
    double p_valid = 0.5;
};

/// Per-feature z-scoring; zero-variance columns are only centred.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const FeatureMatrix& x);
    void apply(std::span<const double> in, std::span<double> out) const;
    FeatureMatrix apply(const FeatureMatrix& x) const;
};

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double weight_valid = 0.0;
    double weight_total = 0.0;

    double p_valid() const { return weight_total > 0.0 ? weight_valid / weight_total : 0.5; }
};

/// CART with Gini impurity and midpoint thresholds.
class DecisionTree {
public:
    struct Options {
        std::optional<int> max_depth;
        int min_leaf = 1;
        int max_features = 0;  // 0: consider every feature at every node
    };

    /// `weights[i]` is the multiplicity of row i (bootstrap counts; 0 excludes the row).
    static DecisionTree fit(const FeatureMatrix& x, std::span<const Label> y, std::span<const double> weights,
                            const Options& opts, std::mt19937_64& rng);

    const TreeNode& leaf_for(std::span<const double> x) const;
    double p_valid(std::span<const double> x) const { return leaf_for(x).p_valid(); }
    /// Weighted Gini decrease accumulated per feature (unnormalized).
    std::vector<double> impurity_decrease(std::size_t n_features) const;

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::vector<TreeNode>& nodes() { return nodes_; }

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);

private:
    std::vector<TreeNode> nodes_;
};

class Classifier {
public:
    ClassifierKind kind() const { return kind_; }
    const Hyperparams& hyperparams() const { return hp_; }
    std::uint64_t seed() const { return seed_; }
    bool fitted() const { return fitted_; }

    /// Throws ErrorCode::numeric on non-finite input and ErrorCode::not_fitted before fit.
    Prediction predict(std::span<const double> raw_features) const;
    Prediction predict(const MetricVector& features) const { return predict(features.span()); }

    /// Mean decrease in Gini impurity, normalized to sum to 1 (RF/DT only).
    std::vector<double> feature_importance() const;

    nlohmann::json to_json() const;
    static Classifier from_json(const nlohmann::json& j);
    /// Stable hash of to_json().
    std::string fingerprint() const;

    /// Fits with fixed hyperparameters. Tolerates single-class input (used inside CV).
    static Classifier train(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y,
                            const Hyperparams& hp, std::uint64_t seed);

private:
    ClassifierKind kind_ = ClassifierKind::random_forest;
    Hyperparams hp_;
    std::uint64_t seed_ = 0;
    bool fitted_ = false;
    Standardizer standardizer_;
    std::vector<DecisionTree> trees_;
    std::vector<double> weights_;
    double bias_ = 0.0;
    double platt_a_ = 0.0;
    double platt_b_ = 0.0;
    std::size_t n_features_ = 0;
};

/// Stratified k-fold assignment: fold index per row, seeded.
std::vector<int> stratified_folds(std::span<const Label> y, int folds, std::uint64_t seed);

/// Pooled k-fold accuracy for one hyperparameter setting.
double cross_validate(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y, const Hyperparams& hp,
                      int folds, std::uint64_t seed);

struct TunedClassifier {
    Classifier model;
    Hyperparams chosen;
    double cv_accuracy = 0.0;
};

/// Chooses hyperparameters by k-fold CV accuracy (ties: first grid entry) and
/// refits on everything. Requires >= 10 examples with both classes present.
TunedClassifier fit(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y, const TuneGrid& grid,
                    std::uint64_t seed);
TunedClassifier fit(ClassifierKind kind, std::span<const LabeledExample> examples, const TuneGrid& grid,
                    std::uint64_t seed);

/// Platt sigmoid P(valid | f) = 1 / (1 + exp(a f + b)) fitted by Newton's method.
std::pair<double, double> fit_platt(std::span<const double> decision_values, std::span<const Label> y);

}  // namespace pairval::learn

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pairval/alcore.hpp"
#include "pairval/baselines.hpp"
#include "pairval/stats.hpp"
#include "pairval/vae.hpp"

namespace pairval::eval {

struct RunResult {
    std::string config_id;
    std::string method;  // "hil_tv", "hil_tv_no_al", "b_vif", "b_vae"
    nlohmann::json config;
    bool ok = true;
    std::string error;
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    double human_effort = 0.0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    double wall_time = 0.0;  // seconds; excluded from the results file

    nlohmann::json to_json() const;
};

/// A labelled dataset as the harness sees it: metric rows plus ground truth.
struct LabeledDataset {
    std::vector<al::Item> items;  // known_label = ground truth
    std::map<std::string, Label> truth;

    static LabeledDataset from_items(std::vector<al::Item> items);
};

/// Scores final labels against ground truth over the whole dataset.
stats::Score score_labels(const std::map<std::string, Label>& labels, const std::map<std::string, Label>& truth);

// ------------------------------------------------------------------ RQ1

struct GridSpec {
    std::vector<learn::ClassifierKind> kinds;
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<double> dv_fractions;
    learn::TuneGrid tune = learn::TuneGrid::defaults();

    /// 4 classifiers x alpha {0.8,0.85,0.9,0.95,0.99} x beta {1,3,5,8,10,15}% x dv {10,15,20,25,30,40}%.
    static GridSpec defaults();
    std::size_t size() const { return kinds.size() * alphas.size() * betas.size() * dv_fractions.size(); }
    nlohmann::json to_json() const;
    static GridSpec from_json(const nlohmann::json& j);  // missing axes use the defaults
};

/// Canonical id, e.g. "random_forest|a=0.9|b=0.05|dv=0.1".
std::string config_id(learn::ClassifierKind kind, double alpha, double beta, double dv);

/// One simulated-oracle run of the loop. Errors are captured in the result.
RunResult run_al_once(const LabeledDataset& data, const al::ALConfig& cfg, const std::string& id);

/// One run per configuration, seeded by derive_seed(master_seed, config id).
/// Failed runs are recorded and the sweep continues.
std::vector<RunResult> grid_search(const LabeledDataset& data, const GridSpec& spec, std::uint64_t master_seed,
                                   const std::function<void(std::size_t, std::size_t)>& progress = {});

/// CSV without wall times, so repeated executions produce identical bytes.
void write_results_csv(std::span<const RunResult> results, const std::filesystem::path& path);
std::vector<RunResult> read_results_csv(const std::filesystem::path& path);
/// Sidecar `config_id,wall_time_s`.
void write_timing_csv(std::span<const RunResult> results, const std::filesystem::path& path);

// -------------------------------------------------------------- Pareto

struct ParetoPoint {
    std::string config_id;
    double accuracy = 0.0;
    double effort = 0.0;
};

/// Indices into `points` of the non-dominated set (accuracy up, effort down),
/// in input order. Points sharing a config id are deduplicated (first wins);
/// distinct configs with identical coordinates are all kept.
std::vector<std::size_t> pareto_front(std::span<const ParetoPoint> points);
std::vector<ParetoPoint> to_points(std::span<const RunResult> results);  // ok runs only

// ------------------------------------------------------ characterization

struct TreeSummary {
    std::vector<std::string> rules;  // indented text, one node per line, "N = [unacceptable, acceptable]"
    std::size_t acceptable = 0;
    std::size_t unacceptable = 0;
    nlohmann::json tree;             // node dump for machine use
};

/// Depth <= 4 tree over (classifier one-hot, alpha, beta, dv) predicting acceptability.
TreeSummary characterize_configs(std::span<const RunResult> results,
                                 const std::function<bool(const RunResult&)>& acceptable, int max_depth = 4);

// ------------------------------------------------------------------ RQ2

struct Rq2Spec {
    std::vector<double> efforts = {0.25, 0.5, 0.75};
    int repetitions = 20;
    double alpha = 0.9;
    double beta = 0.05;
    learn::ClassifierKind kind = learn::ClassifierKind::random_forest;
    learn::TuneGrid tune = learn::TuneGrid::defaults();
    double threshold_step = 1e-3;
    /// Retrain the B-VAE autoencoder on each training split's originals (needs images).
    bool retrain_vae = true;
    features::VaeConfig vae;

    nlohmann::json to_json() const;
    static Rq2Spec from_json(const nlohmann::json& j);
};

struct MethodSummary {
    std::string method;
    double effort = 0.0;
    std::vector<double> accuracy, precision, recall;  // undefined precision/recall values are omitted
};

struct Comparison {
    double effort = 0.0;
    std::string metric;  // accuracy | precision | recall
    std::string a, b;
    double p_value = 1.0;
    double a12 = 0.5;
    stats::EffectSize band = stats::EffectSize::negligible;
};

struct Rq2Report {
    std::vector<RunResult> runs;
    std::vector<MethodSummary> summaries;
    std::vector<Comparison> comparisons;  // every method pair, every effort, every metric

    nlohmann::json to_json() const;
    std::string to_markdown() const;
    const MethodSummary* find(const std::string& method, double effort) const;
    const Comparison* find_comparison(const std::string& a, const std::string& b, double effort,
                                      const std::string& metric = "accuracy") const;
};

/// Per effort level x and repetition r, draws one training split of round(x n)
/// pairs shared by all four methods. HiL-TV uses half of it as D_v and at most
/// the other half's size in manual labels; the remaining methods train on the split.
/// `images` (same order as data.items) enables B-VAE retraining per split.
Rq2Report rq2_protocol(const LabeledDataset& data, const Rq2Spec& spec, std::uint64_t seed,
                       std::span<const ImagePair> images = {});

// ------------------------------------------------------------------ RQ3

struct MetricCorrelation {
    std::string metric;
    std::optional<double> r;
    std::optional<double> p_value;
};

struct CorrelationReport {
    std::vector<MetricCorrelation> per_metric;  // in metric order
    std::vector<std::string> top;               // up to 5 by |r|, descending
    struct Redundant {
        std::string a, b;
        double r;
    };
    std::vector<Redundant> redundant;  // |r| > threshold between metric columns

    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

CorrelationReport correlate(const LabeledDataset& data, double redundancy_threshold = 0.9, std::size_t top_k = 5);

}  // namespace pairval::eval

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pairval/learners.hpp"
#include "pairval/types.hpp"

namespace pairval::al {

enum class Provenance {
    pre_validated,
    auto_accepted,
    manual,
    /// Labelled by the last classifier after a manual-label budget ran out.
    fallback,
};

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

struct ALConfig {
    double alpha = 0.9;            // confidence gate; > 1 forces fully manual labelling
    double beta_fraction = 0.05;   // manual batch as a fraction of the initial D_nv
    double dv_fraction = 0.10;     // pre-validated share of the dataset
    learn::ClassifierKind kind = learn::ClassifierKind::random_forest;
    learn::TuneGrid grid = learn::TuneGrid::defaults();
    std::uint64_t seed = 0;
    /// Cap on loop-phase manual labels; once reached the rest of D_nv gets fallback labels.
    std::optional<std::size_t> manual_budget;
    int max_resamples = 10;

    void validate() const;
    nlohmann::json to_json() const;
    static ALConfig from_json(const nlohmann::json& j);
};

/// One pair as seen by the loop. `known_label` marks pairs eligible for the
/// pre-validated draw (a human already labelled them).
struct Item {
    std::string id;
    MetricVector features;
    std::optional<Label> known_label;
};

struct LabelRecord {
    Label label = Label::invalid;
    Provenance provenance = Provenance::pre_validated;
    std::optional<double> confidence;  // set for auto and fallback labels
    int iteration = 0;                 // 0 for pre-validated
};

struct IterationLog {
    int iteration = 0;
    std::size_t d_val = 0;          // after the iteration
    std::size_t d_nv = 0;
    std::vector<std::pair<std::string, double>> accepted;  // auto labels with confidence
    std::vector<std::string> manual;
    std::vector<std::string> fallback;
    std::string classifier_fingerprint;  // classifier used for this iteration's sweep

    nlohmann::json to_json() const;
    static IterationLog from_json(const nlohmann::json& j);
};

/// The active-learning loop as a resumable state machine. It blocks whenever it needs
/// human labels: pending() lists the ids, submit() records answers, and
/// advance() continues once every pending pair has an answer.
class Engine {
public:
    /// Draws D_v (or uses `initial_dv`), trains with CV tuning, runs the first sweep
    /// and draws the first manual batch.
    Engine(std::vector<Item> items, ALConfig cfg, std::optional<std::vector<std::string>> initial_dv = {});

    /// Rebuilds an engine from a checkpoint written by checkpoint(). Throws
    /// ErrorCode::conflict when the config or items do not match the checkpoint.
    static Engine restore(const nlohmann::json& checkpoint, std::vector<Item> items, ALConfig cfg);

    bool done() const { return done_; }
    int iteration() const { return iteration_; }
    /// Pairs awaiting a human label, sorted by id.
    const std::vector<std::string>& pending() const { return pending_; }
    const std::map<std::string, Label>& submitted() const { return submitted_; }
    bool awaiting_labels() const { return !done_ && submitted_.size() < pending_.size(); }

    /// ErrorCode::conflict for ids that are not pending or already answered.
    void submit(const std::string& id, Label label);
    /// Moves answered pairs into D_val, retrains, sweeps and draws the next batch.
    void advance();

    const std::vector<Item>& items() const { return items_; }
    const ALConfig& config() const { return cfg_; }
    const std::map<std::string, LabelRecord>& validated() const { return d_val_; }
    const std::set<std::string>& not_validated() const { return d_nv_; }
    const std::vector<std::string>& pre_validated() const { return d_v_; }
    const std::vector<IterationLog>& log() const { return log_; }
    const learn::Classifier& classifier() const { return classifier_; }
    const learn::Hyperparams& tuned_hyperparams() const { return tuned_; }
    std::size_t batch_size() const { return beta_count_; }
    std::size_t manual_count() const { return manual_count_; }
    /// (|D_v| + manual labels) / dataset size.
    double human_effort() const;
    std::optional<double> latest_confidence(const std::string& id) const;

    nlohmann::json checkpoint() const;
    /// Hash over config and item ids/features; stored in checkpoints.
    std::string fingerprint() const;

private:
    Engine() = default;
    void select_initial_dv(std::optional<std::vector<std::string>> initial_dv);
    void train_initial();
    void retrain();
    void sweep_and_draw();
    const Item& item(const std::string& id) const;

    std::vector<Item> items_;
    std::map<std::string, std::size_t> index_;
    ALConfig cfg_;
    std::mt19937_64 rng_;
    std::vector<std::string> d_v_;
    std::map<std::string, LabelRecord> d_val_;
    std::set<std::string> d_nv_;
    std::vector<std::string> pending_;
    std::map<std::string, Label> submitted_;
    std::map<std::string, double> last_confidence_;
    std::vector<IterationLog> log_;
    IterationLog current_;
    learn::Classifier classifier_;
    learn::Hyperparams tuned_;
    double cv_accuracy_ = 0.0;
    std::size_t beta_count_ = 1;
    std::size_t manual_count_ = 0;
    int iteration_ = 0;
    bool done_ = false;
};

class Oracle {
public:
    virtual ~Oracle() = default;
    virtual Label label(const std::string& pair_id) = 0;
};

/// Answers from a ground-truth table; throws ErrorCode::not_found for unknown ids.
class SimulatedOracle : public Oracle {
public:
    explicit SimulatedOracle(std::map<std::string, Label> truth) : truth_(std::move(truth)) {}
    Label label(const std::string& pair_id) override;

private:
    std::map<std::string, Label> truth_;
};

struct RunOptions {
    std::optional<std::filesystem::path> checkpoint_path;  // rewritten atomically after every step
    std::optional<std::filesystem::path> log_path;         // JSON lines, one per iteration
    std::optional<int> stop_after_iterations;              // stop early (for interruption tests)
};

/// Drives the engine with the oracle until done (or the iteration limit). If the
/// oracle throws, the checkpoint reflects the last completed step and the error propagates.
void run(Engine& engine, Oracle& oracle, const RunOptions& opts = {});

/// Final label per item id.
std::map<std::string, Label> final_labels(const Engine& engine);

void write_run_log(const Engine& engine, const std::filesystem::path& path);

}  // namespace pairval::al

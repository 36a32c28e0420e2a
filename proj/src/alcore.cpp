#include "pairval/alcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "pairval/util.hpp"

namespace pairval::al {

using nlohmann::json;

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::pre_validated: return "pre_validated";
        case Provenance::auto_accepted: return "auto";
        case Provenance::manual: return "manual";
        case Provenance::fallback: return "fallback";
    }
    return "unknown";
}

Provenance parse_provenance(std::string_view text) {
    if (text == "pre_validated") return Provenance::pre_validated;
    if (text == "auto") return Provenance::auto_accepted;
    if (text == "manual") return Provenance::manual;
    if (text == "fallback") return Provenance::fallback;
    fail(ErrorCode::parse, "unknown provenance '" + std::string(text) + "'");
}

void ALConfig::validate() const {
    require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::invalid_argument, "alpha must be >= 0");
    require(beta_fraction > 0.0 && beta_fraction <= 1.0, ErrorCode::invalid_argument, "beta must lie in (0, 1]");
    require(dv_fraction >= 0.0 && dv_fraction < 1.0, ErrorCode::invalid_argument, "dv_fraction must lie in [0, 1)");
    require(max_resamples >= 0, ErrorCode::invalid_argument, "max_resamples must be >= 0");
    require(!grid.for_kind(kind).empty(), ErrorCode::invalid_argument, "empty hyperparameter grid");
}

json ALConfig::to_json() const {
    json j = {{"alpha", alpha},
              {"beta", beta_fraction},
              {"dv_fraction", dv_fraction},
              {"classifier", learn::to_string(kind)},
              {"grid", grid.to_json()},
              {"seed", seed},
              {"max_resamples", max_resamples}};
    j["manual_budget"] = manual_budget ? json(*manual_budget) : json(nullptr);
    return j;
}

ALConfig ALConfig::from_json(const json& j) {
    ALConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.beta_fraction = j.value("beta", j.value("beta_fraction", c.beta_fraction));
    c.dv_fraction = j.value("dv_fraction", c.dv_fraction);
    if (j.contains("classifier")) c.kind = learn::parse_classifier_kind(j.at("classifier").get<std::string>());
    if (j.contains("grid")) c.grid = learn::TuneGrid::from_json(j.at("grid"));
    c.seed = j.value("seed", c.seed);
    c.max_resamples = j.value("max_resamples", c.max_resamples);
    if (j.contains("manual_budget") && !j.at("manual_budget").is_null()) {
        c.manual_budget = j.at("manual_budget").get<std::size_t>();
    }
    c.validate();
    return c;
}

json IterationLog::to_json() const {
    json acc = json::array();
    for (const auto& [id, conf] : accepted) acc.push_back({{"id", id}, {"confidence", conf}});
    return {{"iteration", iteration}, {"d_val", d_val},      {"d_nv", d_nv},
            {"accepted", acc},        {"manual", manual},    {"fallback", fallback},
            {"classifier_fingerprint", classifier_fingerprint}};
}

IterationLog IterationLog::from_json(const json& j) {
    IterationLog l;
    l.iteration = j.at("iteration").get<int>();
    l.d_val = j.at("d_val").get<std::size_t>();
    l.d_nv = j.at("d_nv").get<std::size_t>();
    for (const auto& a : j.at("accepted")) l.accepted.emplace_back(a.at("id").get<std::string>(), a.at("confidence").get<double>());
    l.manual = j.at("manual").get<std::vector<std::string>>();
    l.fallback = j.at("fallback").get<std::vector<std::string>>();
    l.classifier_fingerprint = j.at("classifier_fingerprint").get<std::string>();
    return l;
}

namespace {

std::string items_config_fingerprint(const std::vector<Item>& items, const ALConfig& cfg) {
    std::uint64_t h = fnv1a64(cfg.to_json().dump());
    for (const auto& it : items) {
        h = fnv1a64(it.id, h);
        json row = json::array();
        for (double v : it.features.values) row.push_back(v);
        row.push_back(it.known_label ? std::string(to_string(*it.known_label)) : std::string());
        h = fnv1a64(row.dump(), h);
    }
    return hex64(h);
}

learn::FeatureMatrix training_matrix(const std::map<std::string, LabelRecord>& d_val,
                                     const std::map<std::string, std::size_t>& index, const std::vector<Item>& items,
                                     std::vector<Label>& y) {
    learn::FeatureMatrix x;
    y.clear();
    for (const auto& [id, rec] : d_val) {
        x.push_row(items[index.at(id)].features.span());
        y.push_back(rec.label);
    }
    return x;
}

}  // namespace

Engine::Engine(std::vector<Item> items, ALConfig cfg, std::optional<std::vector<std::string>> initial_dv)
    : items_(std::move(items)), cfg_(std::move(cfg)) {
    cfg_.validate();
    require(items_.size() >= 10, ErrorCode::invalid_argument,
            "the loop needs at least 10 pairs, got " + std::to_string(items_.size()));
    for (std::size_t i = 0; i < items_.size(); ++i) {
        require(items_[i].features.all_finite(), ErrorCode::numeric, "non-finite features for '" + items_[i].id + "'");
        require(index_.emplace(items_[i].id, i).second, ErrorCode::duplicate_id, "duplicate pair id '" + items_[i].id + "'");
    }
    rng_.seed(cfg_.seed);
    select_initial_dv(std::move(initial_dv));
    for (const auto& it : items_) {
        if (!d_val_.count(it.id)) d_nv_.insert(it.id);
    }
    // Subtracting a tiny slack keeps e.g. 0.01 * 100 from rounding up to 2.
    const double raw = cfg_.beta_fraction * static_cast<double>(d_nv_.size());
    beta_count_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
    train_initial();
    iteration_ = 1;
    sweep_and_draw();
}

void Engine::select_initial_dv(std::optional<std::vector<std::string>> initial_dv) {
    if (initial_dv) {
        for (const auto& id : *initial_dv) {
            const Item& it = item(id);
            require(it.known_label.has_value(), ErrorCode::invalid_argument,
                    "pre-validated pair '" + id + "' has no label");
            require(d_val_.emplace(id, LabelRecord{*it.known_label, Provenance::pre_validated, std::nullopt, 0}).second,
                    ErrorCode::duplicate_id, "pair '" + id + "' listed twice in D_v");
        }
        d_v_ = *initial_dv;
        std::sort(d_v_.begin(), d_v_.end());
        bool has_valid = false;
        bool has_invalid = false;
        for (const auto& [id, rec] : d_val_) (rec.label == Label::valid ? has_valid : has_invalid) = true;
        require(has_valid && has_invalid, ErrorCode::degenerate_data,
                "the pre-validated set must contain both valid and invalid pairs");
        return;
    }

    std::vector<std::string> pool;
    for (const auto& it : items_) {
        if (it.known_label) pool.push_back(it.id);
    }
    const auto count = static_cast<std::size_t>(std::llround(cfg_.dv_fraction * static_cast<double>(items_.size())));
    require(count <= pool.size(), ErrorCode::invalid_argument,
            "D_v needs " + std::to_string(count) + " labelled pairs but only " + std::to_string(pool.size()) +
                " pairs carry a label");
    for (int attempt = 0; attempt <= cfg_.max_resamples; ++attempt) {
        std::vector<std::string> draw = pool;
        for (std::size_t k = 0; k < count; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, draw.size() - 1);
            std::swap(draw[k], draw[pick(rng_)]);
        }
        draw.resize(count);
        bool has_valid = false;
        bool has_invalid = false;
        for (const auto& id : draw) (*item(id).known_label == Label::valid ? has_valid : has_invalid) = true;
        if (has_valid && has_invalid) {
            std::sort(draw.begin(), draw.end());
            for (const auto& id : draw) {
                d_val_.emplace(id, LabelRecord{*item(id).known_label, Provenance::pre_validated, std::nullopt, 0});
            }
            d_v_ = std::move(draw);
            return;
        }
    }
    fail(ErrorCode::degenerate_data, "D_v drew a single class in " + std::to_string(cfg_.max_resamples + 1) +
                                         " attempts; both valid and invalid pre-validated pairs are required");
}

const Item& Engine::item(const std::string& id) const {
    const auto it = index_.find(id);
    require(it != index_.end(), ErrorCode::not_found, "unknown pair id '" + id + "'");
    return items_[it->second];
}

void Engine::train_initial() {
    std::vector<Label> y;
    const auto x = training_matrix(d_val_, index_, items_, y);
    auto tuned = learn::fit(cfg_.kind, x, y, cfg_.grid, derive_seed(cfg_.seed, "train"));
    classifier_ = std::move(tuned.model);
    tuned_ = tuned.chosen;
    cv_accuracy_ = tuned.cv_accuracy;
}

void Engine::retrain() {
    std::vector<Label> y;
    const auto x = training_matrix(d_val_, index_, items_, y);
    classifier_ = learn::Classifier::train(cfg_.kind, x, y, tuned_,
                                           derive_seed(derive_seed(cfg_.seed, "train"), static_cast<std::uint64_t>(iteration_)));
}

void Engine::sweep_and_draw() {
    current_ = IterationLog{};
    current_.iteration = iteration_;
    current_.classifier_fingerprint = classifier_.fingerprint();

    std::vector<std::string> accepted;
    for (const auto& id : d_nv_) {
        const auto p = classifier_.predict(item(id).features);
        last_confidence_[id] = p.confidence;
        if (p.confidence >= cfg_.alpha) {
            d_val_[id] = LabelRecord{p.label, Provenance::auto_accepted, p.confidence, iteration_};
            current_.accepted.emplace_back(id, p.confidence);
            accepted.push_back(id);
        }
    }
    for (const auto& id : accepted) d_nv_.erase(id);

    std::size_t batch = std::min(beta_count_, d_nv_.size());
    if (cfg_.manual_budget) batch = std::min(batch, *cfg_.manual_budget - std::min(*cfg_.manual_budget, manual_count_));
    if (!d_nv_.empty() && batch == 0) {
        for (const auto& id : d_nv_) {
            const auto p = classifier_.predict(item(id).features);
            d_val_[id] = LabelRecord{p.label, Provenance::fallback, p.confidence, iteration_};
            current_.fallback.push_back(id);
        }
        d_nv_.clear();
    }
    if (d_nv_.empty()) {
        current_.d_val = d_val_.size();
        current_.d_nv = 0;
        log_.push_back(current_);
        pending_.clear();
        submitted_.clear();
        done_ = true;
        return;
    }

    std::vector<std::string> candidates(d_nv_.begin(), d_nv_.end());
    for (std::size_t k = 0; k < batch; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
        std::swap(candidates[k], candidates[pick(rng_)]);
    }
    candidates.resize(batch);
    std::sort(candidates.begin(), candidates.end());
    pending_ = std::move(candidates);
    submitted_.clear();
}

void Engine::submit(const std::string& id, Label label) {
    require(!done_, ErrorCode::conflict, "the run is already complete");
    require(std::binary_search(pending_.begin(), pending_.end(), id), ErrorCode::conflict,
            "pair '" + id + "' is not awaiting a label");
    require(!submitted_.count(id), ErrorCode::conflict, "pair '" + id + "' was already labelled");
    submitted_.emplace(id, label);
}

void Engine::advance() {
    require(!done_, ErrorCode::state, "the run is already complete");
    require(submitted_.size() == pending_.size(), ErrorCode::state,
            "cannot advance before every pending pair is labelled");
    for (const auto& id : pending_) {
        d_val_[id] = LabelRecord{submitted_.at(id), Provenance::manual, std::nullopt, iteration_};
        d_nv_.erase(id);
        current_.manual.push_back(id);
        ++manual_count_;
    }
    current_.d_val = d_val_.size();
    current_.d_nv = d_nv_.size();
    log_.push_back(current_);
    pending_.clear();
    submitted_.clear();
    if (d_nv_.empty()) {
        done_ = true;
        return;
    }
    retrain();
    ++iteration_;
    sweep_and_draw();
}

double Engine::human_effort() const {
    return static_cast<double>(d_v_.size() + manual_count_) / static_cast<double>(items_.size());
}

std::optional<double> Engine::latest_confidence(const std::string& id) const {
    const auto it = last_confidence_.find(id);
    if (it == last_confidence_.end()) return std::nullopt;
    return it->second;
}

std::string Engine::fingerprint() const { return items_config_fingerprint(items_, cfg_); }

json Engine::checkpoint() const {
    json val = json::object();
    for (const auto& [id, r] : d_val_) {
        json rec = {{"label", to_string(r.label)}, {"provenance", to_string(r.provenance)}, {"iteration", r.iteration}};
        rec["confidence"] = r.confidence ? json(*r.confidence) : json(nullptr);
        val[id] = rec;
    }
    json submitted = json::object();
    for (const auto& [id, l] : submitted_) submitted[id] = to_string(l);
    json logs = json::array();
    for (const auto& l : log_) logs.push_back(l.to_json());
    std::ostringstream rng;
    rng << rng_;
    return {{"format", "pairval-al-checkpoint"},
            {"version", 1},
            {"fingerprint", fingerprint()},
            {"config", cfg_.to_json()},
            {"iteration", iteration_},
            {"done", done_},
            {"rng", rng.str()},
            {"d_v", d_v_},
            {"d_val", val},
            {"d_nv", std::vector<std::string>(d_nv_.begin(), d_nv_.end())},
            {"pending", pending_},
            {"submitted", submitted},
            {"last_confidence", last_confidence_},
            {"log", logs},
            {"current", current_.to_json()},
            {"classifier", classifier_.to_json()},
            {"tuned", tuned_.to_json()},
            {"cv_accuracy", cv_accuracy_},
            {"beta_count", beta_count_},
            {"manual_count", manual_count_}};
}

Engine Engine::restore(const json& cp, std::vector<Item> items, ALConfig cfg) {
    require(cp.value("format", "") == "pairval-al-checkpoint" && cp.value("version", 0) == 1, ErrorCode::parse,
            "not a version-1 checkpoint");
    cfg.validate();
    const auto expected = items_config_fingerprint(items, cfg);
    require(cp.at("fingerprint").get<std::string>() == expected, ErrorCode::conflict,
            "checkpoint was written for a different configuration or dataset");
    Engine e;
    e.items_ = std::move(items);
    e.cfg_ = std::move(cfg);
    for (std::size_t i = 0; i < e.items_.size(); ++i) e.index_.emplace(e.items_[i].id, i);
    std::istringstream rng(cp.at("rng").get<std::string>());
    rng >> e.rng_;
    require(!rng.fail(), ErrorCode::parse, "corrupt RNG state in checkpoint");
    e.iteration_ = cp.at("iteration").get<int>();
    e.done_ = cp.at("done").get<bool>();
    e.d_v_ = cp.at("d_v").get<std::vector<std::string>>();
    for (const auto& [id, rec] : cp.at("d_val").items()) {
        LabelRecord r;
        const auto label = parse_label(rec.at("label").get<std::string>());
        require(label.has_value(), ErrorCode::parse, "bad label in checkpoint");
        r.label = *label;
        r.provenance = parse_provenance(rec.at("provenance").get<std::string>());
        r.iteration = rec.at("iteration").get<int>();
        if (!rec.at("confidence").is_null()) r.confidence = rec.at("confidence").get<double>();
        e.item(id);
        e.d_val_.emplace(id, r);
    }
    for (const auto& id : cp.at("d_nv")) e.d_nv_.insert(id.get<std::string>());
    require(e.d_val_.size() + e.d_nv_.size() == e.items_.size(), ErrorCode::parse,
            "checkpoint sets do not cover the dataset");
    e.pending_ = cp.at("pending").get<std::vector<std::string>>();
    for (const auto& [id, l] : cp.at("submitted").items()) {
        const auto label = parse_label(l.get<std::string>());
        require(label.has_value(), ErrorCode::parse, "bad label in checkpoint");
        e.submitted_.emplace(id, *label);
    }
    e.last_confidence_ = cp.at("last_confidence").get<std::map<std::string, double>>();
    for (const auto& l : cp.at("log")) e.log_.push_back(IterationLog::from_json(l));
    e.current_ = IterationLog::from_json(cp.at("current"));
    e.classifier_ = learn::Classifier::from_json(cp.at("classifier"));
    e.tuned_ = learn::Hyperparams::from_json(cp.at("tuned"));
    e.cv_accuracy_ = cp.at("cv_accuracy").get<double>();
    e.beta_count_ = cp.at("beta_count").get<std::size_t>();
    e.manual_count_ = cp.at("manual_count").get<std::size_t>();
    return e;
}

Label SimulatedOracle::label(const std::string& pair_id) {
    const auto it = truth_.find(pair_id);
    require(it != truth_.end(), ErrorCode::not_found, "no ground truth for pair '" + pair_id + "'");
    return it->second;
}

namespace {

void persist(const Engine& engine, const RunOptions& opts) {
    if (opts.checkpoint_path) write_file_atomic(*opts.checkpoint_path, engine.checkpoint().dump());
    if (opts.log_path) write_run_log(engine, *opts.log_path);
}

}  // namespace

void run(Engine& engine, Oracle& oracle, const RunOptions& opts) {
    persist(engine, opts);
    while (!engine.done()) {
        if (opts.stop_after_iterations && engine.log().size() >= static_cast<std::size_t>(*opts.stop_after_iterations)) {
            return;
        }
        const auto pending = engine.pending();
        for (const auto& id : pending) {
            if (!engine.submitted().count(id)) engine.submit(id, oracle.label(id));
        }
        engine.advance();
        persist(engine, opts);
    }
}

std::map<std::string, Label> final_labels(const Engine& engine) {
    std::map<std::string, Label> out;
    for (const auto& [id, r] : engine.validated()) out.emplace(id, r.label);
    return out;
}

void write_run_log(const Engine& engine, const std::filesystem::path& path) {
    std::string text;
    for (const auto& l : engine.log()) text += l.to_json().dump() + "\n";
    write_file_atomic(path, text);
}

}  // namespace pairval::al

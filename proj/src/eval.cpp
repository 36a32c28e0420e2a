#include "pairval/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "pairval/util.hpp"

namespace pairval::eval {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

json RunResult::to_json() const {
    return {{"config_id", config_id}, {"method", method},     {"config", config},
            {"ok", ok},               {"error", error},       {"accuracy", accuracy},
            {"precision", optional_json(precision)},          {"recall", optional_json(recall)},
            {"human_effort", human_effort},                   {"seed", seed},
            {"iterations", iterations}};
}

LabeledDataset LabeledDataset::from_items(std::vector<al::Item> items) {
    LabeledDataset d;
    for (const auto& it : items) {
        require(it.known_label.has_value(), ErrorCode::invalid_argument,
                "pair '" + it.id + "' has no ground-truth label");
        require(d.truth.emplace(it.id, *it.known_label).second, ErrorCode::duplicate_id,
                "duplicate pair id '" + it.id + "'");
    }
    d.items = std::move(items);
    return d;
}

stats::Score score_labels(const std::map<std::string, Label>& labels, const std::map<std::string, Label>& truth) {
    std::vector<Label> pred;
    std::vector<Label> gold;
    for (const auto& [id, t] : truth) {
        const auto it = labels.find(id);
        require(it != labels.end(), ErrorCode::invalid_argument, "no final label for pair '" + id + "'");
        pred.push_back(it->second);
        gold.push_back(t);
    }
    return stats::score(pred, gold);
}

// ------------------------------------------------------------------ RQ1

GridSpec GridSpec::defaults() {
    GridSpec g;
    g.kinds = {learn::ClassifierKind::random_forest, learn::ClassifierKind::decision_tree, learn::ClassifierKind::svm,
               learn::ClassifierKind::logistic_regression};
    g.alphas = {0.8, 0.85, 0.9, 0.95, 0.99};
    g.betas = {0.01, 0.03, 0.05, 0.08, 0.10, 0.15};
    g.dv_fractions = {0.10, 0.15, 0.20, 0.25, 0.30, 0.40};
    return g;
}

json GridSpec::to_json() const {
    std::vector<std::string> k;
    for (auto kind : kinds) k.emplace_back(learn::to_string(kind));
    return {{"classifiers", k}, {"alphas", alphas}, {"betas", betas}, {"dv_fractions", dv_fractions}, {"tune", tune.to_json()}};
}

GridSpec GridSpec::from_json(const json& j) {
    GridSpec g = defaults();
    if (j.contains("classifiers")) {
        g.kinds.clear();
        for (const auto& k : j.at("classifiers")) g.kinds.push_back(learn::parse_classifier_kind(k.get<std::string>()));
    }
    if (j.contains("alphas")) g.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("betas")) g.betas = j.at("betas").get<std::vector<double>>();
    if (j.contains("dv_fractions")) g.dv_fractions = j.at("dv_fractions").get<std::vector<double>>();
    if (j.contains("tune")) g.tune = learn::TuneGrid::from_json(j.at("tune"));
    require(g.size() > 0, ErrorCode::invalid_argument, "grid has an empty axis");
    return g;
}

std::string config_id(learn::ClassifierKind kind, double alpha, double beta, double dv) {
    return std::string(learn::to_string(kind)) + "|a=" + csv::number(alpha) + "|b=" + csv::number(beta) +
           "|dv=" + csv::number(dv);
}

RunResult run_al_once(const LabeledDataset& data, const al::ALConfig& cfg, const std::string& id) {
    RunResult r;
    r.config_id = id;
    r.method = "hil_tv";
    r.config = {{"classifier", learn::to_string(cfg.kind)},
                {"alpha", cfg.alpha},
                {"beta", cfg.beta_fraction},
                {"dv_fraction", cfg.dv_fraction}};
    r.seed = cfg.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        al::Engine engine(data.items, cfg);
        al::SimulatedOracle oracle(data.truth);
        al::run(engine, oracle);
        const auto s = score_labels(al::final_labels(engine), data.truth);
        r.accuracy = s.accuracy;
        r.precision = s.precision;
        r.recall = s.recall;
        r.human_effort = engine.human_effort();
        r.iterations = engine.log().size();
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    r.wall_time = seconds_since(t0);
    return r;
}

std::vector<RunResult> grid_search(const LabeledDataset& data, const GridSpec& spec, std::uint64_t master_seed,
                                   const std::function<void(std::size_t, std::size_t)>& progress) {
    std::vector<RunResult> out;
    out.reserve(spec.size());
    for (auto kind : spec.kinds) {
        for (double alpha : spec.alphas) {
            for (double beta : spec.betas) {
                for (double dv : spec.dv_fractions) {
                    const auto id = config_id(kind, alpha, beta, dv);
                    al::ALConfig cfg;
                    cfg.kind = kind;
                    cfg.alpha = alpha;
                    cfg.beta_fraction = beta;
                    cfg.dv_fraction = dv;
                    cfg.grid = spec.tune;
                    cfg.seed = derive_seed(master_seed, id);
                    out.push_back(run_al_once(data, cfg, id));
                    if (progress) progress(out.size(), spec.size());
                }
            }
        }
    }
    return out;
}

namespace {

const char* kResultsHeader =
    "config_id,method,classifier,alpha,beta,dv_fraction,seed,status,accuracy,precision,recall,human_effort,iterations,"
    "error";

std::string config_field(const json& config, const char* key) {
    if (!config.contains(key)) return "";
    const auto& v = config.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return csv::number(v.get<double>());
    return "";
}

std::string opt_number(const std::optional<double>& v) { return v ? csv::number(*v) : "NA"; }

}  // namespace

void write_results_csv(std::span<const RunResult> results, const std::filesystem::path& path) {
    std::ostringstream out;
    out << kResultsHeader << '\n';
    for (const auto& r : results) {
        out << csv::quote(r.config_id) << ',' << r.method << ',' << config_field(r.config, "classifier") << ','
            << config_field(r.config, "alpha") << ',' << config_field(r.config, "beta") << ','
            << config_field(r.config, "dv_fraction") << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ','
            << csv::number(r.accuracy) << ',' << opt_number(r.precision) << ',' << opt_number(r.recall) << ','
            << csv::number(r.human_effort) << ',' << r.iterations << ',' << csv::quote(r.error) << '\n';
    }
    write_file_atomic(path, out.str());
}

void write_timing_csv(std::span<const RunResult> results, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "config_id,wall_time_s\n";
    for (const auto& r : results) out << csv::quote(r.config_id) << ',' << csv::number(r.wall_time) << '\n';
    write_file_atomic(path, out.str());
}

std::vector<RunResult> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open results file " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse, "results file is empty");
    const auto header = csv::split_row(csv::trim_eol(line));
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* needed : {"config_id", "accuracy", "human_effort"}) {
        require(col.count(needed), ErrorCode::parse, std::string("results file lacks column '") + needed + "'");
    }
    std::vector<RunResult> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = csv::trim_eol(line);
        if (trimmed.empty()) continue;
        const auto f = csv::split_row(trimmed);
        require(f.size() == header.size(), ErrorCode::parse,
                path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
        auto get = [&](const char* name) -> std::string {
            const auto it = col.find(name);
            return it == col.end() ? std::string() : f[it->second];
        };
        auto num = [&](const char* name) -> std::optional<double> {
            const auto s = get(name);
            if (s.empty() || s == "NA") return std::nullopt;
            const auto v = csv::parse_number(s);
            require(v.has_value(), ErrorCode::parse,
                    path.string() + ":" + std::to_string(line_no) + ": bad number in column '" + name + "'");
            return v;
        };
        RunResult r;
        r.config_id = get("config_id");
        r.method = get("method").empty() ? "hil_tv" : get("method");
        r.config = json::object();
        if (!get("classifier").empty()) r.config["classifier"] = get("classifier");
        for (const char* key : {"alpha", "beta", "dv_fraction"}) {
            if (auto v = num(key)) r.config[key] = *v;
        }
        r.ok = get("status").empty() || get("status") == "ok";
        r.error = get("error");
        r.accuracy = num("accuracy").value_or(0.0);
        r.precision = num("precision");
        r.recall = num("recall");
        r.human_effort = num("human_effort").value_or(0.0);
        if (!get("seed").empty()) r.seed = std::stoull(get("seed"));
        if (!get("iterations").empty()) r.iterations = std::stoull(get("iterations"));
        out.push_back(std::move(r));
    }
    return out;
}

// -------------------------------------------------------------- Pareto

std::vector<std::size_t> pareto_front(std::span<const ParetoPoint> points) {
    require(!points.empty(), ErrorCode::invalid_argument, "Pareto front of an empty result set");
    std::vector<std::size_t> unique;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (seen.insert(points[i].config_id).second) unique.push_back(i);
    }
    std::vector<std::size_t> order = unique;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].effort != points[b].effort) return points[a].effort < points[b].effort;
        return points[a].accuracy > points[b].accuracy;
    });
    std::vector<std::size_t> kept;
    double best_lower = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && points[order[j]].effort == points[order[i]].effort) ++j;
        const double top = points[order[i]].accuracy;
        if (top > best_lower) {
            for (std::size_t k = i; k < j && points[order[k]].accuracy == top; ++k) kept.push_back(order[k]);
        }
        best_lower = std::max(best_lower, top);
        i = j;
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

std::vector<ParetoPoint> to_points(std::span<const RunResult> results) {
    std::vector<ParetoPoint> out;
    for (const auto& r : results) {
        if (r.ok) out.push_back({r.config_id, r.accuracy, r.human_effort});
    }
    return out;
}

// ------------------------------------------------------ characterization

namespace {

const std::array<learn::ClassifierKind, 4> kKinds = {
    learn::ClassifierKind::random_forest, learn::ClassifierKind::decision_tree, learn::ClassifierKind::svm,
    learn::ClassifierKind::logistic_regression};

std::string describe_split(int feature, double threshold, bool left) {
    if (feature < 4) {
        const auto name = std::string(learn::to_string(kKinds[static_cast<std::size_t>(feature)]));
        return left ? "classifier != " + name : "classifier = " + name;
    }
    static const char* names[] = {"alpha", "beta", "dv"};
    return std::string(names[feature - 4]) + (left ? " <= " : " > ") + csv::number(threshold);
}

std::string counts(const learn::TreeNode& n) {
    const auto acc = static_cast<long long>(std::llround(n.weight_valid));
    const auto tot = static_cast<long long>(std::llround(n.weight_total));
    return "N = [" + std::to_string(tot - acc) + ", " + std::to_string(acc) + "]";
}

void render(const learn::DecisionTree& tree, int idx, const std::string& label, int depth,
            std::vector<std::string>& lines) {
    const auto& n = tree.nodes()[static_cast<std::size_t>(idx)];
    std::string line(static_cast<std::size_t>(depth) * 2, ' ');
    line += label + " " + counts(n);
    if (n.feature < 0) line += n.weight_valid * 2.0 > n.weight_total ? " -> acceptable" : " -> unacceptable";
    lines.push_back(line);
    if (n.feature >= 0) {
        render(tree, n.left, describe_split(n.feature, n.threshold, true), depth + 1, lines);
        render(tree, n.right, describe_split(n.feature, n.threshold, false), depth + 1, lines);
    }
}

}  // namespace

TreeSummary characterize_configs(std::span<const RunResult> results,
                                 const std::function<bool(const RunResult&)>& acceptable, int max_depth) {
    learn::FeatureMatrix x;
    std::vector<Label> y;
    for (const auto& r : results) {
        std::array<double, 7> row{};
        const auto kind = learn::parse_classifier_kind(r.config.at("classifier").get<std::string>());
        for (std::size_t k = 0; k < kKinds.size(); ++k) row[k] = kind == kKinds[k] ? 1.0 : 0.0;
        row[4] = r.config.at("alpha").get<double>();
        row[5] = r.config.at("beta").get<double>();
        row[6] = r.config.at("dv_fraction").get<double>();
        x.push_row(row);
        y.push_back(r.ok && acceptable(r) ? Label::valid : Label::invalid);
    }
    require(x.rows() > 0, ErrorCode::invalid_argument, "no results to characterize");
    TreeSummary s;
    s.acceptable = static_cast<std::size_t>(std::count(y.begin(), y.end(), Label::valid));
    s.unacceptable = y.size() - s.acceptable;
    std::vector<double> w(y.size(), 1.0);
    std::mt19937_64 rng(0);
    const auto tree = learn::DecisionTree::fit(x, y, w, {max_depth, 1, 0}, rng);
    render(tree, 0, "all configurations", 0, s.rules);
    s.tree = tree.to_json();
    return s;
}

// ------------------------------------------------------------------ RQ2

json Rq2Spec::to_json() const {
    return {{"efforts", efforts},
            {"repetitions", repetitions},
            {"alpha", alpha},
            {"beta", beta},
            {"classifier", learn::to_string(kind)},
            {"tune", tune.to_json()},
            {"threshold_step", threshold_step},
            {"retrain_vae", retrain_vae},
            {"vae", vae.to_json()}};
}

Rq2Spec Rq2Spec::from_json(const json& j) {
    Rq2Spec s;
    if (j.contains("efforts")) s.efforts = j.at("efforts").get<std::vector<double>>();
    s.repetitions = j.value("repetitions", s.repetitions);
    s.alpha = j.value("alpha", s.alpha);
    s.beta = j.value("beta", s.beta);
    if (j.contains("classifier")) s.kind = learn::parse_classifier_kind(j.at("classifier").get<std::string>());
    if (j.contains("tune")) s.tune = learn::TuneGrid::from_json(j.at("tune"));
    s.threshold_step = j.value("threshold_step", s.threshold_step);
    s.retrain_vae = j.value("retrain_vae", s.retrain_vae);
    if (j.contains("vae")) s.vae = features::VaeConfig::from_json(j.at("vae"));
    require(!s.efforts.empty() && s.repetitions >= 1, ErrorCode::invalid_argument, "rq2 needs efforts and repetitions");
    for (double e : s.efforts) require(e > 0.0 && e < 1.0, ErrorCode::invalid_argument, "effort levels must lie in (0, 1)");
    return s;
}

namespace {

const std::array<std::string, 4> kMethods = {"hil_tv", "hil_tv_no_al", "b_vif", "b_vae"};

bool both_classes(const std::vector<std::size_t>& idx, const LabeledDataset& data) {
    bool v = false, i = false;
    for (auto k : idx) (*data.items[k].known_label == Label::valid ? v : i) = true;
    return v && i;
}

/// Shuffles `pool` until its first `count` entries hold both classes.
bool draw_both_classes(std::vector<std::size_t>& pool, std::size_t count, const LabeledDataset& data,
                       std::mt19937_64& rng) {
    for (int attempt = 0; attempt <= 10; ++attempt) {
        std::shuffle(pool.begin(), pool.end(), rng);
        if (both_classes(std::vector<std::size_t>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count)), data)) {
            return true;
        }
    }
    return false;
}

struct SplitContext {
    const LabeledDataset& data;
    std::vector<std::size_t> train;         // indices into data.items
    std::vector<bool> in_train;
};

RunResult finish(RunResult r, const SplitContext& ctx, const std::vector<Label>& labels) {
    std::vector<Label> gold;
    for (const auto& it : ctx.data.items) gold.push_back(*it.known_label);
    const auto s = stats::score(labels, gold);
    r.accuracy = s.accuracy;
    r.precision = s.precision;
    r.recall = s.recall;
    return r;
}

/// Training-split pairs keep their human labels; the rest come from `predict`.
template <typename Predict>
std::vector<Label> label_all(const SplitContext& ctx, Predict predict) {
    std::vector<Label> out(ctx.data.items.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = ctx.in_train[i] ? *ctx.data.items[i].known_label : predict(i);
    }
    return out;
}

RunResult threshold_method(const SplitContext& ctx, RunResult r, MetricIndex metric, const std::vector<double>& values,
                           double step) {
    std::vector<double> v;
    std::vector<Label> y;
    for (auto k : ctx.train) {
        v.push_back(values[k]);
        y.push_back(*ctx.data.items[k].known_label);
    }
    const auto validator = baselines::fit_threshold(v, y, metric, step);
    r.config["threshold"] = validator.threshold;
    r.config["training_accuracy"] = validator.training_accuracy;
    return finish(std::move(r), ctx, label_all(ctx, [&](std::size_t i) { return validator.classify(values[i]); }));
}

}  // namespace

Rq2Report rq2_protocol(const LabeledDataset& data, const Rq2Spec& spec, std::uint64_t seed,
                       std::span<const ImagePair> images) {
    const std::size_t n = data.items.size();
    require(n >= 20, ErrorCode::invalid_argument, "rq2 needs at least 20 pairs");
    require(images.empty() || images.size() == n, ErrorCode::dimension_mismatch,
            "image list must align with the dataset items");
    for (std::size_t i = 0; i < images.size(); ++i) {
        require(images[i].id == data.items[i].id, ErrorCode::invalid_argument, "image list order differs from items");
    }
    Rq2Report report;
    std::vector<double> cached_vif(n), cached_vae(n);
    for (std::size_t i = 0; i < n; ++i) {
        cached_vif[i] = data.items[i].features[MetricIndex::vif];
        cached_vae[i] = data.items[i].features[MetricIndex::vae_re];
    }

    for (double effort : spec.efforts) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            const std::string tag = "x=" + csv::number(effort) + "|rep=" + std::to_string(rep);
            const std::uint64_t split_seed = derive_seed(seed, "rq2|" + tag);
            std::mt19937_64 rng(split_seed);
            const auto m = static_cast<std::size_t>(std::llround(effort * static_cast<double>(n)));
            std::vector<std::size_t> pool(n);
            std::iota(pool.begin(), pool.end(), 0);
            std::string split_id;

            auto base = [&](const std::string& method) {
                RunResult r;
                r.method = method;
                r.config_id = method + "|" + tag;
                r.config = {{"method", method}, {"effort", effort}, {"repetition", rep}};
                if (!split_id.empty()) r.config["split"] = split_id;
                r.seed = derive_seed(split_seed, method);
                r.human_effort = static_cast<double>(m) / static_cast<double>(n);
                return r;
            };
            auto failed_all = [&](const std::string& why) {
                for (const auto& method : kMethods) {
                    auto r = base(method);
                    r.ok = false;
                    r.error = why;
                    report.runs.push_back(r);
                }
            };
            if (m < 4 || m >= n || !draw_both_classes(pool, m, data, rng)) {
                failed_all("could not draw a training split with both classes");
                continue;
            }
            SplitContext ctx{data, std::vector<std::size_t>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m)),
                             std::vector<bool>(n, false)};
            for (auto k : ctx.train) ctx.in_train[k] = true;
            {
                std::vector<std::string> ids;
                for (auto k : ctx.train) ids.push_back(data.items[k].id);
                std::sort(ids.begin(), ids.end());
                std::uint64_t h = fnv1a64("");
                for (const auto& id : ids) h = fnv1a64(id + "\n", h);
                split_id = hex64(h);
            }

            // HiL-TV: half of the split is D_v, the other half bounds the manual labels.
            {
                auto r = base("hil_tv");
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const std::size_t half = m / 2;
                    std::vector<std::size_t> train = ctx.train;
                    require(draw_both_classes(train, half, data, rng), ErrorCode::degenerate_data,
                            "D_v drew a single class");
                    std::vector<std::string> dv;
                    for (std::size_t k = 0; k < half; ++k) dv.push_back(data.items[train[k]].id);
                    al::ALConfig cfg;
                    cfg.alpha = spec.alpha;
                    cfg.beta_fraction = spec.beta;
                    cfg.dv_fraction = static_cast<double>(half) / static_cast<double>(n);
                    cfg.kind = spec.kind;
                    cfg.grid = spec.tune;
                    cfg.seed = r.seed;
                    cfg.manual_budget = m - half;
                    al::Engine engine(data.items, cfg, dv);
                    al::SimulatedOracle oracle(data.truth);
                    al::run(engine, oracle);
                    const auto s = score_labels(al::final_labels(engine), data.truth);
                    r.accuracy = s.accuracy;
                    r.precision = s.precision;
                    r.recall = s.recall;
                    r.human_effort = engine.human_effort();
                    r.iterations = engine.log().size();
                } catch (const std::exception& e) {
                    r.ok = false;
                    r.error = e.what();
                }
                r.wall_time = seconds_since(t0);
                report.runs.push_back(r);
            }
            // HiL-TV without the loop: a tuned classifier on the split labels the rest.
            {
                auto r = base("hil_tv_no_al");
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    learn::FeatureMatrix x;
                    std::vector<Label> y;
                    for (auto k : ctx.train) {
                        x.push_row(data.items[k].features.span());
                        y.push_back(*data.items[k].known_label);
                    }
                    const auto tuned = learn::fit(spec.kind, x, y, spec.tune, r.seed);
                    r = finish(std::move(r), ctx, label_all(ctx, [&](std::size_t i) {
                                   return tuned.model.predict(data.items[i].features).label;
                               }));
                } catch (const std::exception& e) {
                    r.ok = false;
                    r.error = e.what();
                }
                r.wall_time = seconds_since(t0);
                report.runs.push_back(r);
            }
            {
                auto r = base("b_vif");
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    r = threshold_method(ctx, std::move(r), MetricIndex::vif, cached_vif, spec.threshold_step);
                } catch (const std::exception& e) {
                    r.ok = false;
                    r.error = e.what();
                }
                r.wall_time = seconds_since(t0);
                report.runs.push_back(r);
            }
            {
                auto r = base("b_vae");
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    std::vector<double> scores = cached_vae;
                    if (spec.retrain_vae && !images.empty()) {
                        std::vector<Image> originals;
                        for (auto k : ctx.train) originals.push_back(images[k].original);
                        auto vcfg = spec.vae;
                        vcfg.seed = derive_seed(r.seed, "vae");
                        const auto model = features::train_vae(originals, vcfg);
                        for (std::size_t i = 0; i < n; ++i) scores[i] = model.reconstruction_error(images[i].transformed);
                    }
                    r = threshold_method(ctx, std::move(r), MetricIndex::vae_re, scores, spec.threshold_step);
                } catch (const std::exception& e) {
                    r.ok = false;
                    r.error = e.what();
                }
                r.wall_time = seconds_since(t0);
                report.runs.push_back(r);
            }
        }
    }

    for (double effort : spec.efforts) {
        for (const auto& method : kMethods) {
            MethodSummary s;
            s.method = method;
            s.effort = effort;
            for (const auto& r : report.runs) {
                if (!r.ok || r.method != method || r.config.at("effort").get<double>() != effort) continue;
                s.accuracy.push_back(r.accuracy);
                if (r.precision) s.precision.push_back(*r.precision);
                if (r.recall) s.recall.push_back(*r.recall);
            }
            report.summaries.push_back(std::move(s));
        }
        for (std::size_t a = 0; a < kMethods.size(); ++a) {
            for (std::size_t b = a + 1; b < kMethods.size(); ++b) {
                const auto* sa = report.find(kMethods[a], effort);
                const auto* sb = report.find(kMethods[b], effort);
                for (const std::string metric : {"accuracy", "precision", "recall"}) {
                    const auto& va = metric == "accuracy" ? sa->accuracy : metric == "precision" ? sa->precision : sa->recall;
                    const auto& vb = metric == "accuracy" ? sb->accuracy : metric == "precision" ? sb->precision : sb->recall;
                    if (va.empty() || vb.empty()) continue;
                    Comparison c;
                    c.effort = effort;
                    c.metric = metric;
                    c.a = kMethods[a];
                    c.b = kMethods[b];
                    c.p_value = stats::wilcoxon_rank_sum(va, vb);
                    c.a12 = stats::vargha_delaney_a12(va, vb);
                    c.band = stats::a12_band(c.a12);
                    report.comparisons.push_back(c);
                }
            }
        }
    }
    return report;
}

const MethodSummary* Rq2Report::find(const std::string& method, double effort) const {
    for (const auto& s : summaries) {
        if (s.method == method && s.effort == effort) return &s;
    }
    return nullptr;
}

const Comparison* Rq2Report::find_comparison(const std::string& a, const std::string& b, double effort,
                                             const std::string& metric) const {
    for (const auto& c : comparisons) {
        if (c.a == a && c.b == b && c.effort == effort && c.metric == metric) return &c;
    }
    return nullptr;
}

json Rq2Report::to_json() const {
    json runs_j = json::array();
    for (const auto& r : runs) runs_j.push_back(r.to_json());
    json sums = json::array();
    for (const auto& s : summaries) {
        sums.push_back({{"method", s.method},
                        {"effort", s.effort},
                        {"accuracy", s.accuracy},
                        {"precision", s.precision},
                        {"recall", s.recall},
                        {"mean_accuracy", stats::mean(s.accuracy)},
                        {"sd_accuracy", stats::stdev(s.accuracy)},
                        {"mean_precision", s.precision.empty() ? json(nullptr) : json(stats::mean(s.precision))},
                        {"mean_recall", s.recall.empty() ? json(nullptr) : json(stats::mean(s.recall))}});
    }
    json comps = json::array();
    for (const auto& c : comparisons) {
        comps.push_back({{"effort", c.effort}, {"metric", c.metric},   {"a", c.a},
                         {"b", c.b},           {"p_value", c.p_value}, {"a12", c.a12},
                         {"band", stats::to_string(c.band)}});
    }
    return {{"runs", runs_j}, {"summaries", sums}, {"comparisons", comps}};
}

namespace {

std::string fmt(double v, int digits = 4) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(digits);
    o << v;
    return o.str();
}

std::string fmt_mean(const std::vector<double>& v) {
    if (v.empty()) return "n/a";
    return fmt(stats::mean(v)) + " ± " + fmt(stats::stdev(v));
}

std::string fmt_p(double p) {
    std::ostringstream o;
    o.precision(3);
    o << p;
    return o.str();
}

}  // namespace

std::string Rq2Report::to_markdown() const {
    std::ostringstream md;
    md << "# Comparison with baselines\n\n";
    std::vector<double> efforts;
    for (const auto& s : summaries) {
        if (std::find(efforts.begin(), efforts.end(), s.effort) == efforts.end()) efforts.push_back(s.effort);
    }
    for (double e : efforts) {
        md << "## Effort " << fmt(e, 2) << "\n\n";
        md << "| method | runs | accuracy | precision | recall |\n|---|---|---|---|---|\n";
        for (const auto& s : summaries) {
            if (s.effort != e) continue;
            md << "| " << s.method << " | " << s.accuracy.size() << " | " << fmt_mean(s.accuracy) << " | "
               << fmt_mean(s.precision) << " | " << fmt_mean(s.recall) << " |\n";
        }
        md << "\n| metric | A | B | p (rank-sum) | A12 | effect |\n|---|---|---|---|---|---|\n";
        for (const auto& c : comparisons) {
            if (c.effort != e) continue;
            md << "| " << c.metric << " | " << c.a << " | " << c.b << " | " << fmt_p(c.p_value) << " | "
               << fmt(c.a12, 3) << " | " << stats::to_string(c.band) << " |\n";
        }
        md << "\n";
    }
    return md.str();
}

// ------------------------------------------------------------------ RQ3

CorrelationReport correlate(const LabeledDataset& data, double redundancy_threshold, std::size_t top_k) {
    require(data.items.size() >= 3, ErrorCode::invalid_argument, "correlation needs at least 3 pairs");
    std::vector<std::vector<double>> cols(kMetricCount);
    std::vector<double> y;
    for (const auto& it : data.items) {
        for (std::size_t m = 0; m < kMetricCount; ++m) cols[m].push_back(it.features.values[m]);
        y.push_back(*it.known_label == Label::valid ? 1.0 : 0.0);
    }
    CorrelationReport rep;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        const auto pr = stats::pearson(cols[m], y);
        rep.per_metric.push_back({std::string(kMetricNames[m]), pr.r, pr.p_value});
    }
    std::vector<std::size_t> order;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        if (rep.per_metric[m].r) order.push_back(m);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(*rep.per_metric[a].r) > std::abs(*rep.per_metric[b].r);
    });
    for (std::size_t i = 0; i < order.size() && i < top_k; ++i) rep.top.push_back(rep.per_metric[order[i]].metric);
    for (std::size_t a = 0; a < kMetricCount; ++a) {
        for (std::size_t b = a + 1; b < kMetricCount; ++b) {
            const auto pr = stats::pearson(cols[a], cols[b]);
            if (pr.r && std::abs(*pr.r) > redundancy_threshold) {
                rep.redundant.push_back({std::string(kMetricNames[a]), std::string(kMetricNames[b]), *pr.r});
            }
        }
    }
    return rep;
}

json CorrelationReport::to_json() const {
    json per = json::array();
    for (const auto& m : per_metric) per.push_back({{"metric", m.metric}, {"r", optional_json(m.r)}, {"p_value", optional_json(m.p_value)}});
    json red = json::array();
    for (const auto& r : redundant) red.push_back({{"a", r.a}, {"b", r.b}, {"r", r.r}});
    return {{"per_metric", per}, {"top", top}, {"redundant", red}};
}

std::string CorrelationReport::to_markdown() const {
    std::ostringstream md;
    md << "# Metric correlation with validity\n\n| metric | r | p |\n|---|---|---|\n";
    for (const auto& m : per_metric) {
        md << "| " << m.metric << " | " << (m.r ? fmt(*m.r, 3) : "n/a") << " | " << (m.p_value ? fmt_p(*m.p_value) : "n/a")
           << " |\n";
    }
    md << "\nStrongest: ";
    for (std::size_t i = 0; i < top.size(); ++i) md << (i ? ", " : "") << top[i];
    md << "\n\n## Redundant metric pairs\n\n";
    if (redundant.empty()) md << "none\n";
    for (const auto& r : redundant) md << "- " << r.a << " / " << r.b << ": r = " << fmt(r.r, 3) << "\n";
    return md.str();
}

}  // namespace pairval::eval

#include "pairval/commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "csv.hpp"
#include "pairval/alcore.hpp"
#include "pairval/baselines.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "pairval/eval.hpp"
#include "pairval/pipeline.hpp"
#include "pairval/reports.hpp"
#include "pairval/service.hpp"
#include "pairval/synth.hpp"

namespace pairval::commands {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json& section(const json& req, const char* key) {
    static const json empty = json::object();
    if (req.contains(key) && req.at(key).is_object()) return req.at(key);
    return empty;
}

const json& args_of(const json& req) { return section(req, "args"); }

std::optional<std::string> arg_string(const json& req, const char* key) {
    const auto& a = args_of(req);
    if (a.contains(key) && a.at(key).is_string()) return a.at(key).get<std::string>();
    return std::nullopt;
}

std::string required_arg(const json& req, const char* key) {
    auto v = arg_string(req, key);
    require(v.has_value() && !v->empty(), ErrorCode::invalid_argument, std::string("missing argument '") + key + "'");
    return *v;
}

std::optional<std::uint64_t> seed_of(const json& req) {
    if (req.contains("seed") && req.at("seed").is_number_unsigned()) return req.at("seed").get<std::uint64_t>();
    if (req.contains("seed") && req.at("seed").is_number_integer()) {
        const auto v = req.at("seed").get<long long>();
        require(v >= 0, ErrorCode::invalid_argument, "seed must be non-negative");
        return static_cast<std::uint64_t>(v);
    }
    return std::nullopt;
}

MetricConfig metric_config(const json& req) { return MetricConfig::from_json(section(req, "metric_params")); }

al::ALConfig al_config(const json& req) {
    json j = section(req, "al");
    if (req.contains("classifier")) {
        const auto& c = req.at("classifier");
        if (c.is_string()) {
            j["classifier"] = c;
        } else if (c.is_object()) {
            if (c.contains("kind")) j["classifier"] = c.at("kind");
            if (c.contains("grid")) j["grid"] = c.at("grid");
        }
    }
    if (auto s = seed_of(req)) j["seed"] = *s;
    return al::ALConfig::from_json(j);
}

void write_text(const std::optional<std::string>& path, const std::string& text) {
    if (path && !path->empty()) {
        const fs::path p(*path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_file_atomic(p, text);
    }
}

struct Dataset {
    DatasetManifest manifest;
    std::vector<ImagePair> pairs;
    MetricCache cache;
    std::vector<al::Item> items;
};

std::string manifest_path(const json& req) {
    if (auto a = arg_string(req, "manifest")) return *a;
    const auto& d = section(req, "dataset");
    require(d.contains("manifest"), ErrorCode::invalid_argument,
            "no dataset manifest given (use --manifest or dataset.manifest in the config)");
    return d.at("manifest").get<std::string>();
}

std::optional<std::string> cache_path(const json& req) {
    if (auto a = arg_string(req, "cache")) return a;
    const auto& d = section(req, "dataset");
    if (d.contains("metric_cache")) return d.at("metric_cache").get<std::string>();
    return std::nullopt;
}

Dataset load_dataset(const json& req, bool need_images) {
    Dataset ds;
    ds.manifest = load_manifest(manifest_path(req));
    auto cfg = metric_config(req);
    const auto cpath = cache_path(req);
    if (cpath && fs::exists(*cpath)) {
        ds.cache = load_metric_cache(*cpath);
        // `metrics --seed` records the VAE seed in the cache; adopt it unless the config pins one.
        const auto& mp = section(req, "metric_params");
        if (!(mp.contains("vae") && mp.at("vae").contains("seed"))) cfg.vae.seed = ds.cache.seed;
        require(ds.cache.fingerprint == config_fingerprint(cfg), ErrorCode::stale_cache,
                "metric cache " + *cpath + " was computed with different metric parameters; rerun `metrics`");
        for (const auto& e : ds.manifest.entries) {
            require(ds.cache.rows.count(e.id) > 0, ErrorCode::stale_cache,
                    "metric cache " + *cpath + " has no row for pair '" + e.id + "'; rerun `metrics`");
        }
    } else {
        ds.pairs = load_pairs(ds.manifest);
        ds.cache = compute_metric_cache(ds.pairs, cfg);
        if (cpath) save_metric_cache(ds.cache, *cpath);
    }
    if (need_images && ds.pairs.empty()) ds.pairs = load_pairs(ds.manifest);
    for (const auto& e : ds.manifest.entries) ds.items.push_back({e.id, ds.cache.rows.at(e.id), e.label});
    return ds;
}

eval::LabeledDataset labeled(const Dataset& ds) {
    for (const auto& it : ds.items) {
        require(it.known_label.has_value(), ErrorCode::invalid_argument,
                "pair '" + it.id + "' has no label in the manifest; simulated runs need ground truth for every pair");
    }
    return eval::LabeledDataset::from_items(ds.items);
}

json score_json(const stats::Score& s) { return s.to_json(); }

}  // namespace

json synth(const json& req) {
    auto spec = synth::SyntheticSpec::from_json(section(req, "synth"));
    if (auto s = seed_of(req)) spec.seed = *s;
    if (const auto& a = args_of(req); a.contains("n")) spec.n = a.at("n").get<std::size_t>();
    if (auto r = arg_string(req, "recipe")) spec.recipe = synth::parse_recipe(*r);
    const fs::path dir = required_arg(req, "out_dir");
    const auto manifest = synth::write_synthetic(spec, dir);
    std::size_t valid = 0;
    for (const auto& e : manifest.entries) valid += e.label == Label::valid ? 1 : 0;
    return {{"manifest", (dir / "manifest.csv").string()}, {"n", manifest.entries.size()}, {"valid", valid}, {"spec", spec.to_json()}};
}

json metrics(const json& req) {
    const auto manifest = load_manifest(manifest_path(req));
    auto out = arg_string(req, "out");
    if (!out) out = cache_path(req);
    require(out.has_value(), ErrorCode::invalid_argument, "no output path for the metric cache (use --out)");
    auto cfg = metric_config(req);
    if (auto s = seed_of(req)) cfg.vae.seed = *s;
    const auto pairs = load_pairs(manifest);
    const auto cache = compute_metric_cache(pairs, cfg);
    save_metric_cache(cache, *out);
    return {{"rows", cache.rows.size()}, {"fingerprint", cache.fingerprint}, {"path", *out}};
}

json al_run(const json& req) {
    const auto oracle_kind = arg_string(req, "oracle").value_or("simulated");
    if (oracle_kind == "interactive") return serve(req);
    require(oracle_kind == "simulated", ErrorCode::invalid_argument, "oracle must be 'simulated' or 'interactive'");
    const auto ds = load_dataset(req, false);
    const auto data = labeled(ds);
    const auto cfg = al_config(req);

    const auto checkpoint = arg_string(req, "checkpoint");
    std::optional<al::Engine> engine;
    if (checkpoint && fs::exists(*checkpoint) && args_of(req).value("resume", false)) {
        engine.emplace(al::Engine::restore(json::parse(read_file(*checkpoint)), ds.items, cfg));
    } else {
        engine.emplace(ds.items, cfg);
    }
    al::RunOptions opts;
    if (checkpoint) opts.checkpoint_path = *checkpoint;
    if (auto log = arg_string(req, "log")) opts.log_path = *log;
    al::SimulatedOracle oracle(data.truth);
    al::run(*engine, oracle, opts);

    const auto s = eval::score_labels(al::final_labels(*engine), data.truth);
    json cfg_json = cfg.to_json();
    cfg_json.erase("grid");
    json result = {{"config", cfg_json},
                   {"score", score_json(s)},
                   {"human_effort", engine->human_effort()},
                   {"iterations", engine->log().size()},
                   {"d_v", engine->pre_validated().size()},
                   {"manual", engine->manual_count()},
                   {"dataset", ds.items.size()}};
    if (auto out = arg_string(req, "out")) {
        json full = result;
        json labels = json::object();
        for (const auto& [id, r] : engine->validated()) {
            json rec = {{"label", to_string(r.label)}, {"provenance", al::to_string(r.provenance)}, {"iteration", r.iteration}};
            rec["confidence"] = r.confidence ? json(*r.confidence) : json(nullptr);
            labels[id] = rec;
        }
        full["labels"] = labels;
        write_text(*out, full.dump(2));
    }
    return result;
}

json baseline(const json& req) {
    const auto mode = arg_string(req, "mode").value_or("fit");
    const auto ds = load_dataset(req, false);
    if (mode == "fit") {
        const auto metric_name = arg_string(req, "metric").value_or("vif");
        const auto metric = parse_metric_name(metric_name);
        require(metric.has_value(), ErrorCode::invalid_argument, "unknown metric '" + metric_name + "'");
        const double step = args_of(req).value("step", 1e-3);
        std::vector<double> values;
        std::vector<Label> labels;
        for (const auto& it : ds.items) {
            if (!it.known_label) continue;
            values.push_back(it.features[*metric]);
            labels.push_back(*it.known_label);
        }
        const auto v = baselines::fit_threshold(values, labels, *metric, step);
        write_text(arg_string(req, "out"), v.to_json().dump(2));
        json r = v.to_json();
        r["training_pairs"] = values.size();
        return r;
    }
    require(mode == "apply", ErrorCode::invalid_argument, "baseline mode must be 'fit' or 'apply'");
    const auto v = baselines::ThresholdValidator::from_json(json::parse(read_file(required_arg(req, "validator"))));
    std::ostringstream csv_out;
    csv_out << "id,label\n";
    std::vector<Label> pred, gold;
    for (const auto& it : ds.items) {
        const auto l = v.classify(it.features[v.metric]);
        csv_out << csv::quote(it.id) << ',' << to_string(l) << '\n';
        if (it.known_label) {
            pred.push_back(l);
            gold.push_back(*it.known_label);
        }
    }
    write_text(arg_string(req, "out"), csv_out.str());
    json r = {{"validator", v.to_json()}, {"classified", ds.items.size()}};
    if (!gold.empty()) r["score"] = score_json(stats::score(pred, gold));
    return r;
}

json grid(const json& req) {
    const auto ds = load_dataset(req, false);
    const auto data = labeled(ds);
    auto spec = eval::GridSpec::from_json(section(req, "grid"));
    const auto seed = seed_of(req).value_or(0);
    const bool progress = args_of(req).value("progress", false);
    const auto results = eval::grid_search(data, spec, seed, [&](std::size_t done, std::size_t total) {
        if (progress && (done % 10 == 0 || done == total)) std::cerr << "grid: " << done << "/" << total << "\n";
    });
    const auto out = required_arg(req, "out");
    eval::write_results_csv(results, out);
    auto timing = arg_string(req, "timing");
    if (!timing) {
        const fs::path p(out);
        timing = (p.parent_path() / (p.stem().string() + "_timing.csv")).string();
    }
    eval::write_timing_csv(results, *timing);
    write_text(arg_string(req, "report"), eval::grid_markdown(results));
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.ok ? 0 : 1;
    return {{"configurations", results.size()}, {"failed", failed}, {"results", out}, {"timing", *timing}};
}

json pareto(const json& req) {
    const auto results = eval::read_results_csv(required_arg(req, "results"));
    const auto points = eval::to_points(results);
    const auto front = eval::pareto_front(points);
    const auto j = eval::pareto_json(points, front);
    write_text(arg_string(req, "out"), j.dump(2));
    write_text(arg_string(req, "svg"), eval::pareto_svg(points, front));
    write_text(arg_string(req, "report"), eval::pareto_markdown(points, front));
    return j;
}

json rq2(const json& req) {
    json spec_json = section(req, "rq2");
    const auto& al_sec = section(req, "al");
    if (!spec_json.contains("alpha") && al_sec.contains("alpha")) spec_json["alpha"] = al_sec.at("alpha");
    if (!spec_json.contains("beta") && al_sec.contains("beta")) spec_json["beta"] = al_sec.at("beta");
    if (!spec_json.contains("classifier") && req.contains("classifier") && req.at("classifier").is_string()) {
        spec_json["classifier"] = req.at("classifier");
    }
    if (const auto& a = args_of(req); a.contains("repetitions")) spec_json["repetitions"] = a.at("repetitions");
    const auto spec = eval::Rq2Spec::from_json(spec_json);
    const auto ds = load_dataset(req, spec.retrain_vae);
    const auto data = labeled(ds);
    const auto report = eval::rq2_protocol(data, spec, seed_of(req).value_or(0), ds.pairs);
    write_text(arg_string(req, "out"), report.to_json().dump(2));
    write_text(arg_string(req, "report"), report.to_markdown());
    json summary = json::array();
    for (const auto& s : report.summaries) {
        summary.push_back({{"method", s.method}, {"effort", s.effort}, {"runs", s.accuracy.size()},
                           {"mean_accuracy", stats::mean(s.accuracy)}});
    }
    return {{"runs", report.runs.size()}, {"summary", summary}};
}

json correlate(const json& req) {
    const auto ds = load_dataset(req, false);
    const auto data = labeled(ds);
    const double threshold = args_of(req).value("redundancy", 0.9);
    const auto rep = eval::correlate(data, threshold);
    write_text(arg_string(req, "out"), rep.to_json().dump(2));
    write_text(arg_string(req, "report"), rep.to_markdown());
    return rep.to_json();
}

std::string session_checkpoint(const json& req) {
    return arg_string(req, "checkpoint").value_or(section(req, "server").value("checkpoint", std::string("session.json")));
}

std::unique_ptr<service::LabelingService> open_session(const json& req) {
    auto ds = load_dataset(req, false);
    return std::make_unique<service::LabelingService>(std::move(ds.items), al_config(req), std::move(ds.manifest),
                                                      session_checkpoint(req));
}

json serve(const json& req, const std::atomic<bool>* stop, const std::function<void(int)>& on_ready) {
    const auto& server_sec = section(req, "server");
    const int port = args_of(req).value("port", server_sec.value("port", 8080));
    const std::string host = args_of(req).value("host", server_sec.value("host", std::string("127.0.0.1")));
    auto svc = open_session(req);
    service::serve(*svc, host, port, stop, [&](int bound) {
        std::cerr << "labeling service on http://" << host << ":" << bound << " (checkpoint " << session_checkpoint(req)
                  << ")\n";
        if (on_ready) on_ready(bound);
    });
    svc->wait_idle();
    return svc->session();
}

json run(const std::string& name, const json& request) {
    if (name == "synth") return synth(request);
    if (name == "metrics") return metrics(request);
    if (name == "al-run") return al_run(request);
    if (name == "baseline") return baseline(request);
    if (name == "grid") return grid(request);
    if (name == "pareto") return pareto(request);
    if (name == "rq2") return rq2(request);
    if (name == "correlate") return correlate(request);
    if (name == "serve") return serve(request);
    fail(ErrorCode::invalid_argument, "unknown command '" + name + "'");
}

}  // namespace pairval::commands

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pairval/pairval.h"

namespace {

using nlohmann::json;

struct Option {
    const char* flag;
    const char* key;
    const char* help;
    bool numeric = false;
};

struct Subcommand {
    const char* name;
    const char* help;
    std::vector<Option> options;
    std::vector<std::pair<const char*, const char*>> flags;  // key, help
};

const std::vector<Subcommand>& subcommands() {
    static const std::vector<Subcommand> list = {
        {"synth",
         "Generate a labelled synthetic dataset",
         {{"--out-dir", "out_dir", "output directory for images and manifest.csv"},
          {"--n", "n", "number of pairs", true},
          {"--recipe", "recipe", "standard or two_condition"}},
         {}},
        {"metrics",
         "Compute and cache metric vectors for a manifest",
         {{"--manifest", "manifest", "dataset manifest CSV"}, {"--out", "out", "metric cache CSV to write"}},
         {}},
        {"al-run",
         "Run the active-learning loop",
         {{"--manifest", "manifest", "dataset manifest CSV"},
          {"--cache", "cache", "metric cache CSV (computed when missing)"},
          {"--oracle", "oracle", "simulated or interactive"},
          {"--checkpoint", "checkpoint", "checkpoint file"},
          {"--log", "log", "run log (JSON lines)"},
          {"--out", "out", "final labels JSON"},
          {"--port", "port", "port for the interactive oracle", true}},
         {{"resume", "resume from --checkpoint when it exists"}}},
        {"baseline",
         "Fit or apply a single-metric threshold validator",
         {{"--manifest", "manifest", "dataset manifest CSV"},
          {"--cache", "cache", "metric cache CSV"},
          {"--metric", "metric", "vif or vae_re (any metric name is accepted)"},
          {"--mode", "mode", "fit or apply"},
          {"--validator", "validator", "validator JSON to apply"},
          {"--step", "step", "threshold sweep step", true},
          {"--out", "out", "validator JSON (fit) or labels CSV (apply)"}},
         {}},
        {"grid",
         "Run the configuration grid search",
         {{"--manifest", "manifest", "dataset manifest CSV"},
          {"--cache", "cache", "metric cache CSV"},
          {"--out", "out", "results CSV"},
          {"--timing", "timing", "wall-time CSV"},
          {"--report", "report", "markdown summary"}},
         {{"progress", "print progress to stderr"}}},
        {"pareto",
         "Extract the accuracy/effort Pareto front from grid results",
         {{"--results", "results", "results CSV"},
          {"--out", "out", "front JSON"},
          {"--svg", "svg", "scatter plot SVG"},
          {"--report", "report", "markdown table"}},
         {}},
        {"rq2",
         "Compare the loop against baselines at fixed effort levels",
         {{"--manifest", "manifest", "dataset manifest CSV"},
          {"--cache", "cache", "metric cache CSV"},
          {"--repetitions", "repetitions", "repetitions per effort level", true},
          {"--out", "out", "report JSON"},
          {"--report", "report", "markdown report"}},
         {}},
        {"correlate",
         "Correlate each metric with the labels",
         {{"--manifest", "manifest", "dataset manifest CSV"},
          {"--cache", "cache", "metric cache CSV"},
          {"--redundancy", "redundancy", "|r| above which two metrics count as redundant", true},
          {"--out", "out", "report JSON"},
          {"--report", "report", "markdown report"}},
         {}},
        {"serve",
         "Start the labeling HTTP service",
         {{"--manifest", "manifest", "dataset manifest CSV"},
          {"--cache", "cache", "metric cache CSV"},
          {"--checkpoint", "checkpoint", "session checkpoint file"},
          {"--host", "host", "bind address"},
          {"--port", "port", "port (0 picks a free one)", true}},
         {}},
    };
    return list;
}

void on_signal(int) { pv_serve_stop(); }

json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return json::parse(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image-pair validation with a human in the loop"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pv_version());

    std::string config_path;
    long long seed = -1;
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, bool>> flag_values;
    std::map<std::string, CLI::App*> apps;

    for (const auto& sc : subcommands()) {
        auto* sub = app.add_subcommand(sc.name, sc.help);
        apps[sc.name] = sub;
        sub->add_option("--config", config_path, "JSON configuration file");
        sub->add_option("--seed", seed, "master seed")->check(CLI::NonNegativeNumber);
        for (const auto& o : sc.options) sub->add_option(o.flag, values[sc.name][o.key], o.help);
        for (const auto& [key, help] : sc.flags) {
            sub->add_flag(std::string("--") + key, flag_values[sc.name][key], help);
        }
    }
    CLI11_PARSE(app, argc, argv);

    try {
        const Subcommand* chosen = nullptr;
        for (const auto& sc : subcommands()) {
            if (apps[sc.name]->parsed()) chosen = &sc;
        }
        json request = config_path.empty() ? json::object() : read_config(config_path);
        if (seed >= 0) request["seed"] = seed;
        json args = json::object();
        for (const auto& o : chosen->options) {
            if (apps[chosen->name]->count(o.flag) == 0) continue;
            const auto& v = values[chosen->name][o.key];
            args[o.key] = o.numeric ? json::parse(v) : json(v);
        }
        for (const auto& [key, help] : chosen->flags) {
            if (flag_values[chosen->name][key]) args[key] = true;
        }
        request["args"] = args;

        const std::string name = chosen->name;
        if (name == "serve" || (name == "al-run" && args.value("oracle", std::string()) == "interactive")) {
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
        }
        char* result = nullptr;
        const pv_status st = pv_command(name.c_str(), request.dump().c_str(), &result);
        if (st != PV_OK) {
            std::cerr << "pairval-cli " << name << ": " << pv_status_name(st) << ": " << pv_last_error() << "\n";
            return static_cast<int>(st);
        }
        std::cout << json::parse(result).dump(2) << "\n";
        pv_free(result);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "pairval-cli: " << e.what() << "\n";
        return 1;
    }
}

#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>

#include "json.hpp"
#include "pairval/service.hpp"

namespace pairval::commands {

// Each command takes one request document: the run configuration
// ({dataset, metric_params, classifier, al, server, synth, grid, rq2}) plus
// "seed" and a command-specific "args" object. Results are JSON summaries;
// artifacts are written to the paths named in "args".

nlohmann::json synth(const nlohmann::json& request);
nlohmann::json metrics(const nlohmann::json& request);
nlohmann::json al_run(const nlohmann::json& request);
nlohmann::json baseline(const nlohmann::json& request);
nlohmann::json grid(const nlohmann::json& request);
nlohmann::json pareto(const nlohmann::json& request);
nlohmann::json rq2(const nlohmann::json& request);
nlohmann::json correlate(const nlohmann::json& request);
/// Labeling session for the configured dataset, resumed from the checkpoint when present.
std::unique_ptr<service::LabelingService> open_session(const nlohmann::json& request);

/// Blocks while serving. `on_ready` receives the bound port.
nlohmann::json serve(const nlohmann::json& request, const std::atomic<bool>* stop = nullptr,
                     const std::function<void(int)>& on_ready = {});

/// Dispatch by subcommand name ("synth", "metrics", "al-run", ...).
nlohmann::json run(const std::string& name, const nlohmann::json& request);

}  // namespace pairval::commands

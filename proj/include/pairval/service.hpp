#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"
#include "pairval/alcore.hpp"
#include "pairval/dataio.hpp"

namespace pairval::service {

enum class Status { awaiting_labels, computing, done };
std::string_view to_string(Status s);

struct Submission {
    std::string pair_id;
    Label label = Label::invalid;
    std::string timestamp;  // UTC, ISO 8601
    int iteration = 0;
};

/// One interactive run of the loop. Label submissions and state changes are
/// serialized; retraining runs on a worker thread on a copy of the engine while
/// reads are answered from the last published state.
class LabelingService {
public:
    /// Resumes from `checkpoint_path` when it exists, otherwise starts a new run.
    LabelingService(std::vector<al::Item> items, al::ALConfig cfg, DatasetManifest manifest,
                    std::filesystem::path checkpoint_path, std::string session_id = "default");
    ~LabelingService();
    LabelingService(const LabelingService&) = delete;
    LabelingService& operator=(const LabelingService&) = delete;

    Status status() const;
    nlohmann::json session() const;
    /// Next pending pair without a label, or nullopt when none.
    std::optional<nlohmann::json> next() const;

    struct Reply {
        int status = 200;
        nlohmann::json body;
    };
    /// Body {pair_id, label}. 409 for unknown/already labelled pairs, 400 for bad labels.
    Reply submit(const nlohmann::json& body);

    std::optional<std::filesystem::path> image_path(const std::string& pair_id, const std::string& side) const;

    /// Blocks until no retraining is in flight (or the timeout passes).
    bool wait_idle(std::chrono::milliseconds timeout = std::chrono::minutes(10)) const;

    /// Snapshot of the engine (for inspection and tests).
    al::Engine engine_snapshot() const;
    std::vector<Submission> submissions() const;

private:
    void publish_locked();
    void persist_locked() const;
    void start_advance_locked();

    mutable std::mutex mu_;
    mutable std::condition_variable idle_cv_;
    std::unique_ptr<al::Engine> engine_;
    DatasetManifest manifest_;
    std::filesystem::path checkpoint_path_;
    std::string session_id_;
    std::vector<Submission> submissions_;
    Status status_ = Status::awaiting_labels;
    std::thread worker_;
    std::string worker_error_;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Transport-independent router for the labeling API.
HttpResponse handle_request(LabelingService& svc, const std::string& method, const std::string& path,
                            const std::string& body);

/// Blocking HTTP server on host:port. `on_ready` is called with the bound port.
/// Returns when `stop` becomes true (polled) or the listener fails.
void serve(LabelingService& svc, const std::string& host, int port, const std::atomic<bool>* stop = nullptr,
           const std::function<void(int)>& on_ready = {});

}  // namespace pairval::service

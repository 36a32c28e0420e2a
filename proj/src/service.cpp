#include "pairval/service.hpp"

#include <ctime>
#include <iomanip>
#include <sstream>

#include "httplib.h"
#include "pairval/errors.hpp"

namespace pairval::service {

using nlohmann::json;

std::string_view to_string(Status s) {
    switch (s) {
        case Status::awaiting_labels: return "awaiting_labels";
        case Status::computing: return "computing";
        case Status::done: return "done";
    }
    return "unknown";
}

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return o.str();
}

json submission_json(const Submission& s) {
    return {{"pair_id", s.pair_id}, {"label", to_string(s.label)}, {"timestamp", s.timestamp}, {"iteration", s.iteration}};
}

}  // namespace

LabelingService::LabelingService(std::vector<al::Item> items, al::ALConfig cfg, DatasetManifest manifest,
                                 std::filesystem::path checkpoint_path, std::string session_id)
    : manifest_(std::move(manifest)), checkpoint_path_(std::move(checkpoint_path)), session_id_(std::move(session_id)) {
    if (std::filesystem::exists(checkpoint_path_)) {
        const json saved = json::parse(read_file(checkpoint_path_));
        require(saved.value("format", "") == "pairval-labeling-session", ErrorCode::parse,
                "not a labeling-session checkpoint: " + checkpoint_path_.string());
        engine_ = std::make_unique<al::Engine>(al::Engine::restore(saved.at("engine"), std::move(items), std::move(cfg)));
        session_id_ = saved.value("session_id", session_id_);
        for (const auto& s : saved.at("submissions")) {
            const auto label = parse_label(s.at("label").get<std::string>());
            require(label.has_value(), ErrorCode::parse, "bad label in session checkpoint");
            submissions_.push_back({s.at("pair_id").get<std::string>(), *label, s.at("timestamp").get<std::string>(),
                                    s.at("iteration").get<int>()});
        }
    } else {
        engine_ = std::make_unique<al::Engine>(std::move(items), std::move(cfg));
    }
    std::lock_guard lock(mu_);
    status_ = engine_->done() ? Status::done : Status::awaiting_labels;
    persist_locked();
    // A crash between the last label and the retrain leaves a full batch; finish it now.
    if (!engine_->done() && !engine_->awaiting_labels()) start_advance_locked();
}

LabelingService::~LabelingService() {
    std::thread t;
    {
        std::lock_guard lock(mu_);
        t = std::move(worker_);
    }
    if (t.joinable()) t.join();
}

Status LabelingService::status() const {
    std::lock_guard lock(mu_);
    return status_;
}

void LabelingService::persist_locked() const {
    json subs = json::array();
    for (const auto& s : submissions_) subs.push_back(submission_json(s));
    const json doc = {{"format", "pairval-labeling-session"},
                      {"version", 1},
                      {"session_id", session_id_},
                      {"engine", engine_->checkpoint()},
                      {"submissions", subs}};
    write_file_atomic(checkpoint_path_, doc.dump());
}

void LabelingService::start_advance_locked() {
    status_ = Status::computing;
    if (worker_.joinable()) worker_.join();
    auto work = std::make_shared<al::Engine>(*engine_);
    worker_ = std::thread([this, work] {
        std::string error;
        try {
            work->advance();
        } catch (const std::exception& e) {
            error = e.what();
        }
        std::lock_guard lock(mu_);
        if (error.empty()) {
            *engine_ = std::move(*work);
            worker_error_.clear();
            status_ = engine_->done() ? Status::done : Status::awaiting_labels;
            try {
                persist_locked();
            } catch (const std::exception& e) {
                worker_error_ = e.what();
            }
        } else {
            // Leave the batch in place so a restart can retry the retrain.
            worker_error_ = error;
            status_ = Status::awaiting_labels;
        }
        idle_cv_.notify_all();
    });
}

json LabelingService::session() const {
    std::lock_guard lock(mu_);
    const auto& e = *engine_;
    std::size_t auto_count = 0, manual = 0, pre = 0, fallback = 0;
    for (const auto& [id, r] : e.validated()) {
        switch (r.provenance) {
            case al::Provenance::auto_accepted: ++auto_count; break;
            case al::Provenance::manual: ++manual; break;
            case al::Provenance::pre_validated: ++pre; break;
            case al::Provenance::fallback: ++fallback; break;
        }
    }
    const std::size_t pending_open = status_ == Status::computing ? 0 : e.pending().size() - e.submitted().size();
    json j = {{"session_id", session_id_},
              {"status", to_string(status_)},
              {"iteration", e.iteration()},
              {"counts",
               {{"dataset", e.items().size()},
                {"d_v", e.pre_validated().size()},
                {"d_nv", e.not_validated().size()},
                {"d_val", e.validated().size()},
                {"pending", pending_open},
                {"batch", e.pending().size()},
                {"submitted_in_batch", e.submitted().size()},
                {"auto", auto_count},
                {"manual", manual},
                {"pre_validated", pre},
                {"fallback", fallback}}},
              {"human_effort", e.human_effort()}};
    j["last_error"] = worker_error_.empty() ? json(nullptr) : json(worker_error_);
    return j;
}

std::optional<json> LabelingService::next() const {
    std::lock_guard lock(mu_);
    if (status_ != Status::awaiting_labels) return std::nullopt;
    const auto& e = *engine_;
    for (const auto& id : e.pending()) {
        if (e.submitted().count(id)) continue;
        const auto& items = e.items();
        const auto it = std::find_if(items.begin(), items.end(), [&](const al::Item& x) { return x.id == id; });
        json metrics = json::object();
        for (std::size_t m = 0; m < kMetricCount; ++m) metrics[std::string(kMetricNames[m])] = it->features.values[m];
        json j = {{"pair_id", id},
                  {"original_png_url", "/api/pairs/" + id + "/original"},
                  {"transformed_png_url", "/api/pairs/" + id + "/transformed"},
                  {"metric_vector", metrics}};
        const auto conf = e.latest_confidence(id);
        j["model_confidence_if_any"] = conf ? json(*conf) : json(nullptr);
        return j;
    }
    return std::nullopt;
}

LabelingService::Reply LabelingService::submit(const json& body) {
    if (!body.is_object() || !body.contains("pair_id") || !body.at("pair_id").is_string()) {
        return {400, {{"error", "body must be a JSON object with a string pair_id"}}};
    }
    const auto id = body.at("pair_id").get<std::string>();
    std::optional<Label> label;
    if (body.contains("label") && body.at("label").is_string()) label = parse_label(body.at("label").get<std::string>());
    if (!label) return {400, {{"error", "label must be \"valid\" or \"invalid\""}}};

    std::lock_guard lock(mu_);
    if (status_ != Status::awaiting_labels) {
        return {409, {{"error", "pair '" + id + "' is not awaiting a label (session is " + std::string(to_string(status_)) + ")"}}};
    }
    try {
        engine_->submit(id, *label);
    } catch (const Error& e) {
        return {409, {{"error", e.what()}}};
    }
    submissions_.push_back({id, *label, utc_now(), engine_->iteration()});
    if (!engine_->awaiting_labels()) start_advance_locked();
    // The checkpoint records the submission before the retrain finishes, so a
    // restart resumes with the same batch.
    persist_locked();
    return {200, {{"pair_id", id}, {"label", to_string(*label)}, {"status", to_string(status_)}}};
}

std::optional<std::filesystem::path> LabelingService::image_path(const std::string& pair_id, const std::string& side) const {
    const auto* entry = manifest_.find(pair_id);
    if (!entry) return std::nullopt;
    if (side == "original") return entry->original;
    if (side == "transformed") return entry->transformed;
    return std::nullopt;
}

bool LabelingService::wait_idle(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return idle_cv_.wait_for(lock, timeout, [&] { return status_ != Status::computing; });
}

al::Engine LabelingService::engine_snapshot() const {
    std::lock_guard lock(mu_);
    return *engine_;
}

std::vector<Submission> LabelingService::submissions() const {
    std::lock_guard lock(mu_);
    return submissions_;
}

HttpResponse handle_request(LabelingService& svc, const std::string& method, const std::string& path,
                            const std::string& body) {
    auto json_reply = [](int status, const json& j) { return HttpResponse{status, "application/json", j.dump()}; };
    if (method == "GET" && path == "/api/session") return json_reply(200, svc.session());
    if (method == "GET" && path == "/api/session/next") {
        const auto n = svc.next();
        if (!n) return json_reply(204, json::object());
        return json_reply(200, *n);
    }
    if (method == "POST" && path == "/api/session/label") {
        json parsed;
        try {
            parsed = json::parse(body);
        } catch (const json::exception&) {
            return json_reply(400, {{"error", "request body is not valid JSON"}});
        }
        const auto r = svc.submit(parsed);
        return json_reply(r.status, r.body);
    }
    const std::string prefix = "/api/pairs/";
    if (method == "GET" && path.rfind(prefix, 0) == 0) {
        const auto rest = path.substr(prefix.size());
        const auto slash = rest.rfind('/');
        if (slash != std::string::npos) {
            const auto p = svc.image_path(rest.substr(0, slash), rest.substr(slash + 1));
            if (p && std::filesystem::exists(*p)) return {200, "image/png", read_file(*p)};
        }
        return json_reply(404, {{"error", "no such image"}});
    }
    return json_reply(404, {{"error", "no route for " + method + " " + path}});
}

void serve(LabelingService& svc, const std::string& host, int port, const std::atomic<bool>* stop,
           const std::function<void(int)>& on_ready) {
    httplib::Server server;
    auto route = [&svc](const httplib::Request& req, httplib::Response& res) {
        const auto r = handle_request(svc, req.method, req.path, req.body);
        res.status = r.status;
        if (r.status != 204) res.set_content(r.body, r.content_type);
    };
    server.Get(R"(/api/.*)", route);
    server.Post(R"(/api/.*)", route);
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    require(bound > 0, ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
    std::thread watcher;
    std::atomic<bool> finished{false};
    if (stop) {
        watcher = std::thread([&] {
            while (!stop->load() && !finished.load()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
            server.stop();
        });
    }
    if (on_ready) on_ready(bound);
    server.listen_after_bind();
    finished = true;
    if (watcher.joinable()) watcher.join();
}

}  // namespace pairval::service

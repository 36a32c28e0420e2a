#include "pairval/pairval.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "pairval/commands.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "pairval/features.hpp"
#include "pairval/metrics.hpp"
#include "pairval/service.hpp"

struct pv_image {
    pairval::Image image;
};

struct pv_session {
    std::unique_ptr<pairval::service::LabelingService> service;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;
std::atomic<bool> g_serve_stop{false};

pv_status record(pv_status s, const std::string& message) {
    g_last_error = message;
    return s;
}

template <class F>
pv_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return PV_OK;
    } catch (const pairval::Error& e) {
        return record(static_cast<pv_status>(static_cast<int>(e.code())), e.what());
    } catch (const json::exception& e) {
        return record(PV_ERR_PARSE, e.what());
    } catch (const std::bad_alloc&) {
        return record(PV_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return record(PV_ERR_INTERNAL, e.what());
    } catch (...) {
        return record(PV_ERR_INTERNAL, "unknown failure");
    }
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size());
    out[s.size()] = '\0';
    return out;
}

void need(const void* p, const char* what) {
    pairval::require(p != nullptr, pairval::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

json parse_request(const char* text) { return text && *text ? json::parse(text) : json::object(); }

}  // namespace

extern "C" {

const char* pv_version(void) { return "0.1.0"; }

const char* pv_status_name(pv_status status) {
    switch (status) {
        case PV_OK: return "ok";
        case PV_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case PV_ERR_IO: return "io";
        case PV_ERR_PARSE: return "parse";
        case PV_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
        case PV_ERR_DUPLICATE_ID: return "duplicate_id";
        case PV_ERR_UNSUPPORTED_FORMAT: return "unsupported_format";
        case PV_ERR_STALE_CACHE: return "stale_cache";
        case PV_ERR_DEGENERATE_DATA: return "degenerate_data";
        case PV_ERR_NOT_FITTED: return "not_fitted";
        case PV_ERR_NUMERIC: return "numeric";
        case PV_ERR_CONFLICT: return "conflict";
        case PV_ERR_NOT_FOUND: return "not_found";
        case PV_ERR_STATE: return "state";
        case PV_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* pv_last_error(void) { return g_last_error.c_str(); }

void pv_free(void* ptr) { std::free(ptr); }

pv_status pv_image_load(const char* path, pv_image** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new pv_image{pairval::load_image(path)};
    });
}

pv_status pv_image_create(int width, int height, int channels, const uint8_t* samples, pv_image** out) {
    return guarded([&] {
        need(samples, "samples");
        need(out, "out");
        pairval::require(width > 0 && height > 0 && (channels == 1 || channels == 3),
                         pairval::ErrorCode::invalid_argument, "width and height must be positive, channels 1 or 3");
        const auto n = static_cast<std::size_t>(width) * height * channels;
        *out = new pv_image{pairval::Image(width, height, channels, std::vector<std::uint8_t>(samples, samples + n))};
    });
}

pv_status pv_image_save(const pv_image* image, const char* path) {
    return guarded([&] {
        need(image, "image");
        need(path, "path");
        pairval::save_image(image->image, path);
    });
}

pv_status pv_image_info(const pv_image* image, int* width, int* height, int* channels) {
    return guarded([&] {
        need(image, "image");
        if (width) *width = image->image.width;
        if (height) *height = image->image.height;
        if (channels) *channels = image->image.channels;
    });
}

void pv_image_free(pv_image* image) { delete image; }

pv_status pv_metric(const char* name, const pv_image* a, const pv_image* b, const char* params_json, double* out) {
    using namespace pairval;
    return guarded([&] {
        need(name, "name");
        need(a, "a");
        need(b, "b");
        need(out, "out");
        const auto params = metrics::PixelMetricParams::from_json(parse_request(params_json));
        params.validate();
        const Image ga = to_grayscale(a->image);
        const Image gb = to_grayscale(b->image);
        require(ga.same_shape(gb), ErrorCode::dimension_mismatch, "images differ in size");
        const std::string m = name;
        if (m == "psnr") *out = metrics::psnr(ga, gb, params);
        else if (m == "ssim") *out = metrics::ssim(ga, gb, params);
        else if (m == "mse") *out = metrics::mse(ga, gb);
        else if (m == "tsi") *out = metrics::tsi(ga, gb, params);
        else if (m == "ws") *out = metrics::wasserstein(ga, gb, params);
        else if (m == "kl") *out = metrics::kl_divergence(ga, gb, params);
        else if (m == "hist_int") *out = metrics::hist_intersection(ga, gb, params);
        else if (m == "hist_cor") *out = metrics::hist_correlation(ga, gb, params);
        else if (m == "vif") *out = metrics::vif(ga, gb, params);
        else if (m == "sss") *out = features::sss(a->image, b->image);
        else if (m == "cs" || m == "cpl") {
            const auto fx = features::FeatureExtractor::builtin();
            const auto fa = fx.extract(a->image);
            const auto fb = fx.extract(b->image);
            *out = m == "cs" ? features::cosine_similarity(fa, fb) : features::cpl(fa, fb);
        } else {
            fail(ErrorCode::invalid_argument, "unknown metric '" + m + "'");
        }
    });
}

pv_status pv_command(const char* name, const char* request_json, char** result_json) {
    return guarded([&] {
        need(name, "name");
        need(result_json, "result_json");
        *result_json = nullptr;
        const auto request = parse_request(request_json);
        json result;
        if (std::string(name) == "serve" ||
            (std::string(name) == "al-run" && request.value("/args/oracle"_json_pointer, std::string()) == "interactive")) {
            g_serve_stop = false;
            result = pairval::commands::serve(request, &g_serve_stop);
        } else {
            result = pairval::commands::run(name, request);
        }
        *result_json = dup_string(result.dump());
    });
}

void pv_serve_stop(void) { g_serve_stop.store(true); }

pv_status pv_session_open(const char* request_json, pv_session** out) {
    return guarded([&] {
        need(out, "out");
        auto svc = pairval::commands::open_session(parse_request(request_json));
        *out = new pv_session{std::move(svc)};
    });
}

void pv_session_close(pv_session* session) { delete session; }

pv_status pv_session_status(pv_session* session, char** out) {
    return guarded([&] {
        need(session, "session");
        need(out, "json");
        *out = dup_string(session->service->session().dump());
    });
}

pv_status pv_session_next(pv_session* session, char** out) {
    return guarded([&] {
        need(session, "session");
        need(out, "json");
        const auto n = session->service->next();
        *out = dup_string(n ? n->dump() : "null");
    });
}

pv_status pv_session_submit(pv_session* session, const char* pair_id, const char* label, int* http_status, char** out) {
    return guarded([&] {
        need(session, "session");
        need(pair_id, "pair_id");
        need(label, "label");
        const auto r = session->service->submit({{"pair_id", pair_id}, {"label", label}});
        if (http_status) *http_status = r.status;
        if (out) *out = dup_string(r.body.dump());
    });
}

pv_status pv_session_wait(pv_session* session, int timeout_ms) {
    return guarded([&] {
        need(session, "session");
        const bool idle = session->service->wait_idle(std::chrono::milliseconds(timeout_ms < 0 ? 0 : timeout_ms));
        pairval::require(idle, pairval::ErrorCode::state, "retraining still in progress");
    });
}

pv_status pv_session_request(pv_session* session, const char* method, const char* path, const char* body,
                             int* http_status, char** content_type, char** response, size_t* response_len) {
    return guarded([&] {
        need(session, "session");
        need(method, "method");
        need(path, "path");
        const auto r = pairval::service::handle_request(*session->service, method, path, body ? body : "");
        if (http_status) *http_status = r.status;
        if (content_type) *content_type = dup_string(r.content_type);
        if (response) *response = dup_string(r.body);
        if (response_len) *response_len = r.body.size();
    });
}

}  // extern "C"

#include "doctest.h"
#include "pairval/commands.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "pairval/pipeline.hpp"
#include "pairval/synth.hpp"
#include "support.hpp"

using namespace pairval;
using nlohmann::json;

namespace {

json small_vae() { return {{"input_side", 8}, {"hidden", 16}, {"latent", 2}, {"epochs", 5}}; }

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::invalid_argument;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("cache follows the configuration fingerprint") {
    testsupport::TempDir dir("pipe");
    synth::SyntheticSpec spec;
    spec.n = 30;
    spec.width = 32;
    spec.height = 32;
    synth::write_synthetic(spec, dir.path());
    const std::string manifest = (dir / "manifest.csv").string();
    const std::string cache = (dir / "cache.csv").string();
    json req = {{"dataset", {{"manifest", manifest}, {"metric_cache", cache}}},
                {"metric_params", {{"vae", small_vae()}}},
                {"seed", 5},
                {"args", json::object()}};
    const auto m = commands::run("metrics", req);
    CHECK(m.at("rows") == 30);

    // Same parameters and seed: the cache is reused as is.
    const auto c = commands::run("correlate", req);
    CHECK(c.at("per_metric").size() == kMetricCount);

    auto changed = req;
    changed["metric_params"]["pixel"] = {{"hist_bins", 64}};
    CHECK(code_of([&] { commands::run("correlate", changed); }) == ErrorCode::stale_cache);

    auto pinned = req;
    pinned["metric_params"]["vae"]["seed"] = 6;
    CHECK(code_of([&] { commands::run("correlate", pinned); }) == ErrorCode::stale_cache);

    MetricConfig a, b;
    b.pixel.hist_bins = 64;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
    CHECK(config_fingerprint(a) == config_fingerprint(MetricConfig::from_json(a.to_json())));
}

TEST_CASE("cached rows equal a fresh pipeline computation") {
    synth::SyntheticSpec spec;
    spec.n = 12;
    spec.width = 32;
    spec.height = 32;
    const auto pairs = synth::generate_pairs(spec);
    MetricConfig cfg = MetricConfig::from_json({{"vae", small_vae()}});
    const auto cache = compute_metric_cache(pairs, cfg);
    const auto pipeline = MetricPipeline::train(cfg, pairs);
    CHECK(pipeline.fingerprint() == cache.fingerprint);
    for (const auto& p : pairs) CHECK(pipeline.compute(p) == cache.rows.at(p.id));
}

}  // TEST_SUITE

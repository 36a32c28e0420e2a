#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "pairval/alcore.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "support.hpp"

using namespace pairval;
using namespace pairval::al;
using testsupport::separable_items;
using testsupport::truth_of;

namespace {

ALConfig fast_config(std::uint64_t seed = 1) {
    ALConfig cfg;
    cfg.seed = seed;
    for (auto& h : cfg.grid.random_forest) h.trees = 30;
    cfg.grid.folds = 3;
    return cfg;
}

double accuracy(const Engine& e, const std::map<std::string, Label>& truth) {
    const auto labels = final_labels(e);
    std::size_t ok = 0;
    for (const auto& [id, l] : truth) ok += labels.at(id) == l;
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

void check_invariants(const Engine& e, const std::map<std::string, Label>& truth) {
    const std::size_t n = e.items().size();
    std::size_t prev_val = e.pre_validated().size();
    std::size_t prev_nv = n - prev_val;
    for (const auto& log : e.log()) {
        CHECK(log.d_val + log.d_nv == n);
        CHECK(log.d_val >= prev_val);
        CHECK(log.d_nv <= prev_nv);
        CHECK(log.d_nv < prev_nv);  // every iteration labels at least one pair
        prev_val = log.d_val;
        prev_nv = log.d_nv;
        for (const auto& [id, conf] : log.accepted) CHECK(conf >= e.config().alpha);
        CHECK(log.manual.size() <= e.batch_size());
    }
    CHECK(e.validated().size() + e.not_validated().size() == n);
    if (e.done()) {
        CHECK(e.not_validated().empty());
        CHECK(e.validated().size() == n);
    }
    std::size_t manual = 0;
    for (const auto& [id, rec] : e.validated()) {
        CHECK(e.not_validated().count(id) == 0);
        if (rec.provenance == Provenance::manual || rec.provenance == Provenance::pre_validated) {
            CHECK(rec.label == truth.at(id));
        }
        if (rec.provenance == Provenance::manual) ++manual;
        if (rec.provenance == Provenance::auto_accepted) {
            REQUIRE(rec.confidence.has_value());
            CHECK(*rec.confidence >= e.config().alpha);
        }
    }
    CHECK(manual == e.manual_count());
    CHECK(e.human_effort() == doctest::Approx(static_cast<double>(e.pre_validated().size() + manual) / n));
}

Engine run_simulated(const std::vector<Item>& items, const ALConfig& cfg, const RunOptions& opts = {}) {
    Engine e(items, cfg);
    SimulatedOracle oracle(truth_of(items));
    run(e, oracle, opts);
    return e;
}

}  // namespace

TEST_SUITE("alcore") {

TEST_CASE("separable data terminates with partial effort and consistent bookkeeping") {
    const auto items = separable_items(300, 1);
    const auto e = run_simulated(items, fast_config());
    CHECK(e.done());
    CHECK(e.human_effort() < 1.0);
    CHECK(accuracy(e, truth_of(items)) >= 0.95);
    check_invariants(e, truth_of(items));
}

TEST_CASE("alpha above one forces fully manual labelling") {
    const auto items = separable_items(120, 2);
    auto cfg = fast_config();
    cfg.alpha = 1.01;
    const auto e = run_simulated(items, cfg);
    CHECK(e.human_effort() == doctest::Approx(1.0));
    CHECK(accuracy(e, truth_of(items)) == doctest::Approx(1.0));
    check_invariants(e, truth_of(items));
}

TEST_CASE("alpha zero accepts everything after the pre-validated draw") {
    const auto items = separable_items(200, 3);
    auto cfg = fast_config();
    cfg.alpha = 0.0;
    const auto e = run_simulated(items, cfg);
    CHECK(e.human_effort() == doctest::Approx(cfg.dv_fraction));
    CHECK(e.manual_count() == 0);
    CHECK(e.log().size() == 1);
    check_invariants(e, truth_of(items));
}

TEST_CASE("pre-validated draw and batch size follow the configuration") {
    const auto items = separable_items(200, 4);
    auto cfg = fast_config();
    cfg.dv_fraction = 0.15;
    cfg.beta_fraction = 0.03;
    Engine e(items, cfg);
    CHECK(e.pre_validated().size() == 30);
    CHECK(e.batch_size() == static_cast<std::size_t>(std::ceil(0.03 * 170)));
    for (const auto& id : e.pre_validated()) CHECK(e.validated().at(id).provenance == Provenance::pre_validated);
    CHECK(std::is_sorted(e.pending().begin(), e.pending().end()));
    CHECK(e.pending().size() <= e.batch_size());
}

TEST_CASE("pre-validated draw with a single class is degenerate") {
    auto items = separable_items(100, 5);
    // Only invalid pairs carry a known label, so D_v can never contain both classes.
    for (auto& it : items)
        if (it.known_label == Label::valid) it.known_label.reset();
    try {
        Engine e(items, fast_config());
        FAIL("expected degenerate_data");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::degenerate_data);
    }
}

TEST_CASE("submit and advance enforce the protocol") {
    const auto items = separable_items(150, 6);
    auto cfg = fast_config();
    cfg.alpha = 1.01;
    Engine e(items, cfg);
    REQUIRE(e.awaiting_labels());
    const auto first = e.pending().front();
    const auto truth = truth_of(items);
    CHECK_THROWS_AS(e.advance(), Error);
    e.submit(first, truth.at(first));
    try {
        e.submit(first, truth.at(first));
        FAIL("duplicate accepted");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::conflict);
    }
    try {
        e.submit("nope", Label::valid);
        FAIL("unknown accepted");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::conflict);
    }
    try {
        e.submit(e.pre_validated().front(), Label::valid);
        FAIL("validated pair accepted");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::conflict);
    }
    const int iteration = e.iteration();
    try {
        e.advance();
        FAIL("advance with unlabeled pairs");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::state);
    }
    CHECK(e.iteration() == iteration);
    for (const auto& id : e.pending())
        if (!e.submitted().count(id)) e.submit(id, truth.at(id));
    e.advance();
    CHECK(e.iteration() == iteration + 1);
    CHECK(e.validated().at(first).provenance == Provenance::manual);
}

TEST_CASE("interrupted run resumed from its checkpoint equals the straight run") {
    testsupport::TempDir dir("resume");
    const auto items = separable_items(250, 7);
    auto cfg = fast_config(11);
    cfg.alpha = 0.97;
    cfg.beta_fraction = 0.03;
    const auto straight = run_simulated(items, cfg);
    REQUIRE(straight.log().size() >= 2);

    RunOptions first;
    first.checkpoint_path = dir / "cp.json";
    first.stop_after_iterations = 1;
    const auto partial = run_simulated(items, cfg, first);
    CHECK_FALSE(partial.done());

    auto resumed = Engine::restore(nlohmann::json::parse(read_file(dir / "cp.json")), items, cfg);
    SimulatedOracle oracle(truth_of(items));
    run(resumed, oracle);
    CHECK(resumed.done());
    CHECK(final_labels(resumed) == final_labels(straight));
    CHECK(resumed.checkpoint() == straight.checkpoint());
}

TEST_CASE("restore rejects a different configuration and completed runs stay put") {
    testsupport::TempDir dir("restore");
    const auto items = separable_items(120, 8);
    const auto cfg = fast_config();
    RunOptions opts;
    opts.checkpoint_path = dir / "cp.json";
    const auto done = run_simulated(items, cfg, opts);
    const auto cp = nlohmann::json::parse(read_file(dir / "cp.json"));
    auto altered = cfg;
    altered.alpha = 0.8;
    try {
        Engine::restore(cp, items, altered);
        FAIL("restore accepted altered alpha");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::conflict);
    }
    auto again = Engine::restore(cp, items, cfg);
    CHECK(again.done());
    SimulatedOracle oracle(truth_of(items));
    run(again, oracle);
    CHECK(again.checkpoint() == done.checkpoint());
}

TEST_CASE("manual budget hands the remainder to the classifier") {
    const auto items = separable_items(200, 9);
    auto cfg = fast_config();
    cfg.alpha = 1.01;
    cfg.manual_budget = 15;
    const auto e = run_simulated(items, cfg);
    CHECK(e.done());
    CHECK(e.manual_count() == 15);
    std::size_t fallback = 0;
    for (const auto& [id, r] : e.validated()) fallback += r.provenance == Provenance::fallback;
    CHECK(fallback == 200 - 20 - 15);
    check_invariants(e, truth_of(items));
}

TEST_CASE("run log has one JSON line per iteration") {
    testsupport::TempDir dir("log");
    const auto items = separable_items(150, 10);
    RunOptions opts;
    opts.log_path = dir / "run.jsonl";
    const auto e = run_simulated(items, fast_config(), opts);
    std::ifstream in(dir / "run.jsonl");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(IterationLog::from_json(j).to_json() == j);
        CHECK(j.at("iteration").get<int>() == e.log()[n].iteration);
        ++n;
    }
    CHECK(n == e.log().size());
}

TEST_CASE("oracle failure leaves the last completed step checkpointed") {
    testsupport::TempDir dir("oracle");
    struct Flaky : Oracle {
        std::map<std::string, Label> truth;
        int calls = 0;
        Label label(const std::string& id) override {
            if (++calls > 3) throw std::runtime_error("annotator went home");
            return truth.at(id);
        }
    };
    const auto items = separable_items(150, 12);
    auto cfg = fast_config();
    cfg.alpha = 1.01;
    Engine e(items, cfg);
    Flaky oracle;
    oracle.truth = truth_of(items);
    RunOptions opts;
    opts.checkpoint_path = dir / "cp.json";
    CHECK_THROWS(run(e, oracle, opts));
    const auto restored = Engine::restore(nlohmann::json::parse(read_file(dir / "cp.json")), items, cfg);
    CHECK(restored.iteration() == e.iteration());
    CHECK(restored.submitted().empty());
}

TEST_CASE("simulated oracle rejects unknown ids") {
    SimulatedOracle o({{"a", Label::valid}});
    CHECK(o.label("a") == Label::valid);
    try {
        o.label("b");
        FAIL("expected not_found");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::not_found);
    }
}

TEST_CASE("config validation and JSON round-trip") {
    ALConfig cfg;
    cfg.beta_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.dv_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.alpha = -0.1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = fast_config(99);
    cfg.manual_budget = 7;
    const auto j = cfg.to_json();
    CHECK(ALConfig::from_json(j).to_json() == j);
}

TEST_CASE("property: invariants hold across seeds and parameters") {
    const double alphas[] = {0.8, 0.9, 0.99};
    const double betas[] = {0.01, 0.05, 0.15};
    int k = 0;
    for (double a : alphas)
        for (double b : betas) {
            const auto items = separable_items(120, 100 + k);
            auto cfg = fast_config(static_cast<std::uint64_t>(k++));
            cfg.alpha = a;
            cfg.beta_fraction = b;
            cfg.kind = static_cast<learn::ClassifierKind>(k % 4);
            const auto e = run_simulated(items, cfg);
            CHECK(e.done());
            check_invariants(e, truth_of(items));
        }
}

}  // TEST_SUITE

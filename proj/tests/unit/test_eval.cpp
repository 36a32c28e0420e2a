#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "pairval/eval.hpp"
#include "pairval/metrics.hpp"
#include "pairval/reports.hpp"
#include "pairval/synth.hpp"
#include "support.hpp"

using namespace pairval;
using namespace pairval::eval;

namespace {

std::vector<std::size_t> brute_front(const std::vector<ParetoPoint>& pts) {
    std::vector<oracles::Point> plain;
    for (const auto& p : pts) plain.push_back({p.config_id, p.accuracy, p.effort});
    return oracles::pareto_bruteforce(plain);
}

LabeledDataset small_dataset(std::size_t n, std::uint64_t seed) {
    return LabeledDataset::from_items(testsupport::separable_items(n, seed));
}

GridSpec tiny_grid() {
    GridSpec g;
    g.kinds = {learn::ClassifierKind::decision_tree};
    g.alphas = {0.9};
    g.betas = {0.05};
    g.dv_fractions = {0.2};
    g.tune.folds = 3;
    return g;
}

RunResult fake_result(learn::ClassifierKind kind, double alpha, double beta, double dv, double accuracy) {
    RunResult r;
    r.config_id = config_id(kind, alpha, beta, dv);
    r.config = {{"classifier", learn::to_string(kind)}, {"alpha", alpha}, {"beta", beta}, {"dv_fraction", dv}};
    r.accuracy = accuracy;
    r.human_effort = dv + beta;
    return r;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("pareto example keeps the two non-dominated points") {
    const std::vector<ParetoPoint> pts = {{"a", 0.9, 0.2}, {"b", 0.95, 0.5}, {"c", 0.85, 0.6}};
    const auto front = pareto_front(pts);
    CHECK(front == std::vector<std::size_t>{0, 1});
    CHECK(pareto_front(std::vector<ParetoPoint>{{"x", 0.5, 0.5}}) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(pareto_front(std::vector<ParetoPoint>{}), Error);
}

TEST_CASE("pareto deduplicates by config id and keeps distinct ties") {
    const std::vector<ParetoPoint> pts = {{"a", 0.9, 0.2}, {"a", 0.9, 0.2}, {"b", 0.9, 0.2}};
    CHECK(pareto_front(pts) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("property: pareto front equals brute-force domination filtering") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> grid(0, 40);
    for (std::size_t n : {1u, 2u, 5u, 17u, 100u, 1000u}) {
        std::vector<ParetoPoint> pts;
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse coordinates force plenty of ties.
            pts.push_back({"c" + std::to_string(rng() % (n + 3)), grid(rng) / 40.0, grid(rng) / 40.0});
        }
        CHECK(pareto_front(pts) == brute_front(pts));
    }
}

TEST_CASE("default grid has 720 configurations") {
    const auto g = GridSpec::defaults();
    CHECK(g.size() == 720);
    CHECK(g.alphas == std::vector<double>{0.8, 0.85, 0.9, 0.95, 0.99});
    CHECK(g.betas == std::vector<double>{0.01, 0.03, 0.05, 0.08, 0.10, 0.15});
    CHECK(g.dv_fractions == std::vector<double>{0.10, 0.15, 0.20, 0.25, 0.30, 0.40});
    CHECK(GridSpec::from_json(g.to_json()).size() == 720);
}

TEST_CASE("single-cell grid produces one reproducible result") {
    const auto data = small_dataset(100, 3);
    const auto a = grid_search(data, tiny_grid(), 7);
    REQUIRE(a.size() == 1);
    CHECK(a[0].ok);
    CHECK(a[0].config_id == config_id(learn::ClassifierKind::decision_tree, 0.9, 0.05, 0.2));
    CHECK(a[0].accuracy >= 0.9);
    CHECK(a[0].human_effort >= 0.2);
    const auto b = grid_search(data, tiny_grid(), 7);
    CHECK(a[0].to_json().dump() != "");
    CHECK(a[0].accuracy == b[0].accuracy);
    CHECK(a[0].human_effort == b[0].human_effort);
    CHECK(a[0].seed == b[0].seed);
}

TEST_CASE("failed run is recorded and the sweep continues") {
    auto g = tiny_grid();
    g.dv_fractions = {0.1, 1.0};  // a D_v covering the whole dataset is rejected
    const auto results = grid_search(small_dataset(150, 4), g, 1);
    REQUIRE(results.size() == 2);
    CHECK(results[0].ok);
    CHECK_FALSE(results[1].ok);
    CHECK_FALSE(results[1].error.empty());
}

TEST_CASE("results CSV round-trips and omits wall time") {
    testsupport::TempDir dir("results");
    const auto data = small_dataset(80, 5);
    auto g = tiny_grid();
    g.alphas = {0.8, 0.95};
    auto results = grid_search(data, g, 3);
    results.push_back(results[0]);
    results.back().config_id = "broken";
    results.back().ok = false;
    results.back().error = "went, wrong \"here\"";
    results.back().precision.reset();
    write_results_csv(results, dir / "r.csv");
    const auto back = read_results_csv(dir / "r.csv");
    REQUIRE(back.size() == results.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].config_id == results[i].config_id);
        CHECK(back[i].ok == results[i].ok);
        CHECK(back[i].error == results[i].error);
        CHECK(back[i].accuracy == results[i].accuracy);
        CHECK(back[i].precision == results[i].precision);
        CHECK(back[i].human_effort == results[i].human_effort);
        CHECK(back[i].seed == results[i].seed);
        CHECK(back[i].config.at("alpha") == results[i].config.at("alpha"));
    }
    const auto text = read_file(dir / "r.csv");
    CHECK(text.find("wall") == std::string::npos);
    write_timing_csv(results, dir / "t.csv");
    CHECK(read_file(dir / "t.csv").rfind("config_id,wall_time_s\n", 0) == 0);
}

TEST_CASE("characterization splits on the classifier when it alone decides") {
    std::vector<RunResult> results;
    for (auto kind : {learn::ClassifierKind::random_forest, learn::ClassifierKind::decision_tree,
                      learn::ClassifierKind::svm, learn::ClassifierKind::logistic_regression})
        for (double a : {0.8, 0.9})
            for (double dv : {0.1, 0.2})
                results.push_back(fake_result(kind, a, 0.05, dv, kind == learn::ClassifierKind::random_forest ? 0.97 : 0.9));
    const auto s = characterize_configs(results, [](const RunResult& r) { return r.accuracy >= 0.96; });
    CHECK(s.acceptable == 4);
    CHECK(s.unacceptable == 12);
    const auto& t = s.tree;
    REQUIRE(t.at("feature")[0].get<int>() == 0);
    for (const char* side : {"left", "right"}) {
        const int child = t.at(side)[0].get<int>();
        CHECK(t.at("feature")[child].get<int>() < 0);
        const double wv = t.at("weight_valid")[child].get<double>(), wt = t.at("weight_total")[child].get<double>();
        CHECK((wv == 0.0 || wv == wt));
    }
    CHECK(s.rules.front().find("N = [12, 4]") != std::string::npos);
    CHECK(s.rules.size() == 3);
}

TEST_CASE("characterization of all-acceptable results is a single leaf") {
    std::vector<RunResult> results;
    for (double a : {0.8, 0.9, 0.95}) results.push_back(fake_result(learn::ClassifierKind::svm, a, 0.01, 0.1, 0.99));
    const auto s = characterize_configs(results, [](const RunResult&) { return true; });
    CHECK(s.rules.size() == 1);
    CHECK(s.rules[0].find("N = [0, 3]") != std::string::npos);
    CHECK(s.rules[0].find("acceptable") != std::string::npos);
}

TEST_CASE("property: characterization node counts sum to the input size") {
    std::mt19937_64 rng(5);
    std::vector<RunResult> results;
    const auto g = GridSpec::defaults();
    for (auto kind : g.kinds)
        for (double a : g.alphas)
            for (double b : g.betas)
                for (double dv : g.dv_fractions) results.push_back(fake_result(kind, a, b, dv, (rng() % 100) / 100.0));
    const auto s = characterize_configs(results, [](const RunResult& r) { return r.accuracy >= 0.5 && r.human_effort < 0.3; });
    CHECK(s.acceptable + s.unacceptable == 720);
    const auto& t = s.tree;
    const std::size_t nodes = t.at("feature").size();
    CHECK(t.at("weight_total")[0].get<double>() == 720.0);
    for (std::size_t i = 0; i < nodes; ++i) {
        const int f = t.at("feature")[i].get<int>();
        if (f < 0) continue;
        const int l = t.at("left")[i].get<int>(), r = t.at("right")[i].get<int>();
        CHECK(t.at("weight_total")[l].get<double>() + t.at("weight_total")[r].get<double>() ==
              t.at("weight_total")[i].get<double>());
        CHECK(t.at("weight_valid")[l].get<double>() + t.at("weight_valid")[r].get<double>() ==
              t.at("weight_valid")[i].get<double>());
    }
}

TEST_CASE("synthetic generator counts and determinism") {
    synth::SyntheticSpec spec;
    spec.n = 100;
    spec.width = 32;
    spec.height = 32;
    spec.seed = 5;
    std::vector<std::string> transforms;
    const auto a = synth::generate_pairs(spec, &transforms);
    REQUIRE(a.size() == 100);
    CHECK(std::count_if(a.begin(), a.end(), [](const ImagePair& p) { return p.ground_truth == Label::valid; }) == 60);
    CHECK(transforms.size() == 100);
    const auto b = synth::generate_pairs(spec);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].original == b[i].original);
        CHECK(a[i].transformed == b[i].transformed);
    }
    spec.seed = 6;
    CHECK_FALSE(synth::generate_pairs(spec)[0].original == a[0].original);
    testsupport::TempDir dir("synth");
    spec.n = 5;
    const auto m = synth::write_synthetic(spec, dir.path());
    CHECK(m.entries.size() == 5);
    CHECK(load_manifest(dir / "manifest.csv").entries.size() == 5);
    const auto again = load_pair(m.entries[0]);
    CHECK(again.original == synth::generate_pairs(spec)[0].original);
}

TEST_CASE("valid synthetic pairs have a higher mean VIF at n = 200") {
    synth::SyntheticSpec spec;
    spec.n = 200;
    spec.seed = 11;
    double sv = 0, si = 0;
    std::size_t nv = 0, ni = 0;
    for (const auto& p : synth::generate_pairs(spec)) {
        const double v = metrics::vif(to_grayscale(p.original), to_grayscale(p.transformed));
        (p.ground_truth == Label::valid ? sv : si) += v;
        (p.ground_truth == Label::valid ? nv : ni) += 1;
    }
    CHECK(sv / nv > si / ni);
}

TEST_CASE("rq2 structure: runs, shared splits and every comparison") {
    const auto data = small_dataset(80, 9);
    Rq2Spec spec;
    spec.repetitions = 3;
    spec.retrain_vae = false;
    spec.tune = learn::TuneGrid::defaults();
    for (auto& h : spec.tune.random_forest) h.trees = 20;
    spec.tune.folds = 3;
    const auto rep = rq2_protocol(data, spec, 4);
    CHECK(rep.runs.size() == 4 * 3 * 3);
    std::map<std::string, std::set<std::string>> splits;
    for (const auto& r : rep.runs) {
        CHECK(r.ok);
        const std::string key = r.config.at("effort").dump() + "/" + r.config.at("repetition").dump();
        splits[key].insert(r.config.at("split").get<std::string>());
    }
    CHECK(splits.size() == 9);
    for (const auto& [key, ids] : splits) CHECK(ids.size() == 1);
    const std::vector<std::string> methods = {"hil_tv", "hil_tv_no_al", "b_vif", "b_vae"};
    for (double e : spec.efforts) {
        for (const auto& m : methods) {
            REQUIRE(rep.find(m, e) != nullptr);
            CHECK(rep.find(m, e)->accuracy.size() == 3);
        }
        for (std::size_t a = 0; a < methods.size(); ++a)
            for (std::size_t b = a + 1; b < methods.size(); ++b) {
                const auto* c = rep.find_comparison(methods[a], methods[b], e);
                REQUIRE(c != nullptr);
                CHECK(c->a12 >= 0.0);
                CHECK(c->a12 <= 1.0);
            }
    }
    for (const auto& r : rep.runs) {
        if (r.method == "hil_tv") CHECK(r.human_effort <= r.config.at("effort").get<double>() + 1e-9);
    }
    const auto md = rep.to_markdown();
    CHECK(md.find("b_vif") != std::string::npos);
    CHECK(rep.to_json().at("runs").size() == 36);
}

TEST_CASE("rq2 default protocol size is 240 runs") {
    const Rq2Spec spec;
    CHECK(spec.efforts.size() * static_cast<std::size_t>(spec.repetitions) * 4 == 240);
}

TEST_CASE("correlate ranks informative metrics first") {
    const auto data = small_dataset(200, 6);
    const auto rep = correlate(data, 0.9, 5);
    REQUIRE(rep.per_metric.size() == kMetricCount);
    REQUIRE(rep.top.size() == 5);
    const std::set<std::string> head(rep.top.begin(), rep.top.begin() + 2);
    CHECK(head == std::set<std::string>{"ssim", "mse"});
    CHECK(*rep.per_metric[static_cast<std::size_t>(MetricIndex::ssim)].r > 0.8);
    CHECK(*rep.per_metric[static_cast<std::size_t>(MetricIndex::mse)].r < -0.8);
    CHECK(rep.to_markdown().find("ssim") != std::string::npos);
}

TEST_CASE("pareto reports render every point") {
    const std::vector<ParetoPoint> pts = {{"a", 0.9, 0.2}, {"b", 0.95, 0.5}, {"c", 0.85, 0.6}};
    const auto front = pareto_front(pts);
    const auto svg = pareto_svg(pts, front);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 3);
    CHECK(pareto_json(pts, front).at("front").size() == 2);
}

}  // TEST_SUITE

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//   pairval_acceptance            run every criterion
//   pairval_acceptance --only K   run the criteria with key K (repeatable)
//   pairval_acceptance --list     print the keys

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "pairval/alcore.hpp"
#include "pairval/baselines.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"
#include "pairval/eval.hpp"
#include "pairval/metrics.hpp"
#include "pairval/pipeline.hpp"
#include "pairval/stats.hpp"
#include "pairval/synth.hpp"
#include "pairval/util.hpp"
#include "pairval/vae.hpp"
#include "support.hpp"

using namespace pairval;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failed expectations and a short detail line.
class Outcome {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        failed_ = failed_ || !ok;
    }
    void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
    bool passed() const { return !failed_; }
    std::string detail() const {
        std::string out = notes_;
        for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + ("failed: " + f);
        return out;
    }

private:
    bool failed_ = false;
    std::vector<std::string> failures_;
    std::string notes_;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

/// |a - b| within tol, relative once |b| exceeds 1.
bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

std::vector<al::Item> items_of(const std::vector<ImagePair>& pairs, const MetricCache& cache) {
    std::vector<al::Item> items;
    for (const auto& p : pairs) items.push_back({p.id, cache.rows.at(p.id), p.ground_truth});
    return items;
}

MetricConfig metric_config(std::uint64_t seed) {
    MetricConfig cfg;
    cfg.vae.seed = seed;
    return cfg;
}

// ------------------------------------------------------------------ identity

void identity(Outcome& out) {
    const auto t0 = Clock::now();
    std::vector<ImagePair> pairs;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto img = synth::make_original(64, 64, derive_seed(2024, i));
        ImagePair p;
        p.id = "id" + std::to_string(i);
        p.original = img;
        p.transformed = img;
        pairs.push_back(std::move(p));
    }
    const auto cfg = metric_config(3);
    const auto pipeline = MetricPipeline::train(cfg, pairs);
    const auto again = MetricPipeline::train(cfg, pairs);

    struct Expect {
        MetricIndex m;
        double value;
    };
    const std::vector<Expect> expected = {
        {MetricIndex::mse, 0.0},      {MetricIndex::ws, 0.0},       {MetricIndex::kl, 0.0},
        {MetricIndex::cpl, 0.0},      {MetricIndex::ssim, 1.0},     {MetricIndex::tsi, 1.0},
        {MetricIndex::hist_int, 1.0}, {MetricIndex::hist_cor, 1.0}, {MetricIndex::vif, 1.0},
        {MetricIndex::cs, 1.0},       {MetricIndex::sss, 1.0},      {MetricIndex::psnr, cfg.pixel.psnr_cap},
    };
    double worst = 0.0;
    for (const auto& p : pairs) {
        const auto v = pipeline.compute(p);
        for (const auto& e : expected) {
            const double dev = std::abs(v[e.m] - e.value);
            worst = std::max(worst, dev);
            out.expect(dev <= 1e-6, p.id + " " + std::string(kMetricNames[static_cast<std::size_t>(e.m)]) + " = " +
                                        fmt("%.9g", v[e.m]));
        }
        out.expect(std::isfinite(v[MetricIndex::vae_re]), p.id + " vae_re not finite");
        out.expect(pipeline.compute(p)[MetricIndex::vae_re] == v[MetricIndex::vae_re], p.id + " vae_re differs on recompute");
        out.expect(again.compute(p)[MetricIndex::vae_re] == v[MetricIndex::vae_re], p.id + " vae_re differs after retraining");
    }
    const double elapsed = seconds_since(t0);
    out.expect(elapsed < 30.0, "runtime " + fmt("%.1f s", elapsed));
    out.note("50 images, worst deviation " + fmt("%.2g", worst) + ", " + fmt("%.1f s", elapsed));
}

// ------------------------------------------------------------------ oracles

void oracle_equivalence(Outcome& out) {
    constexpr double tol = 1e-9;
    std::mt19937_64 rng(99);
    int checks = 0;

    // GLCM on images up to 8x8.
    const std::vector<std::vector<metrics::Offset>> offset_sets = {{{0, 1}, {1, 0}}, {{1, 1}}, {{0, 2}, {2, 1}}};
    for (int trial = 0; trial < 60; ++trial) {
        const int w = 1 + trial % 8, h = 1 + (trial / 8) % 8;
        const int levels = trial % 3 == 0 ? 2 : trial % 3 == 1 ? 4 : 8;
        const auto img = testsupport::random_image(w, h, 1, 1000 + static_cast<std::uint64_t>(trial));
        const auto& offs = offset_sets[static_cast<std::size_t>(trial) % offset_sets.size()];
        std::vector<std::pair<int, int>> plain;
        for (const auto& o : offs) plain.emplace_back(o.drow, o.dcol);
        const auto got = metrics::glcm_counts(img, levels, offs);
        const auto want = oracles::glcm_bruteforce(img, levels, plain);
        out.expect(got == want, "glcm " + std::to_string(w) + "x" + std::to_string(h));
        ++checks;
    }

    // Wasserstein against the transport LP on up to 8 bins.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t bins = 2 + static_cast<std::size_t>(trial) % 7;
        std::vector<double> p(bins), q(bins);
        for (auto& v : p) v = u(rng) < 0.3 ? 0.0 : u(rng);
        for (auto& v : q) v = u(rng);
        p[0] += 1e-3;
        const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
        for (auto& v : p) v /= sp;
        for (auto& v : q) v /= sq;
        const double width = 256.0 / static_cast<double>(bins);
        out.expect(close(metrics::wasserstein_1d(p, q, width), oracles::transport_lp(p, q, width), tol),
                   "wasserstein bins=" + std::to_string(bins));
        ++checks;
    }

    // Pareto front up to n = 1000, with coordinate ties and repeated ids.
    for (std::size_t n : {1u, 2u, 10u, 100u, 500u, 1000u}) {
        std::uniform_int_distribution<int> grid(0, 40);
        std::uniform_int_distribution<std::size_t> id(0, n + n / 10);
        std::vector<eval::ParetoPoint> pts;
        std::vector<oracles::Point> plain;
        for (std::size_t i = 0; i < n; ++i) {
            const auto name = "c" + std::to_string(id(rng));
            const double a = grid(rng) / 40.0, e = grid(rng) / 40.0;
            pts.push_back({name, a, e});
            plain.push_back({name, a, e});
        }
        out.expect(eval::pareto_front(pts) == oracles::pareto_bruteforce(plain), "pareto n=" + std::to_string(n));
        ++checks;
    }

    // Scalar statistics on samples of size <= 10.
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_int_distribution<int> small(0, 6);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t len = 3 + static_cast<std::size_t>(trial) % 8;
        std::vector<double> x(len), y(len);
        for (std::size_t i = 0; i < len; ++i) x[i] = nd(rng), y[i] = 0.5 * x[i] + nd(rng);
        out.expect(close(*stats::pearson(x, y).r, oracles::pearson_textbook(x, y), tol), "pearson");

        std::vector<double> a(1 + trial % 8), b(1 + (trial / 8) % 8);
        for (auto& v : a) v = small(rng);
        for (auto& v : b) v = small(rng);
        out.expect(close(stats::vargha_delaney_a12(a, b), oracles::a12_enumerate(a, b), tol), "a12");
        out.expect(close(stats::wilcoxon_exact(a, b), oracles::wilcoxon_enumerate(a, b), tol), "wilcoxon");

        std::uniform_int_distribution<int> cell(0, 8);
        const int c11 = cell(rng) + 1, c10 = cell(rng), c01 = cell(rng), c00 = cell(rng) + 1;
        std::vector<int> r1, r2;
        auto add = [&](int x1, int x2, int count) {
            for (int i = 0; i < count; ++i) r1.push_back(x1), r2.push_back(x2);
        };
        add(1, 1, c11);
        add(1, 0, c10);
        add(0, 1, c01);
        add(0, 0, c00);
        out.expect(close(*stats::cohens_kappa(r1, r2), oracles::kappa_table(c11, c10, c01, c00), tol), "kappa");
        checks += 4;
    }
    out.note(std::to_string(checks) + " oracle comparisons at 1e-9");
}

// ------------------------------------------------------------------ VAE gradient

void vae_gradcheck(Outcome& out) {
    features::VaeConfig cfg;
    cfg.input_side = 8;
    cfg.hidden = 8;
    cfg.latent = 2;
    cfg.seed = 3;
    features::VaeModel model(cfg);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(cfg.input_dim(), 5), noise(cfg.latent, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = n(rng);
    features::VaeGradients grad;
    model.loss(x, noise, &grad);
    const auto params = model.parameters();
    out.expect(grad.size() == params.size(), "gradient block count");
    if (grad.size() != params.size()) return;

    const double h = 1e-5;
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& block = *params[p];
        for (Eigen::Index k = 0; k < block.size(); ++k) {
            const double orig = block.data()[k];
            block.data()[k] = orig + h;
            const double lp = model.loss(x, noise);
            block.data()[k] = orig - h;
            const double lm = model.loss(x, noise);
            block.data()[k] = orig;
            const double numeric = (lp - lm) / (2 * h);
            const double analytic = grad[p].data()[k];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
            ++checked;
        }
    }
    out.expect(worst < 1e-4, "worst relative error " + fmt("%.3g", worst));
    out.note(std::to_string(checked) + " parameters, worst relative error " + fmt("%.2g", worst));
}

// ------------------------------------------------------------------ active-learning loop

al::ALConfig fast_config(std::uint64_t seed) {
    al::ALConfig cfg;
    cfg.seed = seed;
    for (auto& h : cfg.grid.random_forest) h.trees = 30;
    cfg.grid.folds = 3;
    return cfg;
}

double accuracy_of(const al::Engine& e, const std::map<std::string, Label>& truth) {
    const auto labels = al::final_labels(e);
    std::size_t ok = 0;
    for (const auto& [id, l] : truth) ok += labels.at(id) == l;
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

void check_invariants(Outcome& out, const al::Engine& e, const std::map<std::string, Label>& truth,
                      const std::string& tag) {
    const std::size_t n = e.items().size();
    std::size_t prev_val = e.pre_validated().size(), prev_nv = n - prev_val;
    for (const auto& log : e.log()) {
        out.expect(log.d_val + log.d_nv == n, tag + ": conservation at iteration " + std::to_string(log.iteration));
        out.expect(log.d_val >= prev_val && log.d_nv < prev_nv,
                   tag + ": progress at iteration " + std::to_string(log.iteration));
        for (const auto& [id, conf] : log.accepted) out.expect(conf >= e.config().alpha, tag + ": accepted below alpha");
        out.expect(log.manual.size() <= e.batch_size(), tag + ": manual batch too large");
        prev_val = log.d_val;
        prev_nv = log.d_nv;
    }
    std::size_t manual = 0;
    for (const auto& [id, rec] : e.validated()) {
        if (rec.provenance == al::Provenance::manual || rec.provenance == al::Provenance::pre_validated) {
            out.expect(rec.label == truth.at(id), tag + ": human label differs from the oracle");
        }
        manual += rec.provenance == al::Provenance::manual;
    }
    out.expect(e.done() && e.validated().size() == n && e.not_validated().empty(), tag + ": run incomplete");
    out.expect(manual == e.manual_count(), tag + ": manual count");
}

al::Engine run_simulated(const std::vector<al::Item>& items, const al::ALConfig& cfg, const al::RunOptions& opts = {}) {
    al::Engine e(items, cfg);
    al::SimulatedOracle oracle(testsupport::truth_of(items));
    al::run(e, oracle, opts);
    return e;
}

void al_structural(Outcome& out) {
    {
        const auto items = testsupport::separable_items(150, 2);
        auto cfg = fast_config(1);
        cfg.alpha = 1.01;
        const auto e = run_simulated(items, cfg);
        out.expect(e.human_effort() == 1.0, "alpha > 1 effort " + fmt("%.3f", e.human_effort()));
        out.expect(accuracy_of(e, testsupport::truth_of(items)) == 1.0, "alpha > 1 accuracy");
        check_invariants(out, e, testsupport::truth_of(items), "alpha>1");
    }
    {
        const auto items = testsupport::separable_items(200, 3);
        auto cfg = fast_config(1);
        cfg.alpha = 0.0;
        const auto e = run_simulated(items, cfg);
        out.expect(std::abs(e.human_effort() - cfg.dv_fraction) < 1e-12, "alpha = 0 effort " + fmt("%.3f", e.human_effort()));
        check_invariants(out, e, testsupport::truth_of(items), "alpha=0");
    }
    std::size_t runs = 0;
    for (auto kind : {learn::ClassifierKind::random_forest, learn::ClassifierKind::decision_tree,
                      learn::ClassifierKind::svm, learn::ClassifierKind::logistic_regression}) {
        for (double alpha : {0.8, 0.95}) {
            const auto items = testsupport::separable_items(160, 40 + runs);
            auto cfg = fast_config(runs);
            cfg.kind = kind;
            cfg.alpha = alpha;
            cfg.beta_fraction = 0.03;
            check_invariants(out, run_simulated(items, cfg), testsupport::truth_of(items),
                             std::string(learn::to_string(kind)));
            ++runs;
        }
    }
    {
        testsupport::TempDir dir("accept-resume");
        const auto items = testsupport::separable_items(250, 7);
        auto cfg = fast_config(11);
        cfg.alpha = 0.97;
        cfg.beta_fraction = 0.03;
        const auto straight = run_simulated(items, cfg);
        al::RunOptions first;
        first.checkpoint_path = dir / "cp.json";
        first.stop_after_iterations = 1;
        const auto partial = run_simulated(items, cfg, first);
        out.expect(!partial.done() && straight.log().size() >= 2, "interrupted run should stop early");
        std::ifstream in(dir / "cp.json");
        auto resumed = al::Engine::restore(nlohmann::json::parse(in), items, cfg);
        al::SimulatedOracle oracle(testsupport::truth_of(items));
        al::run(resumed, oracle);
        out.expect(resumed.checkpoint() == straight.checkpoint(), "resumed run differs from the straight run");
    }
    out.note(std::to_string(runs + 3) + " runs, invariants checked at every iteration");
}

// ------------------------------------------------------------------ desk scale

void desk_end_to_end(Outcome& out) {
    const auto t0 = Clock::now();
    synth::SyntheticSpec spec;
    spec.n = 500;
    spec.valid_fraction = 0.6;
    spec.seed = 42;
    const auto pairs = synth::generate_pairs(spec);
    const auto cache = compute_metric_cache(pairs, metric_config(42));
    const auto data = eval::LabeledDataset::from_items(items_of(pairs, cache));
    al::ALConfig cfg;
    cfg.kind = learn::ClassifierKind::random_forest;
    cfg.alpha = 0.9;
    cfg.beta_fraction = 0.05;
    cfg.dv_fraction = 0.10;
    cfg.seed = 42;
    const auto r = eval::run_al_once(data, cfg, "desk");
    const double elapsed = seconds_since(t0);
    out.expect(r.ok, "run failed: " + r.error);
    out.expect(r.accuracy >= 0.95, "accuracy " + fmt("%.4f", r.accuracy));
    out.expect(r.human_effort <= 0.40, "effort " + fmt("%.4f", r.human_effort));
    out.expect(elapsed < 120.0, "runtime " + fmt("%.1f s", elapsed));
    out.note("accuracy " + fmt("%.4f", r.accuracy) + ", effort " + fmt("%.3f", r.human_effort) + ", " +
             fmt("%.1f s", elapsed) + " including synthesis and metrics");
}

void desk_rq2(Outcome& out) {
    const auto t0 = Clock::now();
    synth::SyntheticSpec spec;
    spec.n = 500;
    spec.valid_fraction = 0.6;
    spec.recipe = synth::Recipe::two_condition;
    spec.seed = 42;
    const auto pairs = synth::generate_pairs(spec);
    const auto cache = compute_metric_cache(pairs, metric_config(42));
    const auto data = eval::LabeledDataset::from_items(items_of(pairs, cache));
    eval::Rq2Spec rq;
    rq.efforts = {0.25};
    rq.repetitions = 20;
    const auto report = eval::rq2_protocol(data, rq, 42, pairs);

    const auto* hil = report.find("hil_tv", 0.25);
    const auto* rf = report.find("hil_tv_no_al", 0.25);
    out.expect(hil && rf && hil->accuracy.size() == 20, "missing HiL-TV runs");
    if (!hil || !rf) return;
    const double hil_mean = stats::mean(hil->accuracy);
    out.note("HiL-TV " + fmt("%.4f", hil_mean));
    for (const std::string base : {"b_vif", "b_vae"}) {
        const auto* b = report.find(base, 0.25);
        const auto* c = report.find_comparison("hil_tv", base, 0.25);
        out.expect(b && c, "missing " + base);
        if (!b || !c) continue;
        const double m = stats::mean(b->accuracy);
        out.expect(hil_mean > m, "HiL-TV mean not above " + base);
        out.expect(c->p_value < 0.01, base + " p = " + fmt("%.3g", c->p_value));
        out.expect(c->a12 >= 0.71, base + " A12 = " + fmt("%.3f", c->a12));
        // The plain multi-metric forest must also beat each single-metric baseline.
        out.expect(stats::mean(rf->accuracy) > m, "random forest mean not above " + base);
        out.note(base + " " + fmt("%.4f", m) + " (p " + fmt("%.2g", c->p_value) + ", A12 " + fmt("%.3f", c->a12) + ")");
    }
    out.note("20 repetitions at effort 0.25, " + fmt("%.1f s", seconds_since(t0)));
}

// ------------------------------------------------------------------ baseline

void baseline_sweep(Outcome& out) {
    using baselines::Direction;
    const std::vector<double> x = {0.1, 0.2, 0.8, 0.9};
    const std::vector<Label> y = {Label::invalid, Label::invalid, Label::valid, Label::valid};
    const auto v = baselines::fit_threshold(x, y, MetricIndex::vif, 1e-3);
    out.expect(std::abs(v.threshold - 0.201) < 1e-12, "threshold " + fmt("%.6f", v.threshold));
    out.expect(v.training_accuracy == 1.0, "training accuracy " + fmt("%.4f", v.training_accuracy));

    // Larger separable fixture: first grid point above the largest invalid value wins.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lo(0.05, 0.45), hi(0.55, 0.95);
    std::vector<double> xs;
    std::vector<Label> ys;
    for (int i = 0; i < 200; ++i) {
        const bool valid = i % 3 != 0;
        xs.push_back(valid ? hi(rng) : lo(rng));
        ys.push_back(valid ? Label::valid : Label::invalid);
    }
    const auto big = baselines::fit_threshold(xs, ys, MetricIndex::vif, 1e-3);
    const double min_x = *std::min_element(xs.begin(), xs.end());
    double max_invalid = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ys[i] == Label::invalid) max_invalid = std::max(max_invalid, xs[i]);
    long k = 0;
    while (min_x + static_cast<double>(k) * 1e-3 <= max_invalid) ++k;
    out.expect(big.training_accuracy == 1.0, "separable fixture accuracy " + fmt("%.4f", big.training_accuracy));
    out.expect(std::abs(big.threshold - (min_x + static_cast<double>(k) * 1e-3)) < 1e-9, "tie-break on the 200-point fixture");
    const auto refit = baselines::fit_threshold(xs, ys, MetricIndex::vif, 1e-3);
    out.expect(refit.threshold == big.threshold, "refit threshold differs");
    out.note("threshold " + fmt("%.3f", v.threshold) + ", training accuracy " + fmt("%.1f", v.training_accuracy));
}

// ------------------------------------------------------------------ grid

void grid_reproducible(Outcome& out) {
    testsupport::TempDir dir("accept-grid");
    const auto spec = eval::GridSpec::defaults();
    out.expect(spec.size() == 720, "grid size " + std::to_string(spec.size()));
    std::vector<std::string> files;
    std::vector<double> times;
    std::size_t ok_runs = 0;
    for (int execution = 0; execution < 2; ++execution) {
        const auto t0 = Clock::now();
        synth::SyntheticSpec s;
        s.n = 150;
        s.seed = 7;
        const auto pairs = synth::generate_pairs(s);
        const auto cache = compute_metric_cache(pairs, metric_config(7));
        const auto data = eval::LabeledDataset::from_items(items_of(pairs, cache));
        const auto results = eval::grid_search(data, spec, 1);
        const auto path = dir / ("results" + std::to_string(execution) + ".csv");
        eval::write_results_csv(results, path);
        files.push_back(read_file(path));
        times.push_back(seconds_since(t0));
        ok_runs = static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& r) { return r.ok; }));
        out.expect(results.size() == 720, "result count " + std::to_string(results.size()));
    }
    out.expect(!files[0].empty() && files[0] == files[1], "results files differ");
    out.note("720 configurations, " + std::to_string(ok_runs) + " completed, identical " +
             std::to_string(files[0].size()) + "-byte files, " + fmt("%.1f s", times[0]) + " and " +
             fmt("%.1f s", times[1]));
}

struct Criterion {
    std::string key;
    std::string title;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {"identity", "metric identity suite", identity},
        {"oracles", "oracle equivalence", oracle_equivalence},
        {"gradcheck", "VAE gradient check", vae_gradcheck},
        {"al", "active-learning loop structural suite", al_structural},
        {"desk-e2e", "desk-scale end-to-end (n = 500, RF, alpha 0.9)", desk_end_to_end},
        {"desk-rq2", "desk-scale comparison against B-VIF and B-VAE (two-condition recipe)", desk_rq2},
        {"baseline", "baseline threshold sweep", baseline_sweep},
        {"grid", "720-configuration grid reproducibility", grid_reproducible},
    };

    CLI::App app{"Acceptance criteria"};
    std::vector<std::string> only;
    bool list = false;
    app.add_option("--only", only, "criterion key (repeatable)");
    app.add_flag("--list", list, "print criterion keys");
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& c : criteria) std::cout << c.key << "\n";
        return 0;
    }
    for (const auto& k : only) {
        if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.key == k; })) {
            std::cerr << "unknown criterion '" << k << "'\n";
            return 2;
        }
    }

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.key) == only.end()) continue;
        Outcome out;
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.expect(false, std::string("exception: ") + e.what());
        }
        failed += !out.passed();
        std::cout << (out.passed() ? "PASS" : "FAIL") << "  [" << c.key << "] " << c.title << ": " << out.detail()
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}

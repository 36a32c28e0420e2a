#include "pairval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pairval/errors.hpp"
#include "pairval/util.hpp"

namespace pairval::synth {

using nlohmann::json;

std::string_view to_string(Recipe r) { return r == Recipe::standard ? "standard" : "two_condition"; }

Recipe parse_recipe(std::string_view text) {
    if (text == "standard") return Recipe::standard;
    if (text == "two_condition") return Recipe::two_condition;
    fail(ErrorCode::invalid_argument, "unknown recipe '" + std::string(text) + "'");
}

void SyntheticSpec::validate() const {
    require(n >= 1, ErrorCode::invalid_argument, "n must be >= 1");
    require(width >= 16 && height >= 16, ErrorCode::invalid_argument, "synthetic images must be at least 16x16");
    require(valid_fraction >= 0.0 && valid_fraction <= 1.0, ErrorCode::invalid_argument,
            "valid_fraction must lie in [0, 1]");
}

json SyntheticSpec::to_json() const {
    return {{"n", n},         {"width", width}, {"height", height}, {"valid_fraction", valid_fraction},
            {"recipe", to_string(recipe)}, {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
    SyntheticSpec s;
    s.n = j.value("n", s.n);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.valid_fraction = j.value("valid_fraction", s.valid_fraction);
    if (j.contains("recipe")) s.recipe = parse_recipe(j.at("recipe").get<std::string>());
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

/// Works on a float copy so stacked transforms round once.
struct Plane {
    int w, h;
    std::vector<double> v;  // interleaved RGB

    explicit Plane(const Image& img) : w(img.width), h(img.height), v(img.data.begin(), img.data.end()) {}
    Image to_image() const {
        Image out(w, h, 3);
        for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = clamp8(v[i]);
        return out;
    }
};

void brightness(Plane& p, double delta) {
    for (double& x : p.v) x += delta;
}

void gamma(Plane& p, double g) {
    for (double& x : p.v) x = 255.0 * std::pow(std::clamp(x, 0.0, 255.0) / 255.0, g);
}

void noise(Plane& p, double sigma, Rng& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    for (double& x : p.v) x += n(rng);
}

void blank(Plane& p, double area_fraction, double fill, Rng& rng) {
    const double aspect = uniform(rng, 0.7, 1.4);
    const double area = area_fraction * p.w * p.h;
    int bw = std::clamp(static_cast<int>(std::ceil(std::sqrt(area * aspect))), 1, p.w);
    int bh = std::clamp(static_cast<int>(std::ceil(area / bw)), 1, p.h);
    while (static_cast<double>(bw) * bh < area && bw < p.w) ++bw;
    const int x0 = uniform_int(rng, 0, p.w - bw);
    const int y0 = uniform_int(rng, 0, p.h - bh);
    for (int r = y0; r < y0 + bh; ++r) {
        for (int c = x0; c < x0 + bw; ++c) {
            for (int ch = 0; ch < 3; ++ch) p.v[(static_cast<std::size_t>(r) * p.w + c) * 3 + ch] = fill;
        }
    }
}

void blur(Plane& p, double sigma) {
    const int half = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) sum += k[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& x : k) x /= sum;
    auto pass = [&](bool horizontal) {
        std::vector<double> out(p.v.size());
        for (int r = 0; r < p.h; ++r) {
            for (int c = 0; c < p.w; ++c) {
                for (int ch = 0; ch < 3; ++ch) {
                    double acc = 0.0;
                    for (int i = -half; i <= half; ++i) {
                        const int rr = horizontal ? r : std::clamp(r + i, 0, p.h - 1);
                        const int cc = horizontal ? std::clamp(c + i, 0, p.w - 1) : c;
                        acc += k[static_cast<std::size_t>(i + half)] * p.v[(static_cast<std::size_t>(rr) * p.w + cc) * 3 + ch];
                    }
                    out[(static_cast<std::size_t>(r) * p.w + c) * 3 + ch] = acc;
                }
            }
        }
        p.v = std::move(out);
    };
    pass(true);
    pass(false);
}

void contrast_collapse(Plane& p, double scale) {
    for (int ch = 0; ch < 3; ++ch) {
        double m = 0.0;
        for (std::size_t i = static_cast<std::size_t>(ch); i < p.v.size(); i += 3) m += p.v[i];
        m /= static_cast<double>(p.w) * p.h;
        for (std::size_t i = static_cast<std::size_t>(ch); i < p.v.size(); i += 3) p.v[i] = m + scale * (p.v[i] - m);
    }
}

std::string apply_valid(Plane& p, Rng& rng) {
    const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    switch (uniform_int(rng, 0, 3)) {
        case 0: brightness(p, sign * uniform(rng, 0.03, 0.15) * 255.0); return "brightness";
        case 1: gamma(p, uniform(rng, 0.85, 1.15)); return "gamma";
        case 2: noise(p, uniform(rng, 2.0, 8.0), rng); return "noise";
        default:
            brightness(p, sign * uniform(rng, 0.02, 0.08) * 255.0);
            noise(p, uniform(rng, 2.0, 5.0), rng);
            return "brightness+noise";
    }
}

std::string apply_invalid(Plane& p, Recipe recipe, Rng& rng) {
    if (recipe == Recipe::two_condition) {
        if (uniform(rng, 0.0, 1.0) < 0.5) {
            contrast_collapse(p, uniform(rng, 0.3, 0.45));
            return "contrast_collapse";
        }
        blur(p, uniform(rng, 3.0, 5.0));
        return "blur";
    }
    switch (uniform_int(rng, 0, 2)) {
        case 0: noise(p, uniform(rng, 60.0, 90.0), rng); return "heavy_noise";
        case 1: blank(p, uniform(rng, 0.4, 0.6), uniform(rng, 0.0, 1.0) < 0.5 ? 0.0 : uniform(rng, 0.0, 255.0), rng); return "blanking";
        default: blur(p, uniform(rng, 3.0, 5.0)); return "blur";
    }
}

}  // namespace

Image make_original(int width, int height, std::uint64_t seed) {
    Rng rng(seed);
    Image img(width, height, 3);
    double base[3];
    for (double& b : base) b = uniform(rng, 60.0, 190.0);
    const double fx = uniform(rng, 0.05, 0.25);
    const double fy = uniform(rng, 0.05, 0.25);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = uniform(rng, 10.0, 25.0);
    std::uniform_real_distribution<double> grain(-6.0, 6.0);
    std::vector<double> v(static_cast<std::size_t>(width) * height * 3);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double t = amp * std::sin(fx * c + phase) * std::cos(fy * r - phase);
            for (int ch = 0; ch < 3; ++ch) v[(static_cast<std::size_t>(r) * width + c) * 3 + ch] = base[ch] + t + grain(rng);
        }
    }
    const int shapes = uniform_int(rng, 3, 6);
    for (int s = 0; s < shapes; ++s) {
        const int kind = uniform_int(rng, 0, 2);
        const double cx = uniform(rng, 0.15, 0.85) * width;
        const double cy = uniform(rng, 0.15, 0.85) * height;
        const double rx = uniform(rng, 0.08, 0.22) * width;
        const double ry = uniform(rng, 0.08, 0.22) * height;
        double col[3];
        for (double& x : col) x = uniform(rng, 0.0, 255.0);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                const double dx = (c + 0.5 - cx) / rx;
                const double dy = (r + 0.5 - cy) / ry;
                bool inside = false;
                if (kind == 0) inside = std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                else if (kind == 1) inside = dx * dx + dy * dy <= 1.0;
                else inside = dy >= -1.0 && dy <= 1.0 && std::abs(dx) <= (dy + 1.0) / 2.0;
                if (inside) {
                    for (int ch = 0; ch < 3; ++ch) v[(static_cast<std::size_t>(r) * width + c) * 3 + ch] = col[ch];
                }
            }
        }
    }
    for (std::size_t i = 0; i < v.size(); ++i) img.data[i] = clamp8(v[i]);
    return img;
}

std::vector<ImagePair> generate_pairs(const SyntheticSpec& spec, std::vector<std::string>* transforms) {
    spec.validate();
    const auto n_valid = static_cast<std::size_t>(std::llround(static_cast<double>(spec.n) * spec.valid_fraction));
    std::vector<Label> labels(spec.n, Label::invalid);
    std::fill_n(labels.begin(), n_valid, Label::valid);
    Rng order(derive_seed(spec.seed, "labels"));
    std::shuffle(labels.begin(), labels.end(), order);

    const int digits = std::max<int>(4, static_cast<int>(std::to_string(spec.n).size()));
    std::vector<ImagePair> pairs;
    pairs.reserve(spec.n);
    if (transforms) transforms->clear();
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::uint64_t s = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
        ImagePair p;
        std::string num = std::to_string(i);
        p.id = "p" + std::string(static_cast<std::size_t>(digits) - std::min<std::size_t>(digits, num.size()), '0') + num;
        p.original = make_original(spec.width, spec.height, s);
        Rng rng(derive_seed(s, "transform"));
        Plane plane(p.original);
        const std::string name =
            labels[i] == Label::valid ? apply_valid(plane, rng) : apply_invalid(plane, spec.recipe, rng);
        p.transformed = plane.to_image();
        p.ground_truth = labels[i];
        if (transforms) transforms->push_back(name);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

DatasetManifest write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir) {
    const auto pairs = generate_pairs(spec);
    std::filesystem::create_directories(dir / "images");
    DatasetManifest manifest;
    for (const auto& p : pairs) {
        const auto orig = std::filesystem::path("images") / (p.id + "_original.png");
        const auto trans = std::filesystem::path("images") / (p.id + "_transformed.png");
        save_image(p.original, dir / orig);
        save_image(p.transformed, dir / trans);
        manifest.entries.push_back({p.id, orig, trans, p.ground_truth});
    }
    save_manifest(manifest, dir / "manifest.csv");
    return load_manifest(dir / "manifest.csv");
}

}  // namespace pairval::synth

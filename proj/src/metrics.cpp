#include "pairval/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>

#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"

namespace pairval::metrics {

using nlohmann::json;

void PixelMetricParams::validate() const {
    require(hist_bins >= 2 && hist_bins <= 256, ErrorCode::invalid_argument, "hist_bins must be in [2, 256]");
    require(kl_epsilon > 0.0, ErrorCode::invalid_argument, "kl_epsilon must be > 0");
    require(ssim_window >= 2, ErrorCode::invalid_argument, "ssim_window must be >= 2");
    require(ssim_c1 >= 0.0 && ssim_c2 > 0.0, ErrorCode::invalid_argument, "SSIM constants must be positive");
    require(glcm_levels >= 2 && glcm_levels <= 256, ErrorCode::invalid_argument, "glcm_levels must be in [2, 256]");
    require(!glcm_offsets.empty(), ErrorCode::invalid_argument, "glcm_offsets must not be empty");
    require(vif_scales >= 1 && vif_scales <= 4, ErrorCode::invalid_argument, "vif_scales must be in [1, 4]");
    require(vif_noise_var > 0.0, ErrorCode::invalid_argument, "vif_noise_var must be > 0");
    require(std::isfinite(psnr_cap), ErrorCode::invalid_argument, "psnr_cap must be finite");
}

json PixelMetricParams::to_json() const {
    json offsets = json::array();
    for (const auto& o : glcm_offsets) offsets.push_back({o.drow, o.dcol});
    return {{"hist_bins", hist_bins},     {"kl_epsilon", kl_epsilon},       {"ssim_window", ssim_window},
            {"ssim_c1", ssim_c1},         {"ssim_c2", ssim_c2},             {"glcm_levels", glcm_levels},
            {"glcm_offsets", offsets},    {"vif_scales", vif_scales},       {"vif_noise_var", vif_noise_var},
            {"psnr_cap", psnr_cap}};
}

PixelMetricParams PixelMetricParams::from_json(const json& j) {
    PixelMetricParams p;
    p.hist_bins = j.value("hist_bins", p.hist_bins);
    p.kl_epsilon = j.value("kl_epsilon", p.kl_epsilon);
    p.ssim_window = j.value("ssim_window", p.ssim_window);
    p.ssim_c1 = j.value("ssim_c1", p.ssim_c1);
    p.ssim_c2 = j.value("ssim_c2", p.ssim_c2);
    p.glcm_levels = j.value("glcm_levels", p.glcm_levels);
    if (j.contains("glcm_offsets")) {
        p.glcm_offsets.clear();
        for (const auto& o : j.at("glcm_offsets")) p.glcm_offsets.push_back({o.at(0).get<int>(), o.at(1).get<int>()});
    }
    p.vif_scales = j.value("vif_scales", p.vif_scales);
    p.vif_noise_var = j.value("vif_noise_var", p.vif_noise_var);
    p.psnr_cap = j.value("psnr_cap", p.psnr_cap);
    p.validate();
    return p;
}

namespace {

void check_pair(const Image& a, const Image& b) {
    require(a.channels == 1 && b.channels == 1, ErrorCode::invalid_argument,
            "pixel metrics expect grayscale images");
    require(a.same_shape(b), ErrorCode::dimension_mismatch,
            "image dimensions differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                std::to_string(b.width) + "x" + std::to_string(b.height));
}

// Plain double raster used by the windowed metrics.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * width + c]; }
    double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * width + c]; }
};

Plane to_plane(const Image& img) {
    Plane p{img.width, img.height, std::vector<double>(img.data.begin(), img.data.end())};
    return p;
}

Plane multiply(const Plane& a, const Plane& b) {
    Plane out{a.width, a.height, std::vector<double>(a.v.size())};
    for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

// 'valid' correlation with the separable kernel k ⊗ k.
Plane filter_valid(const Plane& in, std::span<const double> k) {
    const int n = static_cast<int>(k.size());
    const int w = in.width - n + 1;
    const int h = in.height - n + 1;
    Plane tmp{w, in.height, std::vector<double>(static_cast<std::size_t>(w) * in.height)};
    for (int r = 0; r < in.height; ++r) {
        for (int c = 0; c < w; ++c) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * in(r, c + i);
            tmp(r, c) = s;
        }
    }
    Plane out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * tmp(r + i, c);
            out(r, c) = s;
        }
    }
    return out;
}

Plane downsample2(const Plane& in) {
    const int w = (in.width + 1) / 2;
    const int h = (in.height + 1) / 2;
    Plane out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) out(r, c) = in(2 * r, 2 * c);
    }
    return out;
}

std::vector<double> gaussian_kernel_1d(int n) {
    const double sigma = n / 5.0;
    std::vector<double> k(n);
    const double mid = (n - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        k[i] = std::exp(-((i - mid) * (i - mid)) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& x : k) x /= sum;
    return k;
}

int vif_window(int scale) { return (1 << (4 - scale + 1)) + 1; }

}  // namespace

double mse(const Image& a, const Image& b) {
    check_pair(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

double psnr_from_mse(double mse_value, double cap) {
    if (mse_value <= 0.0) return cap;
    return std::min(cap, 10.0 * std::log10(kMaxPixel * kMaxPixel / mse_value));
}

double psnr(const Image& a, const Image& b, const PixelMetricParams& p) { return psnr_from_mse(mse(a, b), p.psnr_cap); }

double ssim_window_value(double mu_a, double mu_b, double var_a, double var_b, double cov_ab, double c1, double c2) {
    return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov_ab + c2)) /
           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

double ssim(const Image& a, const Image& b, const PixelMetricParams& p) {
    check_pair(a, b);
    const int win = p.ssim_window;
    require(a.width >= win && a.height >= win, ErrorCode::invalid_argument,
            "image smaller than the SSIM window (" + std::to_string(win) + ")");
    const int w = a.width;
    const int h = a.height;
    // Summed-area tables of a, b, a², b², ab. Integer inputs keep these exact.
    const std::size_t stride = static_cast<std::size_t>(w) + 1;
    std::array<std::vector<double>, 5> sat;
    for (auto& t : sat) t.assign(stride * (h + 1), 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double x = a.at(r, c);
            const double y = b.at(r, c);
            const double vals[5] = {x, y, x * x, y * y, x * y};
            for (int t = 0; t < 5; ++t) {
                sat[t][(r + 1) * stride + c + 1] =
                    vals[t] + sat[t][r * stride + c + 1] + sat[t][(r + 1) * stride + c] - sat[t][r * stride + c];
            }
        }
    }
    auto box = [&](int t, int r, int c) {
        return sat[t][(r + win) * stride + c + win] - sat[t][r * stride + c + win] - sat[t][(r + win) * stride + c] +
               sat[t][r * stride + c];
    };
    const double n = static_cast<double>(win) * win;
    double total = 0.0;
    int windows = 0;
    for (int r = 0; r + win <= h; ++r) {
        for (int c = 0; c + win <= w; ++c) {
            const double mu_a = box(0, r, c) / n;
            const double mu_b = box(1, r, c) / n;
            const double var_a = box(2, r, c) / n - mu_a * mu_a;
            const double var_b = box(3, r, c) / n - mu_b * mu_b;
            const double cov = box(4, r, c) / n - mu_a * mu_b;
            total += ssim_window_value(mu_a, mu_b, var_a, var_b, cov, p.ssim_c1, p.ssim_c2);
            ++windows;
        }
    }
    return total / windows;
}

int quantize(std::uint8_t v, int levels) { return static_cast<int>(v) * levels / 256; }

std::vector<double> glcm_counts(const Image& img, int levels, std::span<const Offset> offsets) {
    std::vector<double> counts(static_cast<std::size_t>(levels) * levels, 0.0);
    for (const auto& off : offsets) {
        for (int r = 0; r < img.height; ++r) {
            const int r2 = r + off.drow;
            if (r2 < 0 || r2 >= img.height) continue;
            for (int c = 0; c < img.width; ++c) {
                const int c2 = c + off.dcol;
                if (c2 < 0 || c2 >= img.width) continue;
                const int i = quantize(img.at(r, c), levels);
                const int j = quantize(img.at(r2, c2), levels);
                counts[static_cast<std::size_t>(i) * levels + j] += 1.0;
                counts[static_cast<std::size_t>(j) * levels + i] += 1.0;
            }
        }
    }
    return counts;
}

TextureFeatures texture_features(std::span<const double> glcm, int levels) {
    const double total = std::accumulate(glcm.begin(), glcm.end(), 0.0);
    TextureFeatures f;
    if (total <= 0.0) {
        // No co-occurring pairs: treat like a constant image.
        f.homogeneity = 1.0;
        f.energy = 1.0;
        f.correlation = 1.0;
        return f;
    }
    double mu = 0.0;
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) mu += i * glcm[i * levels + j] / total;
    }
    double var = 0.0;
    double cov = 0.0;
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
            const double p = glcm[i * levels + j] / total;
            const double d = i - j;
            f.contrast += d * d * p;
            f.homogeneity += p / (1.0 + d * d);
            f.energy += p * p;
            var += (i - mu) * (i - mu) * p;
            cov += (i - mu) * (j - mu) * p;
        }
    }
    f.correlation = var < 1e-15 ? 1.0 : cov / var;
    return f;
}

double tsi(const Image& a, const Image& b, const PixelMetricParams& p) {
    check_pair(a, b);
    const auto fa = texture_features(glcm_counts(a, p.glcm_levels, p.glcm_offsets), p.glcm_levels);
    const auto fb = texture_features(glcm_counts(b, p.glcm_levels, p.glcm_offsets), p.glcm_levels);
    const double d = std::sqrt((fa.contrast - fb.contrast) * (fa.contrast - fb.contrast) +
                               (fa.homogeneity - fb.homogeneity) * (fa.homogeneity - fb.homogeneity) +
                               (fa.energy - fb.energy) * (fa.energy - fb.energy) +
                               (fa.correlation - fb.correlation) * (fa.correlation - fb.correlation));
    return 1.0 / (1.0 + d);
}

std::vector<double> histogram(const Image& img, int bins) {
    std::vector<double> h(bins, 0.0);
    for (auto v : img.data) h[static_cast<std::size_t>(v) * bins / 256] += 1.0;
    const double n = static_cast<double>(img.data.size());
    for (double& x : h) x /= n;
    return h;
}

double wasserstein_1d(std::span<const double> p, std::span<const double> q, double bin_width) {
    require(p.size() == q.size(), ErrorCode::dimension_mismatch, "histogram lengths differ");
    double cdf_p = 0.0;
    double cdf_q = 0.0;
    double dist = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        cdf_p += p[k];
        cdf_q += q[k];
        dist += std::abs(cdf_p - cdf_q);
    }
    return dist * bin_width;
}

double wasserstein(const Image& a, const Image& b, const PixelMetricParams& p) {
    check_pair(a, b);
    return wasserstein_1d(histogram(a, p.hist_bins), histogram(b, p.hist_bins), 256.0 / p.hist_bins);
}

double kl_from_histograms(std::span<const double> p, std::span<const double> q, double epsilon) {
    require(p.size() == q.size(), ErrorCode::dimension_mismatch, "histogram lengths differ");
    auto smooth = [epsilon](std::span<const double> h) {
        std::vector<double> out(h.begin(), h.end());
        double sum = 0.0;
        for (double& x : out) {
            x = std::max(x, epsilon);
            sum += x;
        }
        for (double& x : out) x /= sum;
        return out;
    };
    const auto ps = smooth(p);
    const auto qs = smooth(q);
    double kl = 0.0;
    for (std::size_t k = 0; k < ps.size(); ++k) kl += ps[k] * std::log(ps[k] / qs[k]);
    return std::max(0.0, kl);
}

double kl_divergence(const Image& a, const Image& b, const PixelMetricParams& p) {
    check_pair(a, b);
    return kl_from_histograms(histogram(a, p.hist_bins), histogram(b, p.hist_bins), p.kl_epsilon);
}

double intersection_from_histograms(std::span<const double> p, std::span<const double> q) {
    require(p.size() == q.size(), ErrorCode::dimension_mismatch, "histogram lengths differ");
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += std::min(p[k], q[k]);
    return s;
}

double hist_intersection(const Image& a, const Image& b, const PixelMetricParams& p) {
    check_pair(a, b);
    return intersection_from_histograms(histogram(a, p.hist_bins), histogram(b, p.hist_bins));
}

double correlation_from_histograms(std::span<const double> p, std::span<const double> q) {
    require(p.size() == q.size(), ErrorCode::dimension_mismatch, "histogram lengths differ");
    const double n = static_cast<double>(p.size());
    const double mp = std::accumulate(p.begin(), p.end(), 0.0) / n;
    const double mq = std::accumulate(q.begin(), q.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        sxy += (p[k] - mp) * (q[k] - mq);
        sxx += (p[k] - mp) * (p[k] - mp);
        syy += (q[k] - mq) * (q[k] - mq);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double hist_correlation(const Image& a, const Image& b, const PixelMetricParams& p) {
    check_pair(a, b);
    return correlation_from_histograms(histogram(a, p.hist_bins), histogram(b, p.hist_bins));
}

int feasible_vif_scales(int width, int height, int requested) {
    int w = width;
    int h = height;
    int feasible = 0;
    for (int s = 1; s <= requested; ++s) {
        const int n = vif_window(s);
        if (s > 1) {
            w -= n - 1;
            h -= n - 1;
            if (w < 1 || h < 1) break;
            w = (w + 1) / 2;
            h = (h + 1) / 2;
        }
        if (w < n || h < n) break;
        feasible = s;
    }
    return feasible;
}

double vif(const Image& reference, const Image& distorted, const PixelMetricParams& p) {
    check_pair(reference, distorted);
    constexpr double kEps = 1e-10;
    int scales = feasible_vif_scales(reference.width, reference.height, p.vif_scales);
    // Images too small for even the first standard window use one scale with the
    // largest odd window that fits.
    int small_window = 0;
    if (scales < p.vif_scales) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true)) {
            std::cerr << "pairval: warning: image " << reference.width << "x" << reference.height
                      << " too small for " << p.vif_scales << " VIF scales; using " << std::max(scales, 1)
                      << "\n";
        }
        if (scales == 0) {
            scales = 1;
            small_window = std::min(reference.width, reference.height);
            if (small_window % 2 == 0) --small_window;
        }
    }

    Plane ref = to_plane(reference);
    Plane dist = to_plane(distorted);
    double num = 0.0;
    double den = 0.0;
    bool dist_has_signal = false;
    for (int s = 1; s <= scales; ++s) {
        const int n = small_window > 0 ? small_window : vif_window(s);
        const auto k = gaussian_kernel_1d(n);
        if (s > 1) {
            ref = downsample2(filter_valid(ref, k));
            dist = downsample2(filter_valid(dist, k));
        }
        const Plane mu1 = filter_valid(ref, k);
        const Plane mu2 = filter_valid(dist, k);
        const Plane e11 = filter_valid(multiply(ref, ref), k);
        const Plane e22 = filter_valid(multiply(dist, dist), k);
        const Plane e12 = filter_valid(multiply(ref, dist), k);
        for (std::size_t i = 0; i < mu1.v.size(); ++i) {
            double s1 = std::max(0.0, e11.v[i] - mu1.v[i] * mu1.v[i]);
            double s2 = std::max(0.0, e22.v[i] - mu2.v[i] * mu2.v[i]);
            const double s12 = e12.v[i] - mu1.v[i] * mu2.v[i];
            if (s2 >= kEps) dist_has_signal = true;
            double g = s12 / (s1 + kEps);
            double sv = s2 - g * s12;
            if (s1 < kEps) {
                g = 0.0;
                sv = s2;
                s1 = 0.0;
            }
            if (s2 < kEps) {
                g = 0.0;
                sv = 0.0;
            }
            if (g < 0.0) {
                sv = s2;
                g = 0.0;
            }
            sv = std::max(sv, kEps);
            num += std::log2(1.0 + g * g * s1 / (sv + p.vif_noise_var));
            den += std::log2(1.0 + s1 / p.vif_noise_var);
        }
    }
    // Flat reference: no information to preserve. Fidelity is full if the
    // distorted image is flat too, none otherwise.
    if (den <= 0.0) return dist_has_signal ? 0.0 : 1.0;
    return num / den;
}

PixelMetrics compute_pixel_metrics(const Image& original, const Image& transformed, const PixelMetricParams& p) {
    const Image a = to_grayscale(original);
    const Image b = to_grayscale(transformed);
    check_pair(a, b);
    PixelMetrics m{};
    m.mse = mse(a, b);
    m.psnr = psnr_from_mse(m.mse, p.psnr_cap);
    m.ssim = ssim(a, b, p);
    m.tsi = tsi(a, b, p);
    const auto ha = histogram(a, p.hist_bins);
    const auto hb = histogram(b, p.hist_bins);
    m.ws = wasserstein_1d(ha, hb, 256.0 / p.hist_bins);
    m.kl = kl_from_histograms(ha, hb, p.kl_epsilon);
    m.hist_int = intersection_from_histograms(ha, hb);
    m.hist_cor = correlation_from_histograms(ha, hb);
    m.vif = vif(a, b, p);
    return m;
}

}  // namespace pairval::metrics

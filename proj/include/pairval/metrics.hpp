#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pairval/types.hpp"

namespace pairval::metrics {

inline constexpr double kMaxPixel = 255.0;

struct Offset {
    int drow = 0;
    int dcol = 0;
};

struct PixelMetricParams {
    int hist_bins = 256;
    double kl_epsilon = 1e-10;
    int ssim_window = 8;
    double ssim_c1 = (0.01 * kMaxPixel) * (0.01 * kMaxPixel);
    double ssim_c2 = (0.03 * kMaxPixel) * (0.03 * kMaxPixel);
    int glcm_levels = 8;
    std::vector<Offset> glcm_offsets = {{0, 1}, {1, 0}};
    int vif_scales = 4;
    double vif_noise_var = 2.0;
    double psnr_cap = 100.0;

    /// Throws ErrorCode::invalid_argument on out-of-range values.
    void validate() const;
    nlohmann::json to_json() const;
    static PixelMetricParams from_json(const nlohmann::json& j);
};

// All image-level metrics take grayscale images of equal dimensions and throw
// ErrorCode::dimension_mismatch otherwise.

double mse(const Image& a, const Image& b);
double psnr(const Image& a, const Image& b, const PixelMetricParams& p = {});
double psnr_from_mse(double mse_value, double cap);

/// Mean SSIM over all stride-1 square windows of side p.ssim_window.
double ssim(const Image& a, const Image& b, const PixelMetricParams& p = {});
/// SSIM of one window given its statistics (population variances).
double ssim_window_value(double mu_a, double mu_b, double var_a, double var_b, double cov_ab, double c1,
                         double c2);

/// Symmetric co-occurrence counts summed over offsets: counts[i * levels + j].
std::vector<double> glcm_counts(const Image& img, int levels, std::span<const Offset> offsets);
/// Intensity level used by the GLCM: floor(v * levels / 256).
int quantize(std::uint8_t v, int levels);

struct TextureFeatures {
    double contrast = 0.0;
    double homogeneity = 0.0;
    double energy = 0.0;  // angular second moment
    double correlation = 0.0;
};

TextureFeatures texture_features(std::span<const double> glcm, int levels);
double tsi(const Image& a, const Image& b, const PixelMetricParams& p = {});

/// Normalized intensity histogram (sums to 1) with `bins` equal-width bins over 0..255.
std::vector<double> histogram(const Image& img, int bins);

/// Wasserstein-1 between two normalized histograms on a support with spacing `bin_width`.
double wasserstein_1d(std::span<const double> p, std::span<const double> q, double bin_width = 1.0);
double wasserstein(const Image& a, const Image& b, const PixelMetricParams& p = {});

/// KL(p || q) after flooring both at `epsilon` and renormalizing.
double kl_from_histograms(std::span<const double> p, std::span<const double> q, double epsilon);
double kl_divergence(const Image& a, const Image& b, const PixelMetricParams& p = {});

double intersection_from_histograms(std::span<const double> p, std::span<const double> q);
double hist_intersection(const Image& a, const Image& b, const PixelMetricParams& p = {});

/// Pearson correlation across bins; 0 when either histogram is constant.
double correlation_from_histograms(std::span<const double> p, std::span<const double> q);
double hist_correlation(const Image& a, const Image& b, const PixelMetricParams& p = {});

/// Number of scales the pixel-domain VIF can use for an image of this size.
int feasible_vif_scales(int width, int height, int requested);
/// Pixel-domain VIF of `distorted` against `reference`. Silently uses fewer scales
/// when the image is too small; see feasible_vif_scales.
double vif(const Image& reference, const Image& distorted, const PixelMetricParams& p = {});

struct PixelMetrics {
    double psnr, ssim, mse, tsi, ws, kl, hist_int, hist_cor, vif;
};

/// All nine pixel metrics on grayscale versions of the pair.
PixelMetrics compute_pixel_metrics(const Image& original, const Image& transformed,
                                   const PixelMetricParams& p = {});

}  // namespace pairval::metrics

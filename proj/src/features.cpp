#include "pairval/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "csv.hpp"
#include "pairval/dataio.hpp"
#include "pairval/errors.hpp"

namespace pairval::features {

namespace {

struct Kernel {
    int size = 0;
    std::vector<double> w;  // row-major size x size
};

Kernel sobel_x() { return {3, {-1, 0, 1, -2, 0, 2, -1, 0, 1}}; }
Kernel sobel_y() { return {3, {-1, -2, -1, 0, 0, 0, 1, 2, 1}}; }

// Real Gabor kernel, zero-mean so flat regions respond with 0.
Kernel gabor(double theta, double wavelength) {
    const double sigma = 0.56 * wavelength;
    const double gamma = 0.5;
    const int half = static_cast<int>(std::ceil(2.0 * sigma));
    Kernel k{2 * half + 1, {}};
    k.w.resize(static_cast<std::size_t>(k.size) * k.size);
    double mean = 0.0;
    for (int r = -half; r <= half; ++r) {
        for (int c = -half; c <= half; ++c) {
            const double xr = c * std::cos(theta) + r * std::sin(theta);
            const double yr = -c * std::sin(theta) + r * std::cos(theta);
            const double v = std::exp(-(xr * xr + gamma * gamma * yr * yr) / (2.0 * sigma * sigma)) *
                             std::cos(2.0 * std::numbers::pi * xr / wavelength);
            k.w[static_cast<std::size_t>(r + half) * k.size + (c + half)] = v;
            mean += v;
        }
    }
    mean /= static_cast<double>(k.w.size());
    double l1 = 0.0;
    for (double& v : k.w) {
        v -= mean;
        l1 += std::abs(v);
    }
    for (double& v : k.w) v /= l1;
    return k;
}

const std::vector<Kernel>& filter_bank() {
    static const std::vector<Kernel> bank = [] {
        std::vector<Kernel> b{sobel_x(), sobel_y()};
        for (double wavelength : {4.0, 8.0}) {
            for (int o = 0; o < 4; ++o) b.push_back(gabor(o * std::numbers::pi / 4.0, wavelength));
        }
        return b;
    }();
    return bank;
}

}  // namespace

std::string external_key(const std::string& pair_id, PairSide side) {
    return pair_id + (side == PairSide::original ? ":original" : ":transformed");
}

FeatureExtractor FeatureExtractor::builtin() {
    FeatureExtractor fx;
    fx.kind_ = Kind::builtin_filterbank;
    fx.output_dim_ = static_cast<std::size_t>(kFilterCount) * kPoolGrid * kPoolGrid;
    fx.source_ = "builtin-filterbank-v1";
    return fx;
}

FeatureExtractor FeatureExtractor::external(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open feature vectors " + csv_path.string());
    FeatureExtractor fx;
    fx.kind_ = Kind::external_vectors;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse, csv_path.string() + ": empty file");
    auto header = csv::split_row(csv::trim_eol(line));
    require(header.size() >= 2 && header[0] == "id", ErrorCode::parse,
            csv_path.string() + ": expected header id,v0,...");
    fx.output_dim_ = header.size() - 1;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = csv::trim_eol(line);
        if (view.empty()) continue;
        auto fields = csv::split_row(view);
        const std::string where = csv_path.string() + ":" + std::to_string(line_no);
        require(fields.size() == header.size(), ErrorCode::parse, where + ": wrong field count");
        std::vector<double> v(fx.output_dim_);
        for (std::size_t i = 0; i < v.size(); ++i) {
            try {
                std::size_t used = 0;
                v[i] = std::stod(fields[i + 1], &used);
                require(used == fields[i + 1].size() && std::isfinite(v[i]), ErrorCode::parse, where + ": bad value");
            } catch (const std::logic_error&) {
                fail(ErrorCode::parse, where + ": bad value '" + fields[i + 1] + "'");
            }
        }
        require(fx.vectors_.emplace(fields[0], std::move(v)).second, ErrorCode::duplicate_id,
                where + ": duplicate id \"" + fields[0] + "\"");
    }
    fx.source_ = "external:" + csv_path.filename().string() + ":" + std::to_string(fx.output_dim_);
    return fx;
}

std::string FeatureExtractor::fingerprint() const { return source_; }

FeatureVector FeatureExtractor::extract(const Image& img) const {
    require(kind_ == Kind::builtin_filterbank, ErrorCode::invalid_argument,
            "extract() needs the builtin extractor; external vectors are looked up by pair id");
    require(img.width >= 8 && img.height >= 8, ErrorCode::invalid_argument, "feature extraction needs >= 8x8 images");
    const Image gray = to_grayscale(img);
    const int w = gray.width;
    const int h = gray.height;
    FeatureVector out{std::vector<double>(output_dim_, 0.0), source_};
    const auto& bank = filter_bank();
    int pad = 0;
    for (const auto& k : bank) pad = std::max(pad, k.size / 2);
    // Replicate-padded copy so the inner loops need no bounds checks.
    const int pw = w + 2 * pad;
    std::vector<double> padded(static_cast<std::size_t>(pw) * (h + 2 * pad));
    for (int r = 0; r < h + 2 * pad; ++r) {
        const int sr = std::clamp(r - pad, 0, h - 1);
        for (int c = 0; c < pw; ++c) {
            padded[static_cast<std::size_t>(r) * pw + c] = gray.at(sr, std::clamp(c - pad, 0, w - 1)) / 255.0;
        }
    }
    std::vector<double> cell_sum(kPoolGrid * kPoolGrid);
    std::vector<int> cell_count(kPoolGrid * kPoolGrid);
    for (std::size_t f = 0; f < bank.size(); ++f) {
        const Kernel& k = bank[f];
        const int off = pad - k.size / 2;
        std::fill(cell_sum.begin(), cell_sum.end(), 0.0);
        std::fill(cell_count.begin(), cell_count.end(), 0);
        for (int r = 0; r < h; ++r) {
            const int cr = r * kPoolGrid / h;
            for (int c = 0; c < w; ++c) {
                double acc = 0.0;
                for (int i = 0; i < k.size; ++i) {
                    const double* row = &padded[static_cast<std::size_t>(r + off + i) * pw + c + off];
                    const double* kr = &k.w[static_cast<std::size_t>(i) * k.size];
                    for (int j = 0; j < k.size; ++j) acc += kr[j] * row[j];
                }
                const int cell = cr * kPoolGrid + c * kPoolGrid / w;
                cell_sum[cell] += std::abs(acc);
                ++cell_count[cell];
            }
        }
        for (int cell = 0; cell < kPoolGrid * kPoolGrid; ++cell) {
            out.values[f * kPoolGrid * kPoolGrid + cell] = cell_sum[cell] / cell_count[cell];
        }
    }
    return out;
}

FeatureVector FeatureExtractor::extract_for(const std::string& pair_id, PairSide side, const Image& img) const {
    if (kind_ == Kind::builtin_filterbank) return extract(img);
    const auto key = external_key(pair_id, side);
    auto it = vectors_.find(key);
    require(it != vectors_.end(), ErrorCode::not_found, "no external feature vector for \"" + key + "\"");
    return {it->second, source_};
}

double cosine_similarity(const FeatureVector& u, const FeatureVector& v) {
    require(u.values.size() == v.values.size(), ErrorCode::dimension_mismatch, "feature vector lengths differ");
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double cpl(const FeatureVector& u, const FeatureVector& v) {
    require(u.values.size() == v.values.size(), ErrorCode::dimension_mismatch, "feature vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double d = u.values[i] - v.values[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<int> SegmenterProxy::segment(const Image& img) const {
    require(k >= 1 && k <= 64, ErrorCode::invalid_argument, "segmenter k must be in [1, 64]");
    const Image gray = to_grayscale(img);
    const int w = gray.width;
    const int h = gray.height;
    const std::size_t n = gray.pixel_count();
    std::vector<int> labels(n, 0);
    if (k == 1) return labels;

    std::vector<std::array<double, 3>> pts(n);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            pts[static_cast<std::size_t>(r) * w + c] = {static_cast<double>(r) / h, static_cast<double>(c) / w,
                                                        gray.at(r, c) / 255.0};
        }
    }
    auto dist2 = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]);
    };

    // k-means++ seeding driven by one seeded generator.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::array<double, 3>> centers;
    centers.push_back(pts[static_cast<std::size_t>(unit(rng) * n) % n]);
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = dist2(pts[i], centers[0]);
            for (std::size_t c = 1; c < centers.size(); ++c) best = std::min(best, dist2(pts[i], centers[c]));
            d2[i] = best;
            total += best;
        }
        const double target = unit(rng) * total;
        std::size_t pick = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc > target && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(pts[pick]);
    }

    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = dist2(pts[i], centers[0]);
            for (int c = 1; c < k; ++c) {
                const double d = dist2(pts[i], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<std::array<double, 3>> sums(k, {0.0, 0.0, 0.0});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int d = 0; d < 3; ++d) sums[labels[i]][d] += pts[i][d];
            ++counts[labels[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centre
            for (int d = 0; d < 3; ++d) centers[c][d] = sums[c][d] / counts[c];
        }
    }
    return labels;
}

double label_agreement(const std::vector<int>& a, const std::vector<int>& b, int k) {
    require(a.size() == b.size(), ErrorCode::dimension_mismatch, "label maps differ in size");
    if (a.empty()) return 1.0;
    std::vector<std::size_t> overlap(static_cast<std::size_t>(k) * k, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        require(a[i] >= 0 && a[i] < k && b[i] >= 0 && b[i] < k, ErrorCode::invalid_argument, "label out of range");
        ++overlap[static_cast<std::size_t>(a[i]) * k + b[i]];
    }
    std::vector<bool> used_a(k, false);
    std::vector<bool> used_b(k, false);
    std::size_t matched = 0;
    for (int step = 0; step < k; ++step) {
        std::size_t best = 0;
        int best_a = -1;
        int best_b = -1;
        for (int la = 0; la < k; ++la) {
            if (used_a[la]) continue;
            for (int lb = 0; lb < k; ++lb) {
                if (used_b[lb]) continue;
                const std::size_t o = overlap[static_cast<std::size_t>(la) * k + lb];
                if (best_a < 0 || o > best) {
                    best = o;
                    best_a = la;
                    best_b = lb;
                }
            }
        }
        used_a[best_a] = true;
        used_b[best_b] = true;
        matched += best;
    }
    return static_cast<double>(matched) / static_cast<double>(a.size());
}

double sss(const Image& a, const Image& b, const SegmenterProxy& seg) {
    require(a.width == b.width && a.height == b.height, ErrorCode::dimension_mismatch, "image dimensions differ");
    if (seg.k == 1) return 1.0;
    return label_agreement(seg.segment(a), seg.segment(b), seg.k);
}

}  // namespace pairval::features

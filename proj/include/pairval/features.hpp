#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pairval/types.hpp"

namespace pairval::features {

struct FeatureVector {
    std::vector<double> values;
    std::string source;  // extractor fingerprint
};

enum class PairSide { original, transformed };

/// Key used for a pair side in an external feature-vector file.
std::string external_key(const std::string& pair_id, PairSide side);

/// Either the builtin filter bank (Sobel x/y + Gabor at 4 orientations x 2
/// wavelengths, |response| averaged over a 4x4 grid) or precomputed vectors
/// loaded from a CSV `id,v0..v{n-1}`.
class FeatureExtractor {
public:
    enum class Kind { builtin_filterbank, external_vectors };

    static constexpr int kPoolGrid = 4;
    static constexpr int kFilterCount = 10;

    static FeatureExtractor builtin();
    static FeatureExtractor external(const std::filesystem::path& csv_path);

    Kind kind() const { return kind_; }
    std::size_t output_dim() const { return output_dim_; }
    std::string fingerprint() const;

    /// Builtin only. Image must be at least 8x8; colour input is reduced to luma.
    FeatureVector extract(const Image& img) const;
    /// Builtin: extract(img). External: the stored vector for (pair_id, side).
    FeatureVector extract_for(const std::string& pair_id, PairSide side, const Image& img) const;

    /// Index of the first pooled slot belonging to filter `filter` (0 = Sobel x, 1 = Sobel y).
    static std::size_t slot(int filter, int cell_row, int cell_col) {
        return static_cast<std::size_t>(filter) * kPoolGrid * kPoolGrid + cell_row * kPoolGrid + cell_col;
    }

private:
    Kind kind_ = Kind::builtin_filterbank;
    std::size_t output_dim_ = 0;
    std::string source_;
    std::map<std::string, std::vector<double>> vectors_;
};

/// u·v / (|u||v|); 0 when either norm is 0.
double cosine_similarity(const FeatureVector& u, const FeatureVector& v);
/// Euclidean distance |u - v|.
double cpl(const FeatureVector& u, const FeatureVector& v);

struct SegmenterProxy {
    int k = 4;
    int max_iterations = 20;
    std::uint64_t seed = 0x5eed;

    /// k-means over (row/height, col/width, intensity/255) with seeded k-means++ init.
    std::vector<int> segment(const Image& img) const;
};

/// Fraction of pixels whose labels agree after mapping b's labels onto a's by
/// greedy maximum overlap. Labels must lie in [0, k).
double label_agreement(const std::vector<int>& a, const std::vector<int>& b, int k);

double sss(const Image& a, const Image& b, const SegmenterProxy& seg = {});

}  // namespace pairval::features

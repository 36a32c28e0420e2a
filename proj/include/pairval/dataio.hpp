#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairval/types.hpp"

namespace pairval {

struct ManifestEntry {
    std::string id;
    std::filesystem::path original;
    std::filesystem::path transformed;
    std::optional<Label> label;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    const ManifestEntry* find(const std::string& id) const;
};

/// Parses `id,original,transformed,label`. Relative image paths resolve against the
/// manifest's directory. Throws on malformed rows (with line number), duplicate ids
/// and missing image files.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// 8-bit gray/RGB PNG. Alpha is composited over black; palette images expand to RGB.
Image load_image(const std::filesystem::path& path);
Image decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const Image& img);
void save_image(const Image& img, const std::filesystem::path& path);

/// Rec.601 luma, rounded half-up. Identity on gray input.
Image to_grayscale(const Image& img);

/// Loads both images of an entry; fails on a dimension mismatch.
ImagePair load_pair(const ManifestEntry& entry);
std::vector<ImagePair> load_pairs(const DatasetManifest& manifest);

struct MetricCache {
    std::string fingerprint;
    std::uint64_t seed = 0;
    std::map<std::string, MetricVector> rows;

    bool operator==(const MetricCache&) const = default;
};

/// CSV with a `#`-prefixed JSON metadata line, then `id` + 13 metric columns.
/// Values are written with 17 significant digits.
void save_metric_cache(const MetricCache& cache, const std::filesystem::path& path);

/// Throws ErrorCode::stale_cache when `expected_fingerprint` is non-empty and differs.
MetricCache load_metric_cache(const std::filesystem::path& path,
                              const std::string& expected_fingerprint = {});

/// Writes to a sibling temp file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace pairval

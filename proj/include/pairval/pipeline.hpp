#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "pairval/dataio.hpp"
#include "pairval/features.hpp"
#include "pairval/metrics.hpp"
#include "pairval/vae.hpp"

namespace pairval {

/// Everything that influences a MetricVector. Echoed into the cache fingerprint.
struct MetricConfig {
    metrics::PixelMetricParams pixel;
    features::SegmenterProxy segmenter;
    features::VaeConfig vae;
    std::optional<std::filesystem::path> external_vectors;  // unset: builtin filter bank

    nlohmann::json to_json() const;
    static MetricConfig from_json(const nlohmann::json& j);
};

/// Computes the 13-metric vector for pairs. The VAE is trained on originals only.
class MetricPipeline {
public:
    MetricPipeline(MetricConfig cfg, features::FeatureExtractor fx, features::VaeModel vae);

    /// Builds the extractor from the config and trains the VAE on the given originals.
    static MetricPipeline train(const MetricConfig& cfg, std::span<const ImagePair> pairs);

    MetricVector compute(const ImagePair& pair) const;
    /// Equals config_fingerprint(config()).
    const std::string& fingerprint() const { return fingerprint_; }
    const features::VaeModel& vae() const { return vae_; }
    const MetricConfig& config() const { return cfg_; }

private:
    MetricConfig cfg_;
    features::FeatureExtractor fx_;
    features::VaeModel vae_;
    std::string fingerprint_;
};

/// Fingerprint that depends only on configuration (used to detect stale caches
/// before any training happens).
std::string config_fingerprint(const MetricConfig& cfg);

MetricCache compute_metric_cache(std::span<const ImagePair> pairs, const MetricConfig& cfg);

}  // namespace pairval

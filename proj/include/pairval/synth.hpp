#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pairval/dataio.hpp"
#include "pairval/types.hpp"

namespace pairval::synth {

enum class Recipe {
    /// valid: brightness/gamma shift <= 15% or noise sigma <= 8;
    /// invalid: noise sigma >= 60, blanking >= 40% of the area, or full blur.
    standard,
    /// Same valid transforms; invalid pairs are either a contrast collapse
    /// (which keeps VIF high) or a full blur (which keeps VAE-RE low), so no
    /// single metric separates the classes.
    two_condition,
};

std::string_view to_string(Recipe r);
Recipe parse_recipe(std::string_view text);

struct SyntheticSpec {
    std::size_t n = 100;
    int width = 64;
    int height = 64;
    double valid_fraction = 0.6;
    Recipe recipe = Recipe::standard;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticSpec from_json(const nlohmann::json& j);
};

/// Exactly round(n * valid_fraction) valid pairs. Pair i depends only on (seed, i).
/// `transforms`, when given, receives the transform name of every pair.
std::vector<ImagePair> generate_pairs(const SyntheticSpec& spec, std::vector<std::string>* transforms = nullptr);

/// Writes PNGs under `dir/images` and `dir/manifest.csv`; returns the manifest with resolved paths.
DatasetManifest write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir);

/// Seeded original image: textured background plus 3-6 filled shapes.
Image make_original(int width, int height, std::uint64_t seed);

}  // namespace pairval::synth

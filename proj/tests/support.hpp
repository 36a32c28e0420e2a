#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "pairval/alcore.hpp"
#include "pairval/types.hpp"

namespace testsupport {

inline pairval::Image random_image(int w, int h, int channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(0, 255);
    pairval::Image img(w, h, channels);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(d(rng));
    return img;
}

inline pairval::Image constant_image(int w, int h, std::uint8_t value) {
    pairval::Image img(w, h, 1);
    for (auto& v : img.data) v = value;
    return img;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("pairval-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Items whose validity is decided by two metric columns: ssim above 0.5 and
/// mse below 50. The other columns are noise. Every item carries its label.
inline std::vector<pairval::al::Item> separable_items(std::size_t n, std::uint64_t seed, double valid_share = 0.6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<pairval::al::Item> items;
    for (std::size_t i = 0; i < n; ++i) {
        pairval::al::Item it;
        char id[16];
        std::snprintf(id, sizeof(id), "i%04zu", i);
        it.id = id;
        const bool valid = u(rng) < valid_share;
        for (auto& v : it.features.values) v = u(rng);
        it.features[pairval::MetricIndex::ssim] = valid ? 0.6 + 0.4 * u(rng) : 0.4 * u(rng);
        it.features[pairval::MetricIndex::mse] = valid ? 40.0 * u(rng) : 60.0 + 100.0 * u(rng);
        it.known_label = valid ? pairval::Label::valid : pairval::Label::invalid;
        items.push_back(std::move(it));
    }
    return items;
}

inline std::map<std::string, pairval::Label> truth_of(const std::vector<pairval::al::Item>& items) {
    std::map<std::string, pairval::Label> t;
    for (const auto& it : items) t[it.id] = *it.known_label;
    return t;
}

}  // namespace testsupport

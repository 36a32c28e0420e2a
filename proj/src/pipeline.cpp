#include "pairval/pipeline.hpp"

#include "pairval/errors.hpp"
#include "pairval/util.hpp"

namespace pairval {

using nlohmann::json;

json MetricConfig::to_json() const {
    json j = {{"pixel", pixel.to_json()},
              {"segmenter", {{"k", segmenter.k}, {"max_iterations", segmenter.max_iterations}, {"seed", segmenter.seed}}},
              {"vae", vae.to_json()}};
    j["external_vectors"] = external_vectors ? json(external_vectors->string()) : json(nullptr);
    return j;
}

MetricConfig MetricConfig::from_json(const json& j) {
    MetricConfig c;
    if (j.contains("pixel")) c.pixel = metrics::PixelMetricParams::from_json(j.at("pixel"));
    if (j.contains("segmenter")) {
        const auto& s = j.at("segmenter");
        c.segmenter.k = s.value("k", c.segmenter.k);
        c.segmenter.max_iterations = s.value("max_iterations", c.segmenter.max_iterations);
        c.segmenter.seed = s.value("seed", c.segmenter.seed);
        require(c.segmenter.k >= 1 && c.segmenter.max_iterations >= 1, ErrorCode::invalid_argument,
                "segmenter k and max_iterations must be >= 1");
    }
    if (j.contains("vae")) c.vae = features::VaeConfig::from_json(j.at("vae"));
    if (j.contains("external_vectors") && !j.at("external_vectors").is_null()) {
        c.external_vectors = j.at("external_vectors").get<std::string>();
    }
    return c;
}

std::string config_fingerprint(const MetricConfig& cfg) {
    json j = cfg.to_json();
    // The path itself is irrelevant; the extractor fingerprint covers file contents.
    j.erase("external_vectors");
    const auto fx = cfg.external_vectors ? features::FeatureExtractor::external(*cfg.external_vectors)
                                         : features::FeatureExtractor::builtin();
    j["extractor"] = fx.fingerprint();
    return hex64(fnv1a64(j.dump()));
}

MetricPipeline::MetricPipeline(MetricConfig cfg, features::FeatureExtractor fx, features::VaeModel vae)
    : cfg_(std::move(cfg)), fx_(std::move(fx)), vae_(std::move(vae)) {
    json j = cfg_.to_json();
    j.erase("external_vectors");
    j["extractor"] = fx_.fingerprint();
    fingerprint_ = hex64(fnv1a64(j.dump()));
}

MetricPipeline MetricPipeline::train(const MetricConfig& cfg, std::span<const ImagePair> pairs) {
    cfg.pixel.validate();
    auto fx = cfg.external_vectors ? features::FeatureExtractor::external(*cfg.external_vectors)
                                   : features::FeatureExtractor::builtin();
    std::vector<Image> originals;
    originals.reserve(pairs.size());
    for (const auto& p : pairs) originals.push_back(p.original);
    auto vae = features::train_vae(originals, cfg.vae);
    return MetricPipeline(cfg, std::move(fx), std::move(vae));
}

MetricVector MetricPipeline::compute(const ImagePair& pair) const {
    require(pair.original.same_shape(pair.transformed), ErrorCode::dimension_mismatch,
            "pair '" + pair.id + "' has images of different shape");
    const auto px = metrics::compute_pixel_metrics(pair.original, pair.transformed, cfg_.pixel);
    const auto fa = fx_.extract_for(pair.id, features::PairSide::original, pair.original);
    const auto fb = fx_.extract_for(pair.id, features::PairSide::transformed, pair.transformed);

    MetricVector v;
    v[MetricIndex::psnr] = px.psnr;
    v[MetricIndex::ssim] = px.ssim;
    v[MetricIndex::mse] = px.mse;
    v[MetricIndex::tsi] = px.tsi;
    v[MetricIndex::ws] = px.ws;
    v[MetricIndex::cs] = features::cosine_similarity(fa, fb);
    v[MetricIndex::kl] = px.kl;
    v[MetricIndex::hist_int] = px.hist_int;
    v[MetricIndex::hist_cor] = px.hist_cor;
    v[MetricIndex::cpl] = features::cpl(fa, fb);
    v[MetricIndex::sss] = features::sss(pair.original, pair.transformed, cfg_.segmenter);
    v[MetricIndex::vae_re] = vae_.reconstruction_error(pair.transformed);
    v[MetricIndex::vif] = px.vif;
    require(v.all_finite(), ErrorCode::numeric, "non-finite metric value for pair '" + pair.id + "'");
    return v;
}

MetricCache compute_metric_cache(std::span<const ImagePair> pairs, const MetricConfig& cfg) {
    const auto pipeline = MetricPipeline::train(cfg, pairs);
    MetricCache cache;
    cache.fingerprint = config_fingerprint(cfg);
    cache.seed = cfg.vae.seed;
    for (const auto& p : pairs) cache.rows.emplace(p.id, pipeline.compute(p));
    return cache;
}

}  // namespace pairval

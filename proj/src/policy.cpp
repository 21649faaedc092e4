#include "brec/policy.hpp"

#include <stdexcept>

#include "brec/geometry.hpp"

namespace brec {

const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::model: return "model";
        case PolicyKind::contaminated: return "contaminated";
        case PolicyKind::random: return "random";
        case PolicyKind::heuristic: return "heuristic";
    }
    throw std::invalid_argument("unknown PolicyKind");
}

PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "model") return PolicyKind::model;
    if (s == "contaminated") return PolicyKind::contaminated;
    if (s == "random") return PolicyKind::random;
    if (s == "heuristic") return PolicyKind::heuristic;
    throw std::invalid_argument("unknown policy kind: " + s);
}

void PolicyConfig::validate(const BundlePool& pool) const {
    pool.validate();
    if (contamination_p < 0.0 || contamination_p > 100.0)
        throw std::invalid_argument("contamination_p must be in [0, 100]");
    if (kind == PolicyKind::heuristic && pool.find(heuristic_bundle_id) == nullptr)
        throw std::invalid_argument("heuristic_bundle_id not in pool: " + heuristic_bundle_id);
    if (!fallback_bundle_id.empty() && pool.find(fallback_bundle_id) == nullptr)
        throw std::invalid_argument("fallback_bundle_id not in pool: " + fallback_bundle_id);
}

namespace {

// Argmin of cos_dist over the pool, lowest index on ties.
Recommendation model_pick(const PreferenceVector& prediction, const BundlePool& pool) {
    int best = 0;
    double best_d = cos_dist(pool.bundles[0].as_vec(), prediction);
    for (size_t i = 1; i < pool.bundles.size(); ++i) {
        double d = cos_dist(pool.bundles[i].as_vec(), prediction);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return {pool.bundles[best].id, PolicyTag::model, best_d};
}

Recommendation fallback_pick(const BundlePool& pool, const PolicyConfig& config) {
    const Bundle* b = config.fallback_bundle_id.empty() ? &pool.bundles.front()
                                                        : pool.find(config.fallback_bundle_id);
    return {b->id, PolicyTag::fallback, std::nullopt};
}

Recommendation random_pick(const BundlePool& pool, RngStream& rng, PolicyTag tag) {
    size_t i = static_cast<size_t>(rng.uniform_int(pool.bundles.size()));
    return {pool.bundles[i].id, tag, std::nullopt};
}

}  // namespace

Recommendation recommend(const std::optional<PreferenceVector>& prediction, const BundlePool& pool,
                         const PolicyConfig& config, RngStream& rng) {
    config.validate(pool);
    switch (config.kind) {
        case PolicyKind::random:
            return random_pick(pool, rng, PolicyTag::pure_random);
        case PolicyKind::heuristic:
            return {pool.find(config.heuristic_bundle_id)->id, PolicyTag::heuristic, std::nullopt};
        case PolicyKind::contaminated: {
            // X ~ U[0,100); the random branch fires with probability p/100.
            double x = rng.uniform(0.0, 100.0);
            if (x < config.contamination_p) return random_pick(pool, rng, PolicyTag::contaminated_random);
            if (!prediction.has_value()) return fallback_pick(pool, config);
            return model_pick(*prediction, pool);
        }
        case PolicyKind::model:
            if (!prediction.has_value()) return fallback_pick(pool, config);
            return model_pick(*prediction, pool);
    }
    throw std::invalid_argument("unknown PolicyKind");
}

void PredictionCache::put(int64_t user_id, PreferenceVector prediction) {
    latest_[user_id] = std::move(prediction);
}

std::optional<PreferenceVector> PredictionCache::latest(int64_t user_id) const {
    auto it = latest_.find(user_id);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
}

Recommendation fallback_chain(int64_t user_id, const PredictionCache& cache,
                              const BundlePool& pool, const PolicyConfig& config, RngStream& rng) {
    auto cached = cache.latest(user_id);
    if (cached.has_value()) {
        PolicyConfig model_cfg = config;
        model_cfg.kind = PolicyKind::model;
        return recommend(cached, pool, model_cfg, rng);
    }
    config.validate(pool);
    return fallback_pick(pool, config);
}

}  // namespace brec

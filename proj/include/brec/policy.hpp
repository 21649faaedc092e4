#pragma once
// Serving policies: model recommendation, contaminated recommendation,
// pure random, heuristic, and the fallback chain for users without a
// prediction.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "brec/core.hpp"
#include "brec/rng.hpp"

namespace brec {

enum class PolicyKind { model, contaminated, random, heuristic };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::model;
    double contamination_p = 0.0;      // percent in [0, 100]; contaminated only
    std::string heuristic_bundle_id;   // heuristic only
    std::string fallback_bundle_id;    // served when no prediction is available;
                                       // empty means "first bundle in the pool"

    void validate(const BundlePool& pool) const;
};

struct Recommendation {
    std::string bundle_id;
    PolicyTag provenance = PolicyTag::model;
    std::optional<double> d_c;  // cos_dist(prediction, bundle) on the model path
};

// Serves one bundle. Model path: argmin over the pool of
// cos_dist(bundle, prediction), lowest index on ties. Contaminated path:
// X ~ U[0,100); X < p serves a uniform random pool bundle (provenance
// contaminated_random), otherwise the model bundle. Random path: uniform.
// Heuristic path: the configured fixed bundle. A missing prediction on a
// model/contaminated path degrades to the fallback bundle.
// Throws std::invalid_argument on an empty pool or invalid config.
Recommendation recommend(const std::optional<PreferenceVector>& prediction, const BundlePool& pool,
                         const PolicyConfig& config, RngStream& rng);

// One-deep per-user prediction cache backing the fallback chain.
class PredictionCache {
public:
    void put(int64_t user_id, PreferenceVector prediction);
    std::optional<PreferenceVector> latest(int64_t user_id) const;
    size_t size() const { return latest_.size(); }

private:
    std::map<int64_t, PreferenceVector> latest_;
};

// Latest cached prediction if one exists for the user (served through the
// model path), else the configured fallback bundle with provenance fallback.
Recommendation fallback_chain(int64_t user_id, const PredictionCache& cache,
                              const BundlePool& pool, const PolicyConfig& config, RngStream& rng);

}  // namespace brec

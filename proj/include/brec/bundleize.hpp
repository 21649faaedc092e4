#pragma once
// Step 3: turn real-valued centroids into integer item bundles and audit the
// resulting d_p + d_c + d_o error budget.

#include <vector>

#include "brec/cluster.hpp"
#include "brec/core.hpp"

namespace brec {

struct BundleizationResult {
    Bundle bundle;            // id filled by build_pool
    int source_centroid = -1;
    double scale_used = 0.0;
    double d_o = 0.0;  // cos_dist(centroid, bundle)
};

// Default rounding-resolution grid; only the direction of the result matters.
std::vector<double> default_scale_grid();  // {1, 2, ..., 50}

// For each scale s, candidate = clamp(round(s * unit(centroid)), min, max);
// returns the candidate with minimal cos_dist to the centroid, skipping
// all-zero candidates; ties go to the smallest scale.
// Throws std::domain_error when every candidate is all-zero.
BundleizationResult round_to_bundle(const Vec& centroid, const ItemCatalog& catalog,
                                    const std::vector<double>& scale_grid);

struct PoolBuild {
    BundlePool pool;
    std::vector<int> cluster_to_bundle;          // centroid index -> pool index
    std::vector<BundleizationResult> per_centroid;  // d_o and scale per centroid
};

// One bundle per centroid, duplicates merged (first id wins), mapping kept.
PoolBuild build_pool(const ClusterModel& model, const ItemCatalog& catalog,
                     const std::vector<double>& scale_grid);

struct ErrorBudget {
    double d_p = 0.0;  // cos_dist(true, prediction)
    double d_c = 0.0;  // cos_dist(prediction, assigned centroid)
    double d_o = 0.0;  // cos_dist(centroid, bundle)
    double total_bound = 0.0;       // d_p + d_c + d_o
    double realized = 0.0;          // cos_dist(true, bundle)
    double d_p_ang = 0.0, d_c_ang = 0.0, d_o_ang = 0.0;
    double bound_angular = 0.0;     // sum of angular legs; provably >= realized_angular
    double realized_angular = 0.0;
    bool cosine_bound_violated = false;  // realized > total_bound (reported, not asserted)
};

ErrorBudget audit_error_budget(const Vec& true_pref, const Vec& prediction,
                               const ClusterModel& model, const PoolBuild& pool);

}  // namespace brec

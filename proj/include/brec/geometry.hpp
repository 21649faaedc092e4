#pragma once
// Distance and similarity math plus the daily engagement metric definitions.

#include <optional>
#include <vector>

#include "brec/core.hpp"

namespace brec {

// Cosine similarity, clamped to [-1, 1] to absorb rounding.
// Throws std::invalid_argument on length mismatch, std::domain_error on a
// zero vector.
double cos_sim(const Vec& a, const Vec& b);

// 1 - cos_sim. Zero iff the vectors are positive scalar multiples.
double cos_dist(const Vec& a, const Vec& b);

// Geodesic distance on the unit sphere; satisfies the triangle inequality.
double angular_dist(const Vec& a, const Vec& b);

double norm(const Vec& v);
double dot(const Vec& a, const Vec& b);
Vec to_unit(const Vec& v);   // throws std::domain_error on zero vector

// Normalized all-ones vector: the uniform item-composition direction used as
// the default diversity reference.
Vec uniform_direction(int dim);

// Take-weighted mean cosine distance between pool bundles and a reference
// direction. Throws std::domain_error when all weights are zero ("no takes").
double recommendation_diversity(const BundlePool& pool, const std::vector<double>& take_weights,
                                const Vec& reference);

struct MetricReport {
    int day = 0;
    int64_t cv = 0;           // click volume
    int64_t av = 0;           // acceptance (take) volume
    int64_t impressions = 0;
    std::optional<double> tr;  // av / impressions, absent when impressions == 0
    std::optional<double> cr;  // cv / impressions, absent when impressions == 0
    std::optional<double> rd;  // diversity, absent when no takes
};

// Counts clicks/takes/impressions for one day of events and derives the
// rates plus take-weighted diversity against `reference`.
// Throws std::invalid_argument if any record is from a different day.
MetricReport daily_metrics(const std::vector<EventRecord>& events, int day,
                           const BundlePool& pool, const Vec& reference);

struct UpliftResult {
    std::string metric_name;
    double treatment_total = 0.0;
    int64_t treatment_size = 0;
    double control_total = 0.0;
    int64_t control_size = 0;
    double uplift_pct = 0.0;
};

// Percentage difference of per-capita totals between treatment and control.
// Throws std::domain_error on nonpositive sizes or control per-capita <= 0.
UpliftResult uplift(double treatment_total, int64_t treatment_size, double control_total,
                    int64_t control_size, const std::string& metric_name = "");

}  // namespace brec

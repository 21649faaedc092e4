#include "brec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace brec {

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec to_unit(const Vec& v) {
    double n = norm(v);
    if (n <= 0.0) throw std::domain_error("to_unit: zero vector");
    Vec u(v.size());
    for (size_t i = 0; i < v.size(); ++i) u[i] = v[i] / n;
    return u;
}

double cos_sim(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cos_sim: length mismatch");
    double na = norm(a), nb = norm(b);
    if (na <= 0.0 || nb <= 0.0) throw std::domain_error("cos_sim: zero vector");
    double c = dot(a, b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

double cos_dist(const Vec& a, const Vec& b) { return 1.0 - cos_sim(a, b); }

double angular_dist(const Vec& a, const Vec& b) { return std::acos(cos_sim(a, b)); }

Vec uniform_direction(int dim) {
    if (dim < 1) throw std::invalid_argument("uniform_direction: dim must be >= 1");
    return Vec(static_cast<size_t>(dim), 1.0 / std::sqrt(static_cast<double>(dim)));
}

double recommendation_diversity(const BundlePool& pool, const std::vector<double>& take_weights,
                                const Vec& reference) {
    if (take_weights.size() != pool.bundles.size())
        throw std::invalid_argument("recommendation_diversity: weight/pool size mismatch");
    double wsum = 0.0, acc = 0.0;
    for (size_t i = 0; i < pool.bundles.size(); ++i) {
        double w = take_weights[i];
        if (w < 0.0) throw std::invalid_argument("recommendation_diversity: negative weight");
        if (w == 0.0) continue;
        acc += w * cos_dist(pool.bundles[i].as_vec(), reference);
        wsum += w;
    }
    if (wsum <= 0.0) throw std::domain_error("recommendation_diversity: no takes");
    return acc / wsum;
}

MetricReport daily_metrics(const std::vector<EventRecord>& events, int day, const BundlePool& pool,
                           const Vec& reference) {
    MetricReport r;
    r.day = day;
    std::vector<double> takes(pool.bundles.size(), 0.0);
    for (const auto& e : events) {
        if (e.day != day) throw std::invalid_argument("daily_metrics: record from another day");
        if (e.impression) ++r.impressions;
        if (e.clicked) ++r.cv;
        if (e.taken) {
            ++r.av;
            int idx = pool.index_of(e.bundle_id);
            if (idx < 0) throw std::invalid_argument("daily_metrics: unknown bundle id " + e.bundle_id);
            takes[static_cast<size_t>(idx)] += 1.0;
        }
    }
    if (r.impressions > 0) {
        r.tr = static_cast<double>(r.av) / static_cast<double>(r.impressions);
        r.cr = static_cast<double>(r.cv) / static_cast<double>(r.impressions);
    }
    if (r.av > 0) r.rd = recommendation_diversity(pool, takes, reference);
    return r;
}

UpliftResult uplift(double treatment_total, int64_t treatment_size, double control_total,
                    int64_t control_size, const std::string& metric_name) {
    if (treatment_size <= 0 || control_size <= 0)
        throw std::domain_error("uplift: group sizes must be positive");
    double c_pc = control_total / static_cast<double>(control_size);
    if (c_pc <= 0.0) throw std::domain_error("uplift: control per-capita must be positive");
    double t_pc = treatment_total / static_cast<double>(treatment_size);
    UpliftResult r;
    r.metric_name = metric_name;
    r.treatment_total = treatment_total;
    r.treatment_size = treatment_size;
    r.control_total = control_total;
    r.control_size = control_size;
    r.uplift_pct = 100.0 * (t_pc / c_pc - 1.0);
    return r;
}

}  // namespace brec

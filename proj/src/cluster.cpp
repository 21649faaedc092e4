#include "brec/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brec/geometry.hpp"
#include "brec/rng.hpp"

namespace brec {

void ClusterModel::validate() const {
    if (k < 1) throw std::invalid_argument("ClusterModel: k must be >= 1");
    if (static_cast<int>(centroids.size()) != k)
        throw std::invalid_argument("ClusterModel: centroid count != k");
    for (const auto& c : centroids) {
        if (std::fabs(norm(c) - 1.0) > 1e-9)
            throw std::invalid_argument("ClusterModel: centroid not unit norm");
        for (double x : c)
            if (x < 0.0) throw std::invalid_argument("ClusterModel: negative centroid entry");
    }
}

namespace {

int count_distinct_directions(const std::vector<Vec>& unit_points) {
    std::vector<Vec> sorted = unit_points;
    std::sort(sorted.begin(), sorted.end());
    auto near = [](const Vec& a, const Vec& b) {
        for (size_t i = 0; i < a.size(); ++i)
            if (std::fabs(a[i] - b[i]) > 1e-12) return false;
        return true;
    };
    int distinct = 0;
    for (size_t i = 0; i < sorted.size(); ++i)
        if (i == 0 || !near(sorted[i], sorted[i - 1])) ++distinct;
    return distinct;
}

// k-means++ seeding: first pick uniform, then proportional to cos_dist to the
// nearest already-chosen centroid.
std::vector<Vec> seed_centroids(const std::vector<Vec>& pts, int k, RngStream& rng) {
    std::vector<Vec> centroids;
    centroids.reserve(static_cast<size_t>(k));
    centroids.push_back(pts[rng.uniform_int(pts.size())]);
    std::vector<double> d(pts.size());
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (size_t i = 0; i < pts.size(); ++i) {
            double best = cos_dist(pts[i], centroids[0]);
            for (size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, cos_dist(pts[i], centroids[c]));
            d[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total > 0.0) {
            double u = rng.uniform01() * total, acc = 0.0;
            pick = pts.size() - 1;
            for (size_t i = 0; i < pts.size(); ++i) {
                acc += d[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            // A zero-distance point can only be hit by rounding; nudge to the
            // nearest point with positive distance.
            if (d[pick] <= 0.0) {
                for (size_t i = 0; i < pts.size(); ++i)
                    if (d[i] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        } else {
            throw std::domain_error("fit_kmeans: fewer than k distinct directions");
        }
        centroids.push_back(pts[pick]);
    }
    return centroids;
}

}  // namespace

ClusterModel fit_kmeans(const std::vector<Vec>& predictions, int k, uint64_t seed, int max_iters,
                        double tol) {
    if (k < 1) throw std::invalid_argument("fit_kmeans: k must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("fit_kmeans: max_iters must be >= 1");
    if (tol < 0.0) throw std::invalid_argument("fit_kmeans: tol must be >= 0");
    if (predictions.empty()) throw std::invalid_argument("fit_kmeans: empty input");

    std::vector<Vec> pts;
    pts.reserve(predictions.size());
    for (const auto& p : predictions) {
        for (double x : p)
            if (x < 0.0) throw std::invalid_argument("fit_kmeans: negative preference entry");
        pts.push_back(to_unit(p));
    }
    const size_t n = pts.size();
    const size_t dim = pts[0].size();
    for (const auto& p : pts)
        if (p.size() != dim) throw std::invalid_argument("fit_kmeans: mixed dimensions");

    if (count_distinct_directions(pts) < k)
        throw std::domain_error("fit_kmeans: fewer than k distinct directions");

    auto rng = derive_stream(seed, "kmeans", 0);
    std::vector<Vec> centroids = seed_centroids(pts, k, rng);

    ClusterModel model;
    model.k = k;
    model.seed = seed;

    std::vector<int> owner(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        // Assignment pass.
        double objective = 0.0;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = cos_dist(pts[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = cos_dist(pts[i], centroids[static_cast<size_t>(c)]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            owner[i] = best;
            objective += bd;
        }
        model.inertia_trace.push_back(objective);
        model.iterations_run = iter + 1;

        // Update pass: normalized means.
        std::vector<Vec> next(static_cast<size_t>(k), Vec(dim, 0.0));
        std::vector<int> counts(static_cast<size_t>(k), 0);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < dim; ++j) next[static_cast<size_t>(owner[i])][j] += pts[i][j];
            ++counts[static_cast<size_t>(owner[i])];
        }
        for (int c = 0; c < k; ++c) {
            auto& v = next[static_cast<size_t>(c)];
            if (counts[static_cast<size_t>(c)] == 0 || norm(v) <= 0.0) {
                // Re-seed with the point farthest from its assigned centroid.
                size_t far = 0;
                double fd = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    double d = cos_dist(pts[i], centroids[static_cast<size_t>(owner[i])]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                v = pts[far];
            } else {
                v = to_unit(v);
            }
        }

        double movement = 0.0;
        for (int c = 0; c < k; ++c) {
            double m = 0.0;
            for (size_t j = 0; j < dim; ++j) {
                double dj = next[static_cast<size_t>(c)][j] - centroids[static_cast<size_t>(c)][j];
                m += dj * dj;
            }
            movement = std::max(movement, std::sqrt(m));
        }
        centroids = std::move(next);
        if (movement < tol) break;
    }

    // Final assignment so the stored inertia reflects the stored centroids.
    double objective = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double bd = cos_dist(pts[i], centroids[0]);
        for (int c = 1; c < k; ++c)
            bd = std::min(bd, cos_dist(pts[i], centroids[static_cast<size_t>(c)]));
        objective += bd;
    }
    model.inertia_trace.push_back(objective);
    model.inertia = objective;
    model.centroids = std::move(centroids);
    model.validate();
    return model;
}

Assignment assign(const ClusterModel& model, const Vec& prediction) {
    if (model.centroids.empty()) throw std::invalid_argument("assign: empty model");
    Assignment a;
    a.cluster = 0;
    a.d_c = cos_dist(prediction, model.centroids[0]);
    for (size_t c = 1; c < model.centroids.size(); ++c) {
        double d = cos_dist(prediction, model.centroids[c]);
        if (d < a.d_c) {
            a.d_c = d;
            a.cluster = static_cast<int>(c);
        }
    }
    return a;
}

}  // namespace brec

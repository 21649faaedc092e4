#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "brec/cluster.hpp"
#include "brec/geometry.hpp"
#include "brec/rng.hpp"

using namespace brec;

namespace {

// Nonnegative random direction with a dominant block, for separated groups.
Vec noisy_direction(const Vec& base, double noise, RngStream& rng) {
    Vec v = base;
    for (auto& x : v) x = std::max(0.0, x + noise * rng.uniform01());
    return v;
}

}  // namespace

TEST_CASE("k=1 centroid is the normalized mean direction") {
    std::vector<Vec> pts = {{1, 0}, {0, 1}};
    auto m = fit_kmeans(pts, 1, 42);
    // Mean of unit vectors is [0.5, 0.5]; normalized -> [1/sqrt2, 1/sqrt2].
    CHECK(m.centroids[0][0] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(m.centroids[0][1] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(m.k == 1);
}

TEST_CASE("k equal to point count drives inertia to zero") {
    std::vector<Vec> pts = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}};
    auto m = fit_kmeans(pts, 4, 7);
    CHECK(m.inertia == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two well-separated groups recovered with k=2") {
    auto rng = derive_stream(11, "groups", 0);
    Vec a{1, 0, 0, 0}, b{0, 0, 1, 1};  // angular distance > 1 rad
    std::vector<Vec> pts;
    std::vector<int> truth;
    for (int i = 0; i < 60; ++i) {
        pts.push_back(noisy_direction(a, 0.08, rng));
        truth.push_back(0);
        pts.push_back(noisy_direction(b, 0.08, rng));
        truth.push_back(1);
    }
    auto m = fit_kmeans(pts, 2, 3);
    // Assignment must split exactly along the generated groups (up to label swap).
    int first = assign(m, pts[0]).cluster;
    for (size_t i = 0; i < pts.size(); ++i) {
        int got = assign(m, pts[i]).cluster;
        CHECK((truth[i] == 0 ? got == first : got != first));
    }
}

TEST_CASE("lloyd inertia trace is non-increasing and assignments match brute force") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto rng = derive_stream(seed, "cloud", 0);
        std::vector<Vec> pts;
        for (int i = 0; i < 200; ++i) {
            Vec v(5);
            for (auto& x : v) x = rng.uniform01() + 1e-6;
            pts.push_back(v);
        }
        auto m = fit_kmeans(pts, 3, seed);
        for (size_t t = 1; t < m.inertia_trace.size(); ++t)
            CHECK(m.inertia_trace[t] <= m.inertia_trace[t - 1] + 1e-12);
        // Brute-force nearest centroid agrees with assign().
        for (const auto& p : pts) {
            auto a = assign(m, p);
            int best = 0;
            double bd = cos_dist(p, m.centroids[0]);
            for (int c = 1; c < m.k; ++c) {
                double d = cos_dist(p, m.centroids[static_cast<size_t>(c)]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            CHECK(a.cluster == best);
            CHECK(a.d_c == doctest::Approx(bd));
        }
    }
}

TEST_CASE("assignment is scale invariant") {
    auto rng = derive_stream(5, "scaleinv", 0);
    std::vector<Vec> pts;
    for (int i = 0; i < 50; ++i) {
        Vec v(4);
        for (auto& x : v) x = rng.uniform01() + 1e-6;
        pts.push_back(v);
    }
    auto m = fit_kmeans(pts, 4, 9);
    for (int i = 0; i < 1000; ++i) {
        Vec v(4);
        for (auto& x : v) x = rng.uniform01() + 1e-6;
        double k = std::exp(rng.uniform(-6.0, 6.0));
        Vec kv = v;
        for (auto& x : kv) x *= k;
        CHECK(assign(m, v).cluster == assign(m, kv).cluster);
    }
}

TEST_CASE("determinism and error cases") {
    auto rng = derive_stream(31, "det", 0);
    std::vector<Vec> pts;
    for (int i = 0; i < 40; ++i) {
        Vec v(3);
        for (auto& x : v) x = rng.uniform01() + 1e-6;
        pts.push_back(v);
    }
    auto m1 = fit_kmeans(pts, 5, 1234);
    auto m2 = fit_kmeans(pts, 5, 1234);
    CHECK(m1.centroids == m2.centroids);
    CHECK(m1.inertia == m2.inertia);
    CHECK(m1.iterations_run == m2.iterations_run);

    // Same direction repeated: only one distinct direction available.
    std::vector<Vec> dup = {{1, 1, 0}, {2, 2, 0}, {0.5, 0.5, 0}};
    CHECK_THROWS_AS(fit_kmeans(dup, 2, 0), std::domain_error);
    CHECK_NOTHROW(fit_kmeans(dup, 1, 0));

    CHECK_THROWS_AS(fit_kmeans(pts, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit_kmeans({{1.0, -0.2, 0.0}}, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(assign(m1, Vec{0, 0, 0}), std::domain_error);
    // Prediction equal to a centroid maps to it with d_c = 0.
    auto a = assign(m1, m1.centroids[3]);
    CHECK(a.cluster == 3);
    CHECK(a.d_c == doctest::Approx(0.0));
}

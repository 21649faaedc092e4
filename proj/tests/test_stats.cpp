#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "brec/stats.hpp"

using namespace brec;

TEST_CASE("moments and correlation") {
    std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(stats::mean(x) == doctest::Approx(3.0));
    CHECK(stats::variance(x) == doctest::Approx(2.5));
    std::vector<double> y{2, 4, 6, 8, 10};
    CHECK(stats::pearson(x, y) == doctest::Approx(1.0));
    std::vector<double> yn{10, 8, 6, 4, 2};
    CHECK(stats::pearson(x, yn) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(stats::pearson(x, std::vector<double>{1, 1, 1, 1, 1}), std::domain_error);
}

TEST_CASE("ols recovers a known line") {
    // y = 3 + 2x exactly.
    std::vector<double> x{0, 1, 2, 3, 4};
    std::vector<double> y{3, 5, 7, 9, 11};
    auto f = stats::ols(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(3.0));
    CHECK(f.slope_se == doctest::Approx(0.0));
    CHECK(f.r2 == doctest::Approx(1.0));

    // Hand-computed noisy case: x = 0..4, y = {2.1, 3.9, 6.2, 7.8, 10.1}.
    // slope = sxy/sxx = 19.9/10, intercept = 6.02 - 1.99*2.
    std::vector<double> yn{2.1, 3.9, 6.2, 7.8, 10.1};
    auto g = stats::ols(x, yn);
    CHECK(g.slope == doctest::Approx(1.99).epsilon(1e-12));
    CHECK(g.intercept == doctest::Approx(2.04).epsilon(1e-9));
    CHECK_THROWS_AS(stats::ols(std::vector<double>{1, 1}, std::vector<double>{2, 3}),
                    std::domain_error);
}

TEST_CASE("normal cdf at fixed quantiles") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(stats::normal_cdf(-1.959963984540054) == doctest::Approx(0.025).epsilon(1e-9));
}

TEST_CASE("mann-kendall flags a monotone trend and not noise") {
    std::vector<double> up{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    auto t = stats::mann_kendall(up);
    CHECK(t.s == doctest::Approx(66.0));  // all 66 pairs increasing
    CHECK(t.p_value < 0.001);

    std::vector<double> flat{5, 3, 6, 4, 5, 4, 6, 5, 3, 6, 4, 5};
    auto f = stats::mann_kendall(flat);
    CHECK(f.p_value > 0.2);

    // Tie correction: constant series has S = 0 and p = 1.
    std::vector<double> konst{2, 2, 2, 2, 2};
    auto k = stats::mann_kendall(konst);
    CHECK(k.s == doctest::Approx(0.0));
    CHECK(k.p_value == doctest::Approx(1.0));
}

TEST_CASE("bootstrap uplift matches the point estimate and calibrates") {
    auto rng = derive_stream(2024, "boot", 0);
    // Clearly separated groups: treatment per-capita 2x control.
    std::vector<double> t, c;
    for (int i = 0; i < 400; ++i) {
        t.push_back(2.0 + 0.1 * rng.gaussian(0, 1));
        c.push_back(1.0 + 0.1 * rng.gaussian(0, 1));
    }
    auto r = stats::bootstrap_uplift(t, c, 500, rng);
    CHECK(r.estimate == doctest::Approx(100.0).epsilon(0.05));
    CHECK(r.prob_positive == doctest::Approx(1.0));
    CHECK(r.se > 0.0);
    CHECK(r.se < 10.0);

    // Identical groups: probability should hover near 0.5.
    std::vector<double> a, b;
    for (int i = 0; i < 400; ++i) {
        a.push_back(1.0 + 0.2 * rng.gaussian(0, 1));
        b.push_back(1.0 + 0.2 * rng.gaussian(0, 1));
    }
    auto r2 = stats::bootstrap_uplift(a, a, 500, rng);
    CHECK(r2.estimate == doctest::Approx(0.0));
    CHECK(r2.prob_positive > 0.2);
    CHECK(r2.prob_positive < 0.8);
}

TEST_CASE("ratio bootstrap: ratio-of-sums estimate and degenerate handling") {
    auto rng = derive_stream(2025, "rboot", 0);

    // Every treatment resample is 0.5 per impression, every control 0.25:
    // the uplift is exactly +100% in all resamples.
    std::vector<stats::RatioSample> t{{2.0, 4.0}, {1.0, 2.0}};
    std::vector<stats::RatioSample> c{{1.0, 4.0}, {1.0, 4.0}};
    auto r = stats::bootstrap_ratio_uplift(t, c, 300, rng);
    CHECK(r.estimate == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.prob_positive == doctest::Approx(1.0));
    CHECK(r.se == doctest::Approx(0.0));

    // A heterogeneous control makes the spread strictly positive.
    std::vector<stats::RatioSample> c2{{1.0, 4.0}, {2.0, 4.0}};
    auto r2 = stats::bootstrap_ratio_uplift(t, c2, 500, rng);
    CHECK(r2.estimate == doctest::Approx(100.0 * (0.5 / 0.375 - 1.0)).epsilon(1e-12));
    CHECK(r2.se > 0.0);

    SUBCASE("zero-count control resamples count direction, skip spread") {
        // Control resamples to {0,1}x2 with probability 1/4; those rounds
        // are positive for the treatment but contribute no spread sample.
        std::vector<stats::RatioSample> ones{{1.0, 1.0}, {1.0, 1.0}};
        std::vector<stats::RatioSample> sparse{{0.0, 1.0}, {2.0, 1.0}};
        auto rs = stats::bootstrap_ratio_uplift(ones, sparse, 2000, rng);
        CHECK(rs.prob_positive > 0.17);
        CHECK(rs.prob_positive < 0.33);
    }
    SUBCASE("unusable groups are rejected") {
        std::vector<stats::RatioSample> empty;
        std::vector<stats::RatioSample> zero_den{{1.0, 0.0}};
        std::vector<stats::RatioSample> zero_num{{0.0, 5.0}};
        CHECK_THROWS_AS(stats::bootstrap_ratio_uplift(empty, c, 100, rng),
                        std::invalid_argument);
        CHECK_THROWS_AS(stats::bootstrap_ratio_uplift(t, c, 0, rng), std::invalid_argument);
        CHECK_THROWS_AS(stats::bootstrap_ratio_uplift(t, zero_den, 100, rng), std::domain_error);
        CHECK_THROWS_AS(stats::bootstrap_ratio_uplift(zero_den, c, 100, rng), std::domain_error);
        CHECK_THROWS_AS(stats::bootstrap_ratio_uplift(t, zero_num, 100, rng), std::domain_error);
    }
}

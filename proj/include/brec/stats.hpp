#pragma once
// Small statistics toolkit: moments, correlation, ordinary least squares,
// Mann-Kendall trend test, and bootstrap resampling for uplift estimates.

#include <vector>

#include "brec/rng.hpp"

namespace brec::stats {

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);  // sample variance (n-1)
double stdev(const std::vector<double>& x);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;  // 0 when n < 3
    double r2 = 0.0;
};

// Simple linear regression y = intercept + slope * x. Requires n >= 2 and
// non-constant x.
LinFit ols(const std::vector<double>& x, const std::vector<double>& y);

double normal_cdf(double z);

struct TrendTest {
    double s = 0.0;        // Mann-Kendall S statistic
    double z = 0.0;        // normal approximation with tie correction
    double p_value = 1.0;  // two-sided
};

// Nonparametric monotone-trend test on a series. Requires n >= 3.
TrendTest mann_kendall(const std::vector<double>& y);

struct BootstrapResult {
    double estimate = 0.0;       // uplift_pct on the full samples
    double prob_positive = 0.0;  // fraction of resamples with uplift > 0
    double se = 0.0;             // stdev of resampled uplifts
};

// Percentile bootstrap over per-user totals: resamples each group with
// replacement `resamples` times and recomputes the per-capita ratio uplift.
BootstrapResult bootstrap_uplift(const std::vector<double>& treatment,
                                 const std::vector<double>& control, int resamples,
                                 RngStream& rng);

struct RatioSample {
    double num = 0.0;
    double den = 0.0;
};

// Ratio-of-sums bootstrap: resamples per-user (num, den) pairs in each group
// and recomputes 100 * ((sum t.num / sum t.den) / (sum c.num / sum c.den) - 1).
// Per-capita metrics are the den = 1 special case.
BootstrapResult bootstrap_ratio_uplift(const std::vector<RatioSample>& treatment,
                                       const std::vector<RatioSample>& control, int resamples,
                                       RngStream& rng);

}  // namespace brec::stats

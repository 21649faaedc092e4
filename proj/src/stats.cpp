#include "brec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace brec::stats {

double mean(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("variance: need at least 2 values");
    double m = mean(x), s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double stdev(const std::vector<double>& x) { return std::sqrt(variance(x)); }

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 values");
    double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw std::domain_error("pearson: constant input");
    return sxy / std::sqrt(sxx * syy);
}

LinFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("ols: length mismatch");
    size_t n = x.size();
    if (n < 2) throw std::invalid_argument("ols: need at least 2 points");
    double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::domain_error("ols: constant x");
    LinFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    if (n >= 3) f.slope_se = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
    return f;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

TrendTest mann_kendall(const std::vector<double>& y) {
    size_t n = y.size();
    if (n < 3) throw std::invalid_argument("mann_kendall: need at least 3 values");
    double s = 0.0;
    for (size_t i = 0; i + 1 < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double d = y[j] - y[i];
            s += (d > 0.0) - (d < 0.0);
        }
    // Tie correction on the variance.
    std::map<double, int> counts;
    for (double v : y) ++counts[v];
    double nn = static_cast<double>(n);
    double var = nn * (nn - 1.0) * (2.0 * nn + 5.0);
    for (const auto& [_, t] : counts)
        if (t > 1) var -= static_cast<double>(t) * (t - 1.0) * (2.0 * t + 5.0);
    var /= 18.0;
    TrendTest r;
    r.s = s;
    if (var > 0.0 && s != 0.0) r.z = (s > 0.0 ? s - 1.0 : s + 1.0) / std::sqrt(var);
    r.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(r.z)));
    return r;
}

BootstrapResult bootstrap_uplift(const std::vector<double>& treatment,
                                 const std::vector<double>& control, int resamples,
                                 RngStream& rng) {
    if (treatment.empty() || control.empty())
        throw std::invalid_argument("bootstrap_uplift: empty group");
    if (resamples < 1) throw std::invalid_argument("bootstrap_uplift: resamples must be >= 1");
    auto per_capita = [](const std::vector<double>& g) {
        double s = 0.0;
        for (double v : g) s += v;
        return s / static_cast<double>(g.size());
    };
    double c_pc = per_capita(control);
    if (c_pc <= 0.0) throw std::domain_error("bootstrap_uplift: control per-capita must be positive");
    BootstrapResult r;
    r.estimate = 100.0 * (per_capita(treatment) / c_pc - 1.0);
    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(resamples));
    int positive = 0;
    for (int b = 0; b < resamples; ++b) {
        double ts = 0.0, cs = 0.0;
        for (size_t i = 0; i < treatment.size(); ++i)
            ts += treatment[rng.uniform_int(treatment.size())];
        for (size_t i = 0; i < control.size(); ++i) cs += control[rng.uniform_int(control.size())];
        double tb = ts / static_cast<double>(treatment.size());
        double cb = cs / static_cast<double>(control.size());
        if (cb <= 0.0) {
            // Degenerate resample on count data: all-zero control. Count the
            // direction, skip the spread accumulation.
            if (tb > 0.0) ++positive;
            continue;
        }
        double u = 100.0 * (tb / cb - 1.0);
        if (u > 0.0) ++positive;
        samples.push_back(u);
    }
    r.prob_positive = static_cast<double>(positive) / static_cast<double>(resamples);
    if (samples.size() >= 2) r.se = stdev(samples);
    return r;
}

BootstrapResult bootstrap_ratio_uplift(const std::vector<RatioSample>& treatment,
                                       const std::vector<RatioSample>& control, int resamples,
                                       RngStream& rng) {
    if (treatment.empty() || control.empty())
        throw std::invalid_argument("bootstrap_ratio_uplift: empty group");
    if (resamples < 1)
        throw std::invalid_argument("bootstrap_ratio_uplift: resamples must be >= 1");
    auto ratio = [](const std::vector<RatioSample>& g) {
        double num = 0.0, den = 0.0;
        for (const RatioSample& s : g) {
            num += s.num;
            den += s.den;
        }
        if (den <= 0.0) throw std::domain_error("bootstrap_ratio_uplift: zero denominator");
        return num / den;
    };
    double c_ratio = ratio(control);
    if (c_ratio <= 0.0)
        throw std::domain_error("bootstrap_ratio_uplift: control ratio must be positive");
    BootstrapResult r;
    r.estimate = 100.0 * (ratio(treatment) / c_ratio - 1.0);
    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(resamples));
    int positive = 0;
    for (int b = 0; b < resamples; ++b) {
        double tn = 0.0, td = 0.0, cn = 0.0, cd = 0.0;
        for (size_t i = 0; i < treatment.size(); ++i) {
            const RatioSample& s = treatment[rng.uniform_int(treatment.size())];
            tn += s.num;
            td += s.den;
        }
        for (size_t i = 0; i < control.size(); ++i) {
            const RatioSample& s = control[rng.uniform_int(control.size())];
            cn += s.num;
            cd += s.den;
        }
        if (td <= 0.0 || cd <= 0.0 || cn <= 0.0) {
            // Degenerate resample on sparse count data: keep the direction,
            // skip the spread accumulation.
            if (td > 0.0 && tn > 0.0) ++positive;
            continue;
        }
        double u = 100.0 * ((tn / td) / (cn / cd) - 1.0);
        if (u > 0.0) ++positive;
        samples.push_back(u);
    }
    r.prob_positive = static_cast<double>(positive) / static_cast<double>(resamples);
    if (samples.size() >= 2) r.se = stdev(samples);
    return r;
}

}  // namespace brec::stats

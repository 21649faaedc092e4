#pragma once
// Counter-style deterministic RNG streams.
//
// Every logical task derives its own stream from (master seed, purpose tag,
// index) via splitmix64 mixing, so per-user / per-day sampling is
// order-independent and reproducible across platforms. No std::*_distribution
// is used anywhere; draw algorithms are fixed here.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace brec {

constexpr uint64_t kSplitMixGamma = 0x9e3779b97f4a7c15ULL;

constexpr uint64_t splitmix64_hash(uint64_t key, uint64_t data) noexcept {
    uint64_t z = key ^ data;
    z += kSplitMixGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr uint64_t fnv1a64(const char* s) noexcept {
    uint64_t h = 14695981039346656037ULL;
    for (; *s; ++s) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(*s));
        h *= 1099511628211ULL;
    }
    return h;
}

class RngStream {
public:
    RngStream() : state_(0) {}
    explicit RngStream(uint64_t state) : state_(state) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += kSplitMixGamma);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
    uint64_t uniform_int(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Box-Muller, cosine branch only; consumes two uniforms per call.
    double gaussian(double mean = 0.0, double sd = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + z * sd;
    }

    double exponential(double rate = 1.0) {
        double u = uniform01();
        return -std::log1p(-u) / rate;
    }

    // Marsaglia-Tsang for shape >= 1; boosted for shape < 1.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform01();
            if (u < 1e-300) u = 1e-300;
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x = gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform01();
            if (u < 1e-300) u = 1e-300;
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        double s = x + y;
        return s > 0.0 ? x / s : 0.5;
    }

    // Exact Poisson draw: Knuth's product method for small lambda, gamma
    // interarrival reduction (with a binomial tail) for large lambda.
    int poisson(double lambda) {
        if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be >= 0");
        int total = 0;
        while (lambda > 30.0) {
            int m = static_cast<int>(std::floor(lambda * 0.875));
            double g = gamma(static_cast<double>(m));
            if (g <= lambda) {
                total += m;
                lambda -= g;
            } else {
                // The m-th arrival overshot lambda; the count inside is
                // Binomial(m - 1, lambda / g) by uniform order statistics.
                int k = 0;
                for (int i = 0; i + 1 < m; ++i)
                    if (uniform01() < lambda / g) ++k;
                return total + k;
            }
        }
        double limit = std::exp(-lambda);
        double prod = 1.0;
        int k = 0;
        do {
            ++k;
            prod *= uniform01();
        } while (prod > limit);
        return total + k - 1;
    }

    std::vector<double> dirichlet(size_t n, double alpha) {
        std::vector<double> w(n);
        double sum = 0.0;
        for (auto& x : w) {
            x = gamma(alpha);
            sum += x;
        }
        if (sum <= 0.0) {
            for (auto& x : w) x = 1.0 / static_cast<double>(n);
            return w;
        }
        for (auto& x : w) x /= sum;
        return w;
    }

    std::vector<double> dirichlet(const std::vector<double>& alphas) {
        if (alphas.empty()) throw std::invalid_argument("dirichlet: empty alpha vector");
        std::vector<double> w(alphas.size());
        double sum = 0.0;
        for (size_t i = 0; i < w.size(); ++i) {
            w[i] = gamma(alphas[i]);
            sum += w[i];
        }
        if (sum <= 0.0) {
            double total = 0.0;
            for (double a : alphas) total += a;
            for (size_t i = 0; i < w.size(); ++i) w[i] = alphas[i] / total;
            return w;
        }
        for (auto& x : w) x /= sum;
        return w;
    }

private:
    uint64_t state_;
};

// Deterministic, collision-resistant substream derivation. Identical
// (seed, purpose, index) always yields an identical draw sequence.
inline RngStream derive_stream(uint64_t master_seed, const std::string& purpose, uint64_t index) {
    uint64_t h = splitmix64_hash(master_seed, fnv1a64(purpose.c_str()));
    return RngStream(splitmix64_hash(h, index));
}

// Two-index variant for (purpose, user, day) style keys.
inline RngStream derive_stream(uint64_t master_seed, const std::string& purpose, uint64_t i,
                               uint64_t j) {
    uint64_t h = splitmix64_hash(master_seed, fnv1a64(purpose.c_str()));
    return RngStream(splitmix64_hash(splitmix64_hash(h, i), j));
}

}  // namespace brec

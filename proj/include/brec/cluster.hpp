#pragma once
// Spherical k-means over predicted preference directions: the discretization
// step between regression and integer bundle construction.

#include <cstdint>
#include <vector>

#include "brec/core.hpp"

namespace brec {

struct ClusterModel {
    std::vector<Vec> centroids;        // unit L2 norm, nonnegative
    int k = 0;
    double inertia = 0.0;              // final sum of cos_dist to assigned centroid
    uint64_t seed = 0;
    int iterations_run = 0;
    std::vector<double> inertia_trace;  // objective after each assignment pass

    void validate() const;
};

// Lloyd iterations on L2-normalized inputs with k-means++ initialization.
// Centroid update = re-normalized mean; empty clusters are re-seeded with the
// point farthest from its current centroid. Stops when every centroid moves
// less than `tol` (L2) or after `max_iters` passes.
// Throws std::domain_error when the input has fewer than k distinct
// directions, std::invalid_argument on bad parameters.
ClusterModel fit_kmeans(const std::vector<Vec>& predictions, int k, uint64_t seed,
                        int max_iters = 100, double tol = 1e-9);

struct Assignment {
    int cluster = -1;
    double d_c = 0.0;  // cos_dist(prediction, nearest centroid)
};

// Nearest-centroid rule under cosine distance; ties break to the lowest
// index. Throws std::domain_error on a zero prediction.
Assignment assign(const ClusterModel& model, const Vec& prediction);

}  // namespace brec

#pragma once
// Step 1: multi-output preference regression under cosine loss.
// Two models share the predict contract (nonnegative, nonzero, deterministic):
// an attentive tabular regressor trained by mini-batch gradient descent, and a
// closed-form ridge-linear baseline.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "brec/core.hpp"

namespace brec {

struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;  // row-major

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

struct LrSchedule {
    double initial = 0.3;
    double decay = 0.97;  // multiplicative, per epoch
};

struct AttentiveRegressorConfig {
    int steps = 2;
    int hidden_dim = 16;
    double relax_gamma = 1.5;     // feature-reuse relaxation; >= 1
    double sparsity_coeff = 1e-3;  // mask-entropy regularizer weight
    LrSchedule lr;
    int epochs = 60;
    int batch_size = 64;
    uint64_t seed = 0;
    double holdout_fraction = 0.2;
    int restarts = 3;  // independent inits; best kept by final train cosine

    void validate() const;
};

struct TrainingReport {
    std::vector<double> loss_trace;    // best-so-far (checkpointed): non-increasing
    std::vector<double> epoch_losses;  // raw full-train loss per epoch
    double final_train_cos = 0.0;      // mean cos_dist on training rows
    double holdout_cos = 0.0;          // d_p estimate on the held-out split
    int train_rows = 0;
    int holdout_rows = 0;
    int selected_restart = 0;              // which init won (by train cosine)
    std::vector<double> restart_train_cos;  // per-restart final train cosine
};

// Simplified attentive tabular regressor: S sequential steps. Step s computes
// an instance-wise feature mask m^s = softmax(Wm x + bm + ln(prior + eps)),
// feeds m^s*x through a tanh layer to a per-step output head, and damps the
// prior for reused features: prior <- prior * (relax_gamma - m^s). Step
// outputs are summed and passed through softplus, so predictions are strictly
// positive. Loss = mean cos_dist(pred, label) + sparsity_coeff * mean step
// mask entropy.
struct AttentiveRegressor {
    struct StepWeights {
        Mat w_mask;   // F x F
        Vec b_mask;   // F
        Mat w_hidden;  // H x F
        Vec b_hidden;  // H
        Mat w_out;    // D x H
        Vec b_out;    // D
    };

    AttentiveRegressorConfig config;
    int feature_dim = 0;
    int output_dim = 0;
    std::vector<StepWeights> steps;
    TrainingReport report;

    // Freshly initialized model with small deterministic weights.
    static AttentiveRegressor make(int feature_dim, int output_dim,
                                   const AttentiveRegressorConfig& config);

    Vec predict(const Vec& features) const;  // strictly positive, deterministic
    std::vector<Vec> masks(const Vec& features) const;  // per-step attention masks

    double sample_loss(const Vec& features, const Vec& label) const;
    // Adds this sample's loss gradient into `grad` (layout of flatten()).
    void accumulate_grad(const Vec& features, const Vec& label, std::vector<double>& grad) const;

    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& params);
    size_t param_count() const;
};

// Trains on FeatureRows (features length F, labels nonnegative nonzero).
// Runs config.restarts independent inits over one shared train/holdout split
// and keeps the model with the lowest final train cosine (the cosine loss
// surface has a flat high-error basin that catches roughly a quarter of
// random inits; train loss separates the basins cleanly, so selection never
// looks at the holdout). Throws std::invalid_argument on malformed data,
// std::runtime_error on divergence (NaN loss), with the epoch in the message.
AttentiveRegressor train(const std::vector<FeatureRow>& dataset,
                         const AttentiveRegressorConfig& config);

// Central finite differences of the full sample loss against the analytic
// gradient; returns max over parameters of |ga-gn| / max(1e-6, |ga|+|gn|).
double grad_check(const AttentiveRegressor& model, const FeatureRow& sample, double epsilon);

struct FeatureImportance {
    Vec weights;  // simplex over features

    void validate() const;
};

// Mean attention mask across steps and samples, normalized.
FeatureImportance feature_importance(const AttentiveRegressor& model,
                                     const std::vector<FeatureRow>& sample);

// Ridge-linear baseline fitted in closed form to unit-normalized labels.
// predict clamps each output at 1e-9 to honor the nonnegative/nonzero
// contract.
struct LinearModel {
    Mat w;  // D x F
    Vec b;  // D
    double ridge_lambda = 0.0;
    double holdout_cos = 0.0;
    double final_train_cos = 0.0;

    Vec predict(const Vec& features) const;
    Vec predict_raw(const Vec& features) const;  // unclamped affine output
};

LinearModel train_baseline(const std::vector<FeatureRow>& dataset, double ridge_lambda,
                           double holdout_fraction = 0.2, uint64_t seed = 0);

// Finite-difference check of the ridge objective's analytic gradient at the
// fitted solution; returns max relative error (stationarity makes it tiny).
double baseline_grad_check(const LinearModel& model, const std::vector<FeatureRow>& dataset,
                           double epsilon);

// Mean cos_dist(label, predictor(features)) over the rows; throws on empty
// input or zero labels.
double mean_cos_distance(const std::function<Vec(const Vec&)>& predictor,
                         const std::vector<FeatureRow>& rows);

// Averages each user's daily feature rows over their last min(N, days_active)
// active days. Training rows require days_active >= min_active_days and a
// nonzero label; every user still gets a row in `all` (test-time rule).
struct AggregatedDataset {
    std::vector<FeatureRow> training;
    std::vector<FeatureRow> all;
    int excluded_zero_label = 0;  // would-be training rows dropped for zero/missing labels
};

struct DailyFeatureRow {
    int64_t user_id = 0;
    int day = 0;
    Vec features;
};

AggregatedDataset aggregate_features(const std::vector<DailyFeatureRow>& raw, int n_days,
                                     int min_active_days,
                                     const std::map<int64_t, PreferenceVector>& labels = {});

}  // namespace brec

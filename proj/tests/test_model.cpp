#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "brec/geometry.hpp"
#include "brec/model.hpp"
#include "brec/rng.hpp"

using namespace brec;

namespace {

FeatureRow random_row(int f, int d, RngStream& rng) {
    FeatureRow r;
    r.features.resize(static_cast<size_t>(f));
    for (auto& x : r.features) x = rng.uniform(-1.0, 1.0);
    r.label.resize(static_cast<size_t>(d));
    for (auto& x : r.label) x = rng.uniform01() + 0.05;
    return r;
}

AttentiveRegressorConfig small_config(uint64_t seed, int steps, int hidden) {
    AttentiveRegressorConfig c;
    c.steps = steps;
    c.hidden_dim = hidden;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences") {
    auto rng = derive_stream(42, "gradcheck", 0);
    for (int trial = 0; trial < 8; ++trial) {
        int f = 2 + static_cast<int>(rng.uniform_int(5));
        int d = 2 + static_cast<int>(rng.uniform_int(3));
        int s = 1 + static_cast<int>(rng.uniform_int(3));
        int h = 2 + static_cast<int>(rng.uniform_int(4));
        auto cfg = small_config(100 + static_cast<uint64_t>(trial), s, h);
        cfg.sparsity_coeff = (trial % 2 == 0) ? 1e-2 : 0.0;
        cfg.relax_gamma = (trial % 3 == 0) ? 1.0 : 1.5;
        auto m = AttentiveRegressor::make(f, d, cfg);
        // Move weights away from the tiny init so the test is not trivially flat.
        auto params = m.flatten();
        for (auto& p : params) p += rng.uniform(-0.4, 0.4);
        m.unflatten(params);
        auto row = random_row(f, d, rng);
        CHECK(grad_check(m, row, 1e-5) < 1e-4);
    }
    auto m = AttentiveRegressor::make(4, 3, small_config(1, 2, 4));
    auto row = random_row(4, 3, rng);
    CHECK_THROWS_AS(grad_check(m, row, 1e-2), std::invalid_argument);
}

TEST_CASE("gradient vanishes at an exact optimum") {
    // Model built so that the prediction is exactly parallel to the label:
    // all weights zero except the output bias (softplus inverse of the label
    // direction). Symmetric masks make the sparsity gradient vanish too.
    AttentiveRegressorConfig cfg = small_config(9, 2, 4);
    cfg.sparsity_coeff = 0.01;
    auto m = AttentiveRegressor::make(3, 2, cfg);
    std::vector<double> zero(m.param_count(), 0.0);
    m.unflatten(zero);
    Vec label{3.0, 4.0};
    Vec dir = to_unit(label);
    for (auto& step : m.steps)
        for (size_t i = 0; i < step.b_out.size(); ++i)
            step.b_out[i] = std::log(std::exp(dir[i]) - 1.0) / cfg.steps;

    FeatureRow row;
    row.features = {0.3, -0.2, 0.9};
    row.label = label;
    Vec pred = m.predict(row.features);
    CHECK(cos_dist(pred, label) == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<double> g(m.param_count(), 0.0);
    m.accumulate_grad(row.features, row.label, g);
    double norm2 = 0.0;
    for (double v : g) norm2 += v * v;
    CHECK(std::sqrt(norm2) < 1e-6);
}

TEST_CASE("masks are simplex vectors and predictions are positive") {
    auto rng = derive_stream(7, "masks", 0);
    auto m = AttentiveRegressor::make(6, 4, small_config(3, 3, 5));
    for (int trial = 0; trial < 50; ++trial) {
        auto row = random_row(6, 4, rng);
        auto masks = m.masks(row.features);
        REQUIRE(masks.size() == 3);
        for (const auto& mask : masks) {
            double sum = 0.0;
            for (double v : mask) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
        auto pred = m.predict(row.features);
        for (double v : pred) CHECK(v > 0.0);
        CHECK(m.predict(row.features) == pred);  // determinism
    }
    CHECK_THROWS_AS(m.predict(Vec{1.0, 2.0}), std::domain_error);
}

TEST_CASE("constant-direction dataset is fit nearly perfectly") {
    auto rng = derive_stream(21, "constdir", 0);
    std::vector<FeatureRow> data;
    Vec dir{1.0, 2.0, 2.0};
    for (int i = 0; i < 200; ++i) {
        FeatureRow r;
        r.features = {rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()};
        double k = 0.5 + rng.uniform01();
        r.label = dir;
        for (auto& v : r.label) v *= k;
        data.push_back(r);
    }
    auto cfg = small_config(5, 2, 8);
    cfg.epochs = 80;
    cfg.lr.initial = 0.5;
    cfg.holdout_fraction = 0.2;
    auto m = train(data, cfg);
    CHECK(m.report.final_train_cos <= 0.01);
    CHECK(m.report.holdout_cos <= 0.01);

    // Checkpointed loss trace is non-increasing.
    for (size_t i = 1; i < m.report.loss_trace.size(); ++i)
        CHECK(m.report.loss_trace[i] <= m.report.loss_trace[i - 1]);
    CHECK(m.report.train_rows == 160);
    CHECK(m.report.holdout_rows == 40);
}

TEST_CASE("loss is invariant to label scale and training is deterministic") {
    auto rng = derive_stream(77, "scaleinv", 0);
    std::vector<FeatureRow> a, b;
    for (int i = 0; i < 120; ++i) {
        auto row = random_row(5, 3, rng);
        a.push_back(row);
        for (auto& v : row.label) v *= 37.5;
        b.push_back(row);
    }
    auto cfg = small_config(11, 2, 6);
    cfg.epochs = 10;
    auto ma = train(a, cfg);
    auto mb = train(b, cfg);
    REQUIRE(ma.report.epoch_losses.size() == mb.report.epoch_losses.size());
    for (size_t i = 0; i < ma.report.epoch_losses.size(); ++i)
        CHECK(ma.report.epoch_losses[i] == doctest::Approx(mb.report.epoch_losses[i]).epsilon(1e-12));
    auto ma2 = train(a, cfg);
    CHECK(ma.flatten() == ma2.flatten());  // bit-identical rerun
}

TEST_CASE("non-finite loss aborts training with a diagnostic") {
    auto rng = derive_stream(3, "diverge", 0);
    std::vector<FeatureRow> data;
    for (int i = 0; i < 40; ++i) data.push_back(random_row(4, 3, rng));
    // Pathological features blow up the forward pass immediately; the NaN
    // guard must turn that into a training error rather than garbage weights.
    data[5].features.assign(4, std::numeric_limits<double>::infinity());
    auto cfg = small_config(2, 2, 4);
    cfg.epochs = 5;
    CHECK_THROWS_AS(train(data, cfg), std::runtime_error);
}

TEST_CASE("train validates inputs") {
    auto cfg = small_config(0, 2, 4);
    CHECK_THROWS_AS(train({}, cfg), std::invalid_argument);
    FeatureRow zero_label;
    zero_label.features = {1.0, 2.0};
    zero_label.label = {0.0, 0.0};
    CHECK_THROWS_AS(train({zero_label}, cfg), std::domain_error);
    auto bad = cfg;
    bad.relax_gamma = 0.5;
    CHECK_THROWS_AS(train({zero_label}, bad), std::invalid_argument);
}

TEST_CASE("feature importance: simplex, symmetry, and informativeness") {
    auto rng = derive_stream(15, "fi", 0);
    // Untrained model with tiny weights -> near-uniform importance.
    auto m0 = AttentiveRegressor::make(5, 3, small_config(8, 3, 6));
    std::vector<FeatureRow> sample;
    for (int i = 0; i < 50; ++i) sample.push_back(random_row(5, 3, rng));
    auto fi0 = feature_importance(m0, sample);
    CHECK_NOTHROW(fi0.validate());
    for (double w : fi0.weights) CHECK(std::fabs(w - 0.2) < 0.1);

    // Dataset where only feature 0 carries signal.
    std::vector<FeatureRow> informative;
    for (int i = 0; i < 400; ++i) {
        double s = 0.2 + 0.8 * rng.uniform01();
        FeatureRow r;
        r.features = {s, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        r.label = {s, 1.05 - s};
        informative.push_back(r);
    }
    // One step: the prior chain otherwise forces later steps onto fresh
    // features by design, capping any single feature's mean mass near 0.5.
    auto cfg = small_config(19, 1, 8);
    cfg.epochs = 250;
    cfg.lr.initial = 0.3;
    cfg.lr.decay = 0.99;
    cfg.sparsity_coeff = 5e-2;
    auto m = train(informative, cfg);
    auto fi = feature_importance(m, informative);
    CHECK(fi.weights[0] >= 0.5);
}

TEST_CASE("ridge baseline recovers linear structure") {
    auto rng = derive_stream(23, "ridge", 0);
    // Labels are a fixed linear map of features (plus tiny noise): the
    // baseline must nail this.
    Mat truth(3, 4);
    for (auto& v : truth.a) v = rng.uniform(0.1, 1.0);
    std::vector<FeatureRow> data;
    for (int i = 0; i < 300; ++i) {
        FeatureRow r;
        r.features = {rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()};
        r.label.assign(3, 0.0);
        for (int k = 0; k < 3; ++k) {
            for (int j = 0; j < 4; ++j) r.label[static_cast<size_t>(k)] += truth(k, j) * r.features[static_cast<size_t>(j)];
            r.label[static_cast<size_t>(k)] += 0.001 * rng.uniform01();
        }
        data.push_back(r);
    }
    auto model = train_baseline(data, 1e-6, 0.2, 0);
    CHECK(model.holdout_cos <= 0.05);
    CHECK(model.final_train_cos <= 0.05);

    // Deterministic: same call, same weights.
    auto model2 = train_baseline(data, 1e-6, 0.2, 0);
    CHECK(model.w.a == model2.w.a);
    CHECK(model.b == model2.b);

    // Predictions are nonnegative and nonzero even for adversarial inputs.
    Vec far{-100.0, -100.0, -100.0, -100.0};
    auto p = model.predict(far);
    for (double v : p) CHECK(v >= 1e-9);

    // Analytic ridge gradient agrees with finite differences.
    CHECK(baseline_grad_check(model, data, 1e-5) < 1e-6);
}

TEST_CASE("aggregate_features follows the windowing rules") {
    std::vector<DailyFeatureRow> raw;
    // User 1: 45 active days, features = day number (detectable averaging window).
    for (int day = 1; day <= 45; ++day)
        raw.push_back({1, day, Vec{static_cast<double>(day), 1.0}});
    // User 2: 7 active days.
    for (int day = 3; day <= 9; ++day) raw.push_back({2, day, Vec{10.0, 2.0}});
    // User 3: 30 active days but an all-zero label.
    for (int day = 1; day <= 30; ++day) raw.push_back({3, day, Vec{5.0, 5.0}});

    std::map<int64_t, PreferenceVector> labels{
        {1, {1.0, 0.0}}, {2, {0.5, 0.5}}, {3, {0.0, 0.0}}};
    auto ds = aggregate_features(raw, 30, 30, labels);

    REQUIRE(ds.all.size() == 3);
    REQUIRE(ds.training.size() == 1);
    CHECK(ds.excluded_zero_label == 1);

    // User 1 trains on the mean of days 16..45 -> mean day index 30.5.
    const auto& u1 = ds.training[0];
    CHECK(u1.user_id == 1);
    CHECK(u1.agg_days == 30);
    CHECK(u1.features[0] == doctest::Approx(30.5));
    CHECK(u1.features[1] == doctest::Approx(1.0));

    // User 2 appears in `all` with agg_days = 7 and constant features kept.
    const auto* u2 = &ds.all[1];
    CHECK(u2->user_id == 2);
    CHECK(u2->agg_days == 7);
    CHECK(u2->features[0] == doctest::Approx(10.0));

    // Duplicate (user, day) rows are rejected.
    raw.push_back({2, 5, Vec{1.0, 1.0}});
    CHECK_THROWS_AS(aggregate_features(raw, 30, 30, labels), std::invalid_argument);
}

#pragma once
// Synthetic world: latent user preferences drawn from archetype mixtures,
// daily activity, a sigmoid click/take behavior model with a decaying novelty
// multiplier, organic purchases (training labels), the offline dataset
// generator, and the serving feedback loop. This module is the ground-truth
// oracle the rest of the pipeline is evaluated against.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "brec/bundleize.hpp"
#include "brec/cluster.hpp"
#include "brec/core.hpp"
#include "brec/geometry.hpp"
#include "brec/model.hpp"
#include "brec/policy.hpp"
#include "brec/rng.hpp"

namespace brec {

struct WorldConfig {
    int n_users = 20000;
    std::vector<Vec> archetype_directions;  // L unit D-vectors, pairwise angular > 0.2
    std::vector<double> archetype_popularity;  // simplex; empty = uniform segments
    double mixing_alpha = 0.04;             // Dirichlet concentration of archetype weights
    double background_mix = 0.02;           // uniform-direction component in every latent
    int feature_dim = 16;                   // F >= D + 3; extras are pure noise features
    double feature_noise_sd = 1.0;          // daily noise; averaging over N days pays off
    double activity_alpha = 6.0;            // activity_rate ~ Beta(alpha, beta)
    double activity_beta = 2.0;
    double spend_mu = 0.8;                  // spend_scale ~ LogNormal(mu, sigma)
    double spend_sigma = 0.5;
    double organic_scale = 8.0;             // Poisson intensity of organic purchases
    double take_intercept = -3.0;           // take prob = sigmoid(b + a * cos_sim) * novelty
    double take_slope = 2.4;
    double click_intercept = -1.8;          // click prob likewise, floored at take prob
    double click_slope = 2.0;
    double novelty_amplitude = 0.6;         // A >= 0
    double novelty_tau = 5.0;               // days; m(t) = 1 + A exp(-(t - t_first)/tau)
    double qty_noise_sd = 0.25;             // multiplicative noise on taken quantities
    double qty_pref_tilt = 0.5;             // latent-preference tilt on taken quantities
    int horizon_days = 28;
    int retrain_every = 7;
    uint64_t seed = 1;

    int dim() const;  // D, from the archetype directions
    void validate() const;

    // Four disjoint-block archetypes over a 13-item catalog.
    static WorldConfig defaults(uint64_t seed = 1);
};

struct Population {
    std::vector<UserRecord> users;           // user_id == index
    std::vector<PreferenceVector> latents;   // unit ground-truth directions
};

// Deterministic per (config.seed, user index): archetype mixture weights,
// activity rate, spend scale, and the normalized latent direction.
Population gen_population(const WorldConfig& config);

// Bernoulli(activity_rate) draw from the per-(user, day) stream.
bool is_active(const WorldConfig& config, const UserRecord& user, int day);

// Fixed nonlinear feature map + Gaussian noise. Layout: D squared-latent
// spend features, activity_rate, spend_scale, activity*spend interaction,
// then pure-noise extras up to feature_dim.
Vec gen_features(const WorldConfig& config, const UserRecord& user, const Vec& latent, int day);

// Organic (not recommendation-driven) purchase quantities for one day:
// independent Poisson draws with intensity organic_scale*spend*latent_j.
std::vector<int> organic_purchase(const WorldConfig& config, const UserRecord& user,
                                  const Vec& latent, int day);

struct BehaviorModel {
    double take_intercept = -3.0;
    double take_slope = 2.4;
    double click_intercept = -1.8;
    double click_slope = 2.0;

    static BehaviorModel from(const WorldConfig& config);
    double take_prob(double cos_sim_value, double novelty_multiplier) const;   // in [0, 1]
    double click_prob(double cos_sim_value, double novelty_multiplier) const;  // >= take_prob
};

// Per (group, bundle) first-exposure tracker. multiplier() records the first
// exposure day and returns m(t) = 1 + A exp(-(t - t_first)/tau); bundles
// marked pre-exposed (incumbent content) stay pinned at 1.
class NoveltyState {
public:
    NoveltyState(double amplitude, double tau);

    void mark_pre_exposed(int group, const std::string& bundle_id);
    double multiplier(int group, const std::string& bundle_id, int day);
    double peek(int group, const std::string& bundle_id, int day) const;  // no recording

private:
    double amplitude_;
    double tau_;
    std::map<std::pair<int, std::string>, int> first_day_;
    std::set<std::pair<int, std::string>> pre_exposed_;
};

struct ServedImpression {
    int64_t user_id = 0;
    int group = 0;  // novelty key; experiment group index
    const Bundle* bundle = nullptr;
    PolicyTag tag = PolicyTag::model;
};

struct PurchaseRecord {
    int day = 0;
    int64_t user_id = 0;
    std::vector<int> quantities;  // length D
};

struct DayResult {
    std::vector<EventRecord> events;       // sorted by user_id
    std::vector<PurchaseRecord> purchases; // takes only
};

// One impression per served user: click/take sampled from a single uniform
// against nested thresholds (take prob <= click prob), take quantities are
// the bundle volumes tilted toward the user's latent preference with
// multiplicative log-normal noise.
DayResult step_day(const WorldConfig& config, const Population& pop,
                   std::vector<ServedImpression> serving, int day, NoveltyState& novelty);

struct OfflineDataset {
    AggregatedDataset agg;                         // training + all (test-rule) rows
    std::vector<DailyFeatureRow> daily;            // raw active-day feature rows
    std::map<int64_t, PreferenceVector> labels;    // next-active-day organic purchases
    std::map<int64_t, int> label_day;              // the held-out day per labeled user
};

// Simulates history_days of organic activity. Each user's last active day is
// held out as the label day (organic purchase quantities); earlier active
// days become daily feature rows, aggregated over the trailing n_agg_days.
OfflineDataset gen_offline_dataset(const WorldConfig& config, const Population& pop,
                                   int history_days, int n_agg_days, int min_active_days);

struct StackOptions {
    int history_days = 60;
    int n_agg_days = 30;
    int min_active_days = 30;
    int k_clusters = 8;
    std::vector<double> scale_grid;  // empty -> default_scale_grid()
    AttentiveRegressorConfig model;
    double ridge_lambda = 1e-3;
    bool train_baseline_model = true;
};

// Everything needed to serve: population, offline dataset, trained models,
// clusters, bundle pool, per-user predictions, heuristic/fallback choices.
struct ServingStack {
    int history_days = 0;  // offline days preceding the serving clock
    Population pop;
    OfflineDataset data;
    AttentiveRegressor model;
    LinearModel baseline;
    ClusterModel clusters;
    PoolBuild pool_build;
    ItemCatalog catalog;
    std::map<int64_t, PreferenceVector> predictions;           // attentive
    std::map<int64_t, PreferenceVector> baseline_predictions;  // ridge-linear
    std::string heuristic_id;   // pool bundle nearest the mean latent direction
    std::string fallback_id;    // same bundle; serves users without predictions

    const BundlePool& pool() const { return pool_build.pool; }
};

ServingStack build_stack(const WorldConfig& config, const StackOptions& options);

struct FeedbackLoopOptions {
    StackOptions stack;
    int loop_min_active_days = 5;   // aggregation floor for in-loop retrains
    bool retrain = true;
};

struct FeedbackLoopResult {
    std::vector<MetricReport> daily;   // rd = take-weighted dispersion around the day's mean take
    std::vector<int> retrain_days;
    std::vector<int> pool_sizes;       // distinct bundles in the serving pool per day
    EventLog log;
    int fallback_served = 0;           // impressions that fell through to the fallback bundle
    int users_without_prediction = 0;  // at loop start
};

// Serves the model recommendation (T_0) to every active user; every
// retrain_every days the model is retrained on accumulated take-derived
// labels only, clusters and pool are rebuilt, and serving continues.
FeedbackLoopResult run_feedback_loop(const WorldConfig& config, int horizon_days,
                                     int retrain_every, const FeedbackLoopOptions& options);

// Pool bundle nearest a reference direction: the stand-in for the manually
// designed heuristic bundle.
std::string choose_heuristic_bundle(const BundlePool& pool, const Vec& reference);

// Take-weighted mean cos_dist of the day's taken bundles around their own
// mean taken direction (0 when every take is the same bundle). Empty -> nullopt.
std::optional<double> take_dispersion(const std::vector<EventRecord>& day_events,
                                      const BundlePool& pool);

// Daily metric report where rd is the take-dispersion above.
MetricReport day_metrics(const std::vector<EventRecord>& day_events, int day,
                         const BundlePool& pool);

}  // namespace brec

#include "brec/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace brec {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

uint64_t sub_seed(uint64_t seed, const char* purpose, uint64_t index) {
    return splitmix64_hash(splitmix64_hash(seed, fnv1a64(purpose)), index);
}

}  // namespace

int WorldConfig::dim() const {
    return archetype_directions.empty() ? 0 : static_cast<int>(archetype_directions[0].size());
}

void WorldConfig::validate() const {
    if (n_users < 1) throw std::invalid_argument("WorldConfig: n_users must be >= 1");
    if (archetype_directions.empty())
        throw std::invalid_argument("WorldConfig: archetype_directions must be nonempty");
    const int d = dim();
    if (d < 2) throw std::invalid_argument("WorldConfig: item dimension must be >= 2");
    for (size_t l = 0; l < archetype_directions.size(); ++l) {
        const Vec& a = archetype_directions[l];
        if (static_cast<int>(a.size()) != d)
            throw std::invalid_argument("WorldConfig: archetype dimensions are inconsistent");
        for (double x : a)
            if (x < 0.0) throw std::invalid_argument("WorldConfig: archetype entries must be >= 0");
        if (std::abs(norm(a) - 1.0) > 1e-9)
            throw std::invalid_argument("WorldConfig: archetype_directions must be unit-norm");
    }
    for (size_t i = 0; i < archetype_directions.size(); ++i)
        for (size_t j = i + 1; j < archetype_directions.size(); ++j)
            if (angular_dist(archetype_directions[i], archetype_directions[j]) <= 0.2)
                throw std::invalid_argument(
                    "WorldConfig: archetype pairwise angular distance must exceed 0.2");
    if (mixing_alpha <= 0.0) throw std::invalid_argument("WorldConfig: mixing_alpha must be > 0");
    if (!archetype_popularity.empty()) {
        if (archetype_popularity.size() != archetype_directions.size())
            throw std::invalid_argument(
                "WorldConfig: archetype_popularity must have one entry per archetype");
        double sum = 0.0;
        for (double p : archetype_popularity) {
            if (p <= 0.0)
                throw std::invalid_argument("WorldConfig: archetype_popularity entries must be > 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("WorldConfig: archetype_popularity must sum to 1");
    }
    if (background_mix < 0.0 || background_mix >= 1.0)
        throw std::invalid_argument("WorldConfig: background_mix must be in [0, 1)");
    if (feature_dim < d + 3)
        throw std::invalid_argument("WorldConfig: feature_dim must be >= item dim + 3");
    if (feature_noise_sd < 0.0)
        throw std::invalid_argument("WorldConfig: feature_noise_sd must be >= 0");
    if (activity_alpha <= 0.0 || activity_beta <= 0.0)
        throw std::invalid_argument("WorldConfig: activity beta params must be > 0");
    if (spend_sigma < 0.0) throw std::invalid_argument("WorldConfig: spend_sigma must be >= 0");
    if (organic_scale <= 0.0) throw std::invalid_argument("WorldConfig: organic_scale must be > 0");
    if (novelty_amplitude < 0.0)
        throw std::invalid_argument("WorldConfig: novelty_amplitude must be >= 0");
    if (novelty_tau <= 0.0) throw std::invalid_argument("WorldConfig: novelty_tau must be > 0");
    if (qty_noise_sd < 0.0) throw std::invalid_argument("WorldConfig: qty_noise_sd must be >= 0");
    if (qty_pref_tilt < 0.0 || qty_pref_tilt > 2.0)
        throw std::invalid_argument("WorldConfig: qty_pref_tilt must be in [0, 2]");
    if (horizon_days < 1) throw std::invalid_argument("WorldConfig: horizon_days must be >= 1");
    if (retrain_every < 1) throw std::invalid_argument("WorldConfig: retrain_every must be >= 1");
}

WorldConfig WorldConfig::defaults(uint64_t seed) {
    WorldConfig cfg;
    cfg.seed = seed;
    auto block = [](std::initializer_list<std::pair<int, double>> entries) {
        Vec v(13, 0.0);
        for (auto [i, x] : entries) v[static_cast<size_t>(i)] = x;
        return to_unit(v);
    };
    cfg.archetype_directions = {
        block({{0, 5.0}, {1, 4.0}, {2, 2.0}, {3, 1.0}}),
        block({{4, 4.0}, {5, 3.0}, {6, 1.0}}),
        block({{7, 1.0}, {8, 3.0}, {9, 5.0}}),
        block({{10, 2.0}, {11, 4.0}, {12, 2.0}}),
    };
    // Skewed segment sizes: the incumbent heuristic bundle targets the
    // majority segment, which is what gives it its edge over random picks.
    cfg.archetype_popularity = {0.5, 0.25, 0.15, 0.1};
    cfg.feature_dim = cfg.dim() + 3;
    return cfg;
}

Population gen_population(const WorldConfig& config) {
    config.validate();
    const int d = config.dim();
    const size_t n_arch = config.archetype_directions.size();
    const Vec background = uniform_direction(d);
    std::vector<double> alphas;  // popularity-weighted Dirichlet, same total mass
    if (!config.archetype_popularity.empty())
        for (double p : config.archetype_popularity)
            alphas.push_back(config.mixing_alpha * static_cast<double>(n_arch) * p);

    Population pop;
    pop.users.resize(static_cast<size_t>(config.n_users));
    pop.latents.resize(static_cast<size_t>(config.n_users));
    for (int u = 0; u < config.n_users; ++u) {
        RngStream rng = derive_stream(config.seed, "pop", static_cast<uint64_t>(u));
        UserRecord& user = pop.users[static_cast<size_t>(u)];
        user.user_id = u;
        user.archetype_weights = alphas.empty() ? rng.dirichlet(n_arch, config.mixing_alpha)
                                                : rng.dirichlet(alphas);
        user.activity_rate = rng.beta(config.activity_alpha, config.activity_beta);
        user.spend_scale = std::exp(rng.gaussian(config.spend_mu, config.spend_sigma));
        Vec latent(static_cast<size_t>(d), 0.0);
        for (size_t l = 0; l < n_arch; ++l)
            for (int j = 0; j < d; ++j)
                latent[static_cast<size_t>(j)] +=
                    user.archetype_weights[l] * config.archetype_directions[l][static_cast<size_t>(j)];
        for (int j = 0; j < d; ++j)
            latent[static_cast<size_t>(j)] += config.background_mix * background[static_cast<size_t>(j)];
        pop.latents[static_cast<size_t>(u)] = to_unit(latent);
    }
    return pop;
}

bool is_active(const WorldConfig& config, const UserRecord& user, int day) {
    RngStream rng = derive_stream(config.seed, "activity", static_cast<uint64_t>(user.user_id),
                                  static_cast<uint64_t>(day));
    return rng.uniform01() < user.activity_rate;
}

Vec gen_features(const WorldConfig& config, const UserRecord& user, const Vec& latent, int day) {
    const int d = config.dim();
    Vec f(static_cast<size_t>(config.feature_dim), 0.0);
    for (int j = 0; j < d; ++j) {
        double x = latent[static_cast<size_t>(j)];
        f[static_cast<size_t>(j)] = user.spend_scale * x * x;
    }
    f[static_cast<size_t>(d)] = user.activity_rate;
    f[static_cast<size_t>(d + 1)] = user.spend_scale;
    f[static_cast<size_t>(d + 2)] = user.activity_rate * user.spend_scale;
    if (config.feature_noise_sd > 0.0) {
        RngStream rng = derive_stream(config.seed, "features", static_cast<uint64_t>(user.user_id),
                                      static_cast<uint64_t>(day));
        for (auto& x : f) x += rng.gaussian(0.0, config.feature_noise_sd);
    }
    return f;
}

std::vector<int> organic_purchase(const WorldConfig& config, const UserRecord& user,
                                  const Vec& latent, int day) {
    RngStream rng = derive_stream(config.seed, "organic", static_cast<uint64_t>(user.user_id),
                                  static_cast<uint64_t>(day));
    std::vector<int> q(latent.size(), 0);
    for (size_t j = 0; j < latent.size(); ++j)
        q[j] = rng.poisson(config.organic_scale * user.spend_scale * latent[j]);
    return q;
}

BehaviorModel BehaviorModel::from(const WorldConfig& config) {
    return {config.take_intercept, config.take_slope, config.click_intercept, config.click_slope};
}

double BehaviorModel::take_prob(double cos_sim_value, double novelty_multiplier) const {
    double p = sigmoid(take_intercept + take_slope * cos_sim_value) * novelty_multiplier;
    return std::clamp(p, 0.0, 1.0);
}

double BehaviorModel::click_prob(double cos_sim_value, double novelty_multiplier) const {
    double p = sigmoid(click_intercept + click_slope * cos_sim_value) * novelty_multiplier;
    return std::clamp(std::max(p, take_prob(cos_sim_value, novelty_multiplier)), 0.0, 1.0);
}

NoveltyState::NoveltyState(double amplitude, double tau) : amplitude_(amplitude), tau_(tau) {
    if (amplitude < 0.0) throw std::invalid_argument("NoveltyState: amplitude must be >= 0");
    if (tau <= 0.0) throw std::invalid_argument("NoveltyState: tau must be > 0");
}

void NoveltyState::mark_pre_exposed(int group, const std::string& bundle_id) {
    pre_exposed_.insert({group, bundle_id});
}

double NoveltyState::multiplier(int group, const std::string& bundle_id, int day) {
    std::pair<int, std::string> key{group, bundle_id};
    if (pre_exposed_.count(key)) return 1.0;
    auto [it, inserted] = first_day_.try_emplace(key, day);
    if (!inserted && day < it->second) it->second = day;
    return 1.0 + amplitude_ * std::exp(-static_cast<double>(day - it->second) / tau_);
}

double NoveltyState::peek(int group, const std::string& bundle_id, int day) const {
    std::pair<int, std::string> key{group, bundle_id};
    if (pre_exposed_.count(key)) return 1.0;
    auto it = first_day_.find(key);
    int first = it == first_day_.end() ? day : it->second;
    return 1.0 + amplitude_ * std::exp(-static_cast<double>(day - first) / tau_);
}

DayResult step_day(const WorldConfig& config, const Population& pop,
                   std::vector<ServedImpression> serving, int day, NoveltyState& novelty) {
    std::sort(serving.begin(), serving.end(),
              [](const ServedImpression& a, const ServedImpression& b) {
                  return a.user_id < b.user_id;
              });
    const BehaviorModel behavior = BehaviorModel::from(config);
    const int d = config.dim();

    DayResult out;
    out.events.reserve(serving.size());
    int64_t prev_user = -1;
    for (const ServedImpression& s : serving) {
        if (s.bundle == nullptr) throw std::invalid_argument("step_day: null bundle");
        if (s.user_id < 0 || s.user_id >= static_cast<int64_t>(pop.users.size()))
            throw std::invalid_argument("step_day: user_id out of range");
        if (s.user_id == prev_user)
            throw std::invalid_argument("step_day: duplicate impression for one user");
        prev_user = s.user_id;

        const Vec& latent = pop.latents[static_cast<size_t>(s.user_id)];
        const Vec bundle_vec = s.bundle->as_vec();
        double m = novelty.multiplier(s.group, s.bundle->id, day);
        double cs = cos_sim(latent, bundle_vec);
        double p_take = behavior.take_prob(cs, m);
        double p_click = behavior.click_prob(cs, m);

        RngStream rng = derive_stream(config.seed, "behavior", static_cast<uint64_t>(s.user_id),
                                      static_cast<uint64_t>(day));
        double u = rng.uniform01();
        bool taken = u < p_take;    // p_take <= p_click, so taken implies clicked
        bool clicked = u < p_click;
        out.events.push_back({day, s.user_id, s.bundle->id, true, clicked, taken, s.tag});

        if (taken) {
            RngStream qrng = derive_stream(config.seed, "takeqty", static_cast<uint64_t>(s.user_id),
                                           static_cast<uint64_t>(day));
            double mean_latent = 0.0;
            for (double x : latent) mean_latent += x;
            mean_latent /= static_cast<double>(d);
            std::vector<int> qty(static_cast<size_t>(d), 0);
            for (int j = 0; j < d; ++j) {
                int v = s.bundle->volumes[static_cast<size_t>(j)];
                if (v == 0) continue;
                double tilt =
                    1.0 + config.qty_pref_tilt * (latent[static_cast<size_t>(j)] - mean_latent);
                double noisy = static_cast<double>(v) * std::max(0.0, tilt) *
                               std::exp(qrng.gaussian(0.0, config.qty_noise_sd));
                qty[static_cast<size_t>(j)] = static_cast<int>(std::max(0.0, std::round(noisy)));
            }
            out.purchases.push_back({day, s.user_id, std::move(qty)});
        }
    }
    return out;
}

OfflineDataset gen_offline_dataset(const WorldConfig& config, const Population& pop,
                                   int history_days, int n_agg_days, int min_active_days) {
    if (history_days < 2) throw std::invalid_argument("gen_offline_dataset: history_days must be >= 2");
    if (n_agg_days < 1) throw std::invalid_argument("gen_offline_dataset: n_agg_days must be >= 1");

    OfflineDataset out;
    for (size_t u = 0; u < pop.users.size(); ++u) {
        const UserRecord& user = pop.users[u];
        const Vec& latent = pop.latents[u];
        std::vector<int> active;
        for (int day = 1; day <= history_days; ++day)
            if (is_active(config, user, day)) active.push_back(day);
        if (active.size() < 2) continue;  // no usable (feature window, label day) split

        int label_day = active.back();
        for (size_t i = 0; i + 1 < active.size(); ++i)
            out.daily.push_back({user.user_id, active[i], gen_features(config, user, latent, active[i])});

        std::vector<int> q = organic_purchase(config, user, latent, label_day);
        PreferenceVector label(q.size());
        for (size_t j = 0; j < q.size(); ++j) label[j] = static_cast<double>(q[j]);
        out.labels[user.user_id] = std::move(label);
        out.label_day[user.user_id] = label_day;
    }
    out.agg = aggregate_features(out.daily, n_agg_days, min_active_days, out.labels);
    return out;
}

std::string choose_heuristic_bundle(const BundlePool& pool, const Vec& reference) {
    pool.validate();
    size_t best = 0;
    double best_d = cos_dist(pool.bundles[0].as_vec(), reference);
    for (size_t i = 1; i < pool.bundles.size(); ++i) {
        double d = cos_dist(pool.bundles[i].as_vec(), reference);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return pool.bundles[best].id;
}

std::optional<double> take_dispersion(const std::vector<EventRecord>& day_events,
                                      const BundlePool& pool) {
    std::vector<double> weights(pool.bundles.size(), 0.0);
    bool any = false;
    for (const EventRecord& e : day_events) {
        if (!e.taken) continue;
        int idx = pool.index_of(e.bundle_id);
        if (idx < 0) throw std::invalid_argument("take_dispersion: unknown bundle id " + e.bundle_id);
        weights[static_cast<size_t>(idx)] += 1.0;
        any = true;
    }
    if (!any) return std::nullopt;
    Vec mean(pool.bundles[0].volumes.size(), 0.0);
    for (size_t i = 0; i < pool.bundles.size(); ++i) {
        if (weights[i] == 0.0) continue;
        Vec unit = to_unit(pool.bundles[i].as_vec());
        for (size_t j = 0; j < mean.size(); ++j) mean[j] += weights[i] * unit[j];
    }
    return recommendation_diversity(pool, weights, to_unit(mean));
}

MetricReport day_metrics(const std::vector<EventRecord>& day_events, int day,
                         const BundlePool& pool) {
    std::optional<double> rd = take_dispersion(day_events, pool);
    Vec ref = uniform_direction(static_cast<int>(pool.bundles[0].volumes.size()));
    MetricReport report = daily_metrics(day_events, day, pool, ref);
    report.rd = rd;  // dispersion around the day's own mean take direction
    return report;
}

ServingStack build_stack(const WorldConfig& config, const StackOptions& options) {
    config.validate();
    ServingStack stack;
    stack.history_days = options.history_days;
    stack.pop = gen_population(config);
    stack.data = gen_offline_dataset(config, stack.pop, options.history_days, options.n_agg_days,
                                     options.min_active_days);
    if (stack.data.agg.training.empty())
        throw std::runtime_error("build_stack: offline dataset has no training rows");

    AttentiveRegressorConfig mcfg = options.model;
    if (mcfg.seed == 0) mcfg.seed = sub_seed(config.seed, "model", 0);
    stack.model = train(stack.data.agg.training, mcfg);
    if (options.train_baseline_model)
        stack.baseline = train_baseline(stack.data.agg.training, options.ridge_lambda,
                                        mcfg.holdout_fraction, mcfg.seed);

    std::vector<PreferenceVector> preds;
    preds.reserve(stack.data.agg.all.size());
    for (const FeatureRow& row : stack.data.agg.all) {
        PreferenceVector p = stack.model.predict(row.features);
        stack.predictions[row.user_id] = p;
        preds.push_back(std::move(p));
        if (options.train_baseline_model)
            stack.baseline_predictions[row.user_id] = stack.baseline.predict(row.features);
    }

    stack.clusters = fit_kmeans(preds, options.k_clusters, sub_seed(config.seed, "kmeans", 0));
    stack.catalog = ItemCatalog::with_defaults(config.dim());
    const std::vector<double>& grid =
        options.scale_grid.empty() ? default_scale_grid() : options.scale_grid;
    stack.pool_build = build_pool(stack.clusters, stack.catalog, grid);

    Vec mean_latent(static_cast<size_t>(config.dim()), 0.0);
    for (const Vec& latent : stack.pop.latents)
        for (size_t j = 0; j < mean_latent.size(); ++j) mean_latent[j] += latent[j];
    stack.heuristic_id = choose_heuristic_bundle(stack.pool_build.pool, to_unit(mean_latent));
    stack.fallback_id = stack.heuristic_id;
    return stack;
}

FeedbackLoopResult run_feedback_loop(const WorldConfig& config, int horizon_days,
                                     int retrain_every, const FeedbackLoopOptions& options) {
    if (horizon_days < 1)
        throw std::invalid_argument("run_feedback_loop: horizon_days must be >= 1");
    if (retrain_every < 1)
        throw std::invalid_argument("run_feedback_loop: retrain_every must be >= 1");

    ServingStack stack = build_stack(config, options.stack);
    FeedbackLoopResult out;
    out.users_without_prediction =
        config.n_users - static_cast<int>(stack.predictions.size());

    PredictionCache cache;
    for (const auto& [user_id, pred] : stack.predictions) cache.put(user_id, pred);

    PolicyConfig serve_cfg;
    serve_cfg.kind = PolicyKind::model;
    serve_cfg.fallback_bundle_id = stack.fallback_id;

    NoveltyState novelty(config.novelty_amplitude, config.novelty_tau);
    novelty.mark_pre_exposed(0, stack.fallback_id);  // incumbent content

    BundlePool pool = stack.pool_build.pool;
    std::vector<DailyFeatureRow> daily_rows = stack.data.daily;
    std::map<int64_t, PreferenceVector> take_sums;
    const std::vector<double>& grid =
        options.stack.scale_grid.empty() ? default_scale_grid() : options.stack.scale_grid;
    Vec mean_latent(static_cast<size_t>(config.dim()), 0.0);
    for (const Vec& latent : stack.pop.latents)
        for (size_t j = 0; j < mean_latent.size(); ++j) mean_latent[j] += latent[j];
    mean_latent = to_unit(mean_latent);
    int generation = 0;

    for (int day = 1; day <= horizon_days; ++day) {
        const int abs_day = options.stack.history_days + day;
        std::vector<ServedImpression> serving;
        for (size_t u = 0; u < stack.pop.users.size(); ++u) {
            const UserRecord& user = stack.pop.users[u];
            if (!is_active(config, user, abs_day)) continue;
            RngStream rng = derive_stream(config.seed, "policy", static_cast<uint64_t>(u),
                                          static_cast<uint64_t>(day));
            Recommendation rec = recommend(cache.latest(user.user_id), pool, serve_cfg, rng);
            if (rec.provenance == PolicyTag::fallback) ++out.fallback_served;
            serving.push_back({user.user_id, 0, pool.find(rec.bundle_id), rec.provenance});
            daily_rows.push_back(
                {user.user_id, abs_day, gen_features(config, user, stack.pop.latents[u], abs_day)});
        }

        DayResult dr = step_day(config, stack.pop, std::move(serving), day, novelty);
        for (const EventRecord& e : dr.events) out.log.append(e);
        for (const PurchaseRecord& p : dr.purchases) {
            PreferenceVector& sum = take_sums[p.user_id];
            if (sum.empty()) sum.assign(p.quantities.size(), 0.0);
            for (size_t j = 0; j < p.quantities.size(); ++j)
                sum[j] += static_cast<double>(p.quantities[j]);
        }
        out.daily.push_back(day_metrics(dr.events, day, pool));
        out.pool_sizes.push_back(static_cast<int>(pool.bundles.size()));

        bool retrain_now = options.retrain && retrain_every <= horizon_days &&
                           day % retrain_every == 0 && day != horizon_days;
        if (!retrain_now) continue;

        // Retrain on take-derived labels only: this is the degenerate
        // feedback mechanism under study (the model picks its own future
        // training targets).
        AggregatedDataset agg = aggregate_features(daily_rows, options.stack.n_agg_days,
                                                   options.loop_min_active_days, take_sums);
        if (agg.training.size() < 50) continue;  // too little signal yet

        ++generation;
        AttentiveRegressorConfig mcfg = options.stack.model;
        mcfg.seed = sub_seed(config.seed, "retrain", static_cast<uint64_t>(generation));
        AttentiveRegressor model = train(agg.training, mcfg);

        std::vector<PreferenceVector> preds;
        preds.reserve(agg.all.size());
        for (const FeatureRow& row : agg.all) {
            PreferenceVector p = model.predict(row.features);
            cache.put(row.user_id, p);
            preds.push_back(std::move(p));
        }
        ClusterModel clusters =
            fit_kmeans(preds, options.stack.k_clusters,
                       sub_seed(config.seed, "kmeans", static_cast<uint64_t>(generation)));
        PoolBuild pb = build_pool(clusters, stack.catalog, grid);
        // Generation-qualified ids keep novelty bookkeeping and event logs
        // unambiguous across pool rebuilds.
        for (Bundle& b : pb.pool.bundles) b.id = "g" + std::to_string(generation) + ":" + b.id;
        pool = pb.pool;
        serve_cfg.fallback_bundle_id = choose_heuristic_bundle(pool, mean_latent);
        out.retrain_days.push_back(day);

        // Trim feature rows that can no longer enter an aggregation window.
        int cutoff = abs_day - 2 * std::max(options.stack.n_agg_days, 30);
        std::erase_if(daily_rows, [cutoff](const DailyFeatureRow& r) { return r.day < cutoff; });
    }
    return out;
}

}  // namespace brec

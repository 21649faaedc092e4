#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "brec/geometry.hpp"
#include "brec/policy.hpp"
#include "brec/rng.hpp"
#include "doctest.h"

using namespace brec;

namespace {

BundlePool test_pool() {
    BundlePool pool;
    pool.bundles = {
        {"b00", {9, 1, 0}},
        {"b01", {1, 9, 0}},
        {"b02", {0, 1, 9}},
        {"b03", {3, 3, 3}},
    };
    return pool;
}

}  // namespace

TEST_CASE("model policy serves the argmin bundle with d_c") {
    BundlePool pool = test_pool();
    PolicyConfig cfg;
    cfg.kind = PolicyKind::model;
    RngStream rng = derive_stream(7, "policy", 0);

    PreferenceVector pred{0.05, 0.1, 1.0};
    Recommendation rec = recommend(pred, pool, cfg, rng);
    CHECK(rec.bundle_id == "b02");
    CHECK(rec.provenance == PolicyTag::model);
    REQUIRE(rec.d_c.has_value());
    CHECK(*rec.d_c == doctest::Approx(cos_dist(pool.bundles[2].as_vec(), pred)).epsilon(1e-15));

    SUBCASE("prediction exactly on a pool direction gives d_c = 0") {
        PreferenceVector on_axis{2.0, 18.0, 0.0};  // 2 * b01
        Recommendation r2 = recommend(on_axis, pool, cfg, rng);
        CHECK(r2.bundle_id == "b01");
        CHECK(*r2.d_c == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("argmin is invariant under positive rescaling of the prediction") {
        RngStream gen = derive_stream(11, "preds", 0);
        for (int t = 0; t < 300; ++t) {
            PreferenceVector p(3);
            for (auto& x : p) x = gen.uniform(0.01, 1.0);
            for (double k : {1e-3, 1.0, 1e3}) {
                PreferenceVector scaled(3);
                for (size_t j = 0; j < 3; ++j) scaled[j] = k * p[j];
                CHECK(recommend(p, pool, cfg, rng).bundle_id ==
                      recommend(scaled, pool, cfg, rng).bundle_id);
            }
        }
    }

    SUBCASE("exact cosine ties resolve to the lowest pool index") {
        BundlePool two;
        two.bundles = {{"b00", {9, 1, 0}}, {"b01", {1, 9, 0}}};
        PreferenceVector tied{1.0, 1.0, 0.0};  // equidistant from b00 and b01
        CHECK(cos_dist(two.bundles[0].as_vec(), tied) ==
              cos_dist(two.bundles[1].as_vec(), tied));
        CHECK(recommend(tied, two, cfg, rng).bundle_id == "b00");
    }
}

TEST_CASE("contamination branch frequency matches p") {
    BundlePool pool = test_pool();
    PreferenceVector pred{1.0, 0.2, 0.1};

    SUBCASE("p = 0 always serves the model bundle") {
        PolicyConfig cfg;
        cfg.kind = PolicyKind::contaminated;
        cfg.contamination_p = 0.0;
        RngStream rng = derive_stream(3, "p0", 0);
        for (int t = 0; t < 500; ++t) {
            Recommendation rec = recommend(pred, pool, cfg, rng);
            CHECK(rec.bundle_id == "b00");
            CHECK(rec.provenance == PolicyTag::model);
        }
    }

    SUBCASE("p = 100 always serves a uniform random bundle") {
        PolicyConfig cfg;
        cfg.kind = PolicyKind::contaminated;
        cfg.contamination_p = 100.0;
        RngStream rng = derive_stream(3, "p100", 0);
        std::map<std::string, int> counts;
        for (int t = 0; t < 4000; ++t) {
            Recommendation rec = recommend(pred, pool, cfg, rng);
            CHECK(rec.provenance == PolicyTag::contaminated_random);
            counts[rec.bundle_id]++;
        }
        CHECK(counts.size() == 4);
        // Uniformity: each bundle within 5 sigma of 1000.
        for (const auto& [id, c] : counts) CHECK(std::abs(c - 1000) < 5 * std::sqrt(4000 * 0.25 * 0.75));
    }

    SUBCASE("p = 30 over 1e5 trials hits 0.30 +- 0.01") {
        PolicyConfig cfg;
        cfg.kind = PolicyKind::contaminated;
        cfg.contamination_p = 30.0;
        RngStream rng = derive_stream(3, "p30", 0);
        int random_branch = 0;
        const int trials = 100000;
        for (int t = 0; t < trials; ++t)
            if (recommend(pred, pool, cfg, rng).provenance == PolicyTag::contaminated_random)
                ++random_branch;
        double freq = static_cast<double>(random_branch) / trials;
        CHECK(freq == doctest::Approx(0.30).epsilon(0.034));  // +-0.01 absolute
        CHECK(std::abs(freq - 0.30) < 0.01);
    }
}

TEST_CASE("random and heuristic policies") {
    BundlePool pool = test_pool();

    PolicyConfig rnd;
    rnd.kind = PolicyKind::random;
    RngStream rng = derive_stream(5, "rnd", 0);
    std::set<std::string> seen;
    for (int t = 0; t < 2000; ++t) {
        Recommendation rec = recommend(std::nullopt, pool, rnd, rng);
        CHECK(rec.provenance == PolicyTag::pure_random);
        seen.insert(rec.bundle_id);
    }
    CHECK(seen.size() == 4);

    PolicyConfig heur;
    heur.kind = PolicyKind::heuristic;
    heur.heuristic_bundle_id = "b03";
    for (int t = 0; t < 20; ++t) {
        Recommendation rec = recommend(std::nullopt, pool, heur, rng);
        CHECK(rec.bundle_id == "b03");
        CHECK(rec.provenance == PolicyTag::heuristic);
    }
}

TEST_CASE("fallback absorbs missing predictions") {
    BundlePool pool = test_pool();
    RngStream rng = derive_stream(9, "fb", 0);

    PolicyConfig cfg;
    cfg.kind = PolicyKind::model;
    Recommendation rec = recommend(std::nullopt, pool, cfg, rng);
    CHECK(rec.bundle_id == "b00");  // default: first pool bundle
    CHECK(rec.provenance == PolicyTag::fallback);
    CHECK_FALSE(rec.d_c.has_value());

    cfg.fallback_bundle_id = "b03";
    CHECK(recommend(std::nullopt, pool, cfg, rng).bundle_id == "b03");

    PolicyConfig cont;
    cont.kind = PolicyKind::contaminated;
    cont.contamination_p = 50.0;
    cont.fallback_bundle_id = "b03";
    int fallbacks = 0, randoms = 0;
    for (int t = 0; t < 2000; ++t) {
        Recommendation r = recommend(std::nullopt, pool, cont, rng);
        if (r.provenance == PolicyTag::fallback) { CHECK(r.bundle_id == "b03"); ++fallbacks; }
        else { CHECK(r.provenance == PolicyTag::contaminated_random); ++randoms; }
    }
    CHECK(fallbacks > 800);  // ~50% each way
    CHECK(randoms > 800);
}

TEST_CASE("fallback chain prefers the latest cached prediction") {
    BundlePool pool = test_pool();
    PolicyConfig cfg;
    cfg.kind = PolicyKind::model;
    cfg.fallback_bundle_id = "b03";
    RngStream rng = derive_stream(13, "chain", 0);

    PredictionCache cache;
    cache.put(42, {0.0, 0.1, 2.0});           // day-1 prediction
    cache.put(42, {2.0, 0.1, 0.0});           // day-2 overwrite: latest wins
    Recommendation rec = fallback_chain(42, cache, pool, cfg, rng);
    CHECK(rec.bundle_id == "b00");
    CHECK(rec.provenance == PolicyTag::model);

    Recommendation fresh = fallback_chain(999, cache, pool, cfg, rng);
    CHECK(fresh.bundle_id == "b03");
    CHECK(fresh.provenance == PolicyTag::fallback);
}

TEST_CASE("policy validation rejects bad configs") {
    BundlePool pool = test_pool();
    RngStream rng = derive_stream(1, "bad", 0);
    PreferenceVector pred{1.0, 1.0, 1.0};

    PolicyConfig cfg;
    cfg.contamination_p = 130.0;
    CHECK_THROWS_AS(recommend(pred, pool, cfg, rng), std::invalid_argument);
    cfg.contamination_p = -2.0;
    CHECK_THROWS_AS(recommend(pred, pool, cfg, rng), std::invalid_argument);

    PolicyConfig heur;
    heur.kind = PolicyKind::heuristic;
    heur.heuristic_bundle_id = "nope";
    CHECK_THROWS_AS(recommend(pred, pool, heur, rng), std::invalid_argument);

    PolicyConfig fb;
    fb.fallback_bundle_id = "nope";
    CHECK_THROWS_AS(recommend(pred, pool, fb, rng), std::invalid_argument);

    BundlePool empty;
    CHECK_THROWS_AS(recommend(pred, empty, PolicyConfig{}, rng), std::invalid_argument);

    CHECK(to_string(PolicyKind::contaminated) == std::string("contaminated"));
    CHECK(policy_kind_from_string("heuristic") == PolicyKind::heuristic);
    CHECK_THROWS_AS(policy_kind_from_string("x"), std::invalid_argument);
}

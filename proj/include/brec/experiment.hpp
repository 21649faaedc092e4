#pragma once
// A/B harness: salted deterministic group assignment, day-by-day serving of
// per-group policies against the shared world, ratio-bootstrap uplifts for
// AV/CV/TR/CR/RD with an early-stopping rule, novelty decomposition against a
// random-bundle benchmark group, offline evaluation, and the target-imbalance
// diagnostic. Presets cover the five standard study designs plus an A/A run.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brec/core.hpp"
#include "brec/geometry.hpp"
#include "brec/model.hpp"
#include "brec/policy.hpp"
#include "brec/rng.hpp"
#include "brec/sim.hpp"
#include "brec/stats.hpp"

namespace brec {

// Which trained predictor feeds a model-driven policy arm.
enum class PredictionSource { attentive, baseline };

std::string to_string(PredictionSource source);
PredictionSource prediction_source_from_string(const std::string& text);

struct ExperimentSpec {
    std::string name = "experiment";
    std::string salt = "brec";  // group assignment key, independent of the world seed
    PolicyConfig control_policy;
    std::vector<PolicyConfig> treatment_policies;
    std::vector<double> group_fractions;  // control first; must sum to 1
    int min_days = 14;
    int max_days = 42;
    double stop_confidence = 0.8;
    int bootstrap_resamples = 2000;
    std::vector<std::string> metrics = default_metrics();  // uplifts to report
    PredictionSource control_source = PredictionSource::attentive;
    std::vector<PredictionSource> treatment_sources;  // empty = all attentive
    std::optional<int> novelty_benchmark;   // treatment index serving as random benchmark
    std::vector<std::string> pre_exposed_bundles;  // incumbent content: no novelty boost
    std::string note;  // free-form caveat printed with the report

    static std::vector<std::string> default_metrics();  // av cv tr cr rd
    int n_groups() const { return 1 + static_cast<int>(treatment_policies.size()); }
    void validate(const BundlePool& pool) const;
};

// Deterministic function of (user_id, salt) only: 0 = control, 1.. = treatments.
int assign_group(int64_t user_id, const std::string& salt,
                 const std::vector<double>& fractions);

struct GroupResult {
    std::string name;
    int64_t n_assigned = 0;
    std::vector<MetricReport> daily;  // rd = take-weighted dispersion
    std::vector<int64_t> av_new;      // daily takes on non-pre-exposed content
    std::vector<int64_t> av_pre;      // daily takes on pre-exposed content
};

struct MetricUplift {
    UpliftResult point;          // ratio of sums over the whole run
    double se_pct = 0.0;         // bootstrap standard error, percentage points
    double prob_positive = 0.5;  // bootstrap P(uplift > 0)
    bool degenerate = false;     // a zero denominator made the uplift undefined
};

struct NoveltyDecomposition {
    std::vector<int> days;
    std::vector<double> benchmark_multiplier;  // estimated novelty multiplier per day
    std::vector<double> raw_uplift_pct;        // treatment AV uplift vs control
    std::vector<double> adjusted_uplift_pct;   // same with the multiplier divided out
    std::optional<double> fitted_tau;          // decay constant of the excess, days
    std::optional<double> fitted_amplitude;
    stats::LinFit raw_trend;       // OLS of each series against the day index
    stats::LinFit adjusted_trend;
};

struct ExperimentReport {
    std::string name;
    std::string note;
    int stop_day = 0;
    std::string stop_reason;  // confident_uplift | futility | decided | max_days
    std::vector<std::string> metric_names;
    std::vector<GroupResult> groups;                 // [0] = control
    std::vector<std::vector<MetricUplift>> uplifts;  // [treatment][metric]
    std::optional<NoveltyDecomposition> novelty;
    std::vector<std::string> warnings;  // degenerate groups / metrics
};

// Simulates the experiment day by day on the stack's trained artifacts. The
// serving clock continues after the stack's offline history. Behavior draws
// depend only on the world, so arms differ purely through what they serve.
ExperimentReport run_experiment(const WorldConfig& world, const ServingStack& stack,
                                const ExperimentSpec& spec);

struct StopRule {
    int min_days = 14;
    int max_days = 42;
    double confidence = 0.8;
    int resamples = 2000;
};

struct StopDecision {
    bool stop = false;
    std::string reason;  // confident_uplift | futility | max_days, empty if continuing
    double prob_positive = 0.5;
};

// Bootstrap of the accumulated per-user ratio samples. Stops once the
// probability of a positive uplift clears the confidence band either way;
// always stops at max_days.
StopDecision stopping_rule(const std::vector<stats::RatioSample>& treatment,
                           const std::vector<stats::RatioSample>& control,
                           int elapsed_days, const StopRule& rule, RngStream& rng);

// Per-day AV uplift of `treatment_group` with the benchmark group's decaying
// novelty multiplier divided out of the treatment's new-content takes. The
// multiplier is the benchmark's new-content per-capita AV over its plateau,
// where plateau/amplitude/tau come from a least-squares exponential-decay fit
// of that series; if no decay is identifiable the plateau falls back to the
// trailing `plateau_window` days and the fit fields stay empty. Group indices
// are into report.groups; control is 0.
NoveltyDecomposition novelty_decomposition(const ExperimentReport& report,
                                           size_t benchmark_group, size_t treatment_group,
                                           int plateau_window = 7);

// Named presets wired to the stack's pool and incumbent bundle:
//   experiment1  novelty study: heuristic control, model treatment, random benchmark
//   experiment2  contamination ladder: random control vs T_0 / T_10 / T_30
//   experiment3  model comparison: baseline-driven control vs attentive treatment
//   experiment4  model vs incumbent heuristic
//   experiment5  random vs incumbent heuristic
//   aa           A/A sanity run (identical policies both sides)
ExperimentSpec experiment_preset(const std::string& name, const ServingStack& stack);
std::vector<std::string> experiment_preset_names();

// Mean cos_dist(label, prediction); lower is better. Throws on empty input,
// length mismatch, or zero-norm rows.
double offline_eval(const std::vector<PreferenceVector>& predictions,
                    const std::vector<Vec>& labels);
double offline_eval(const AttentiveRegressor& model, const std::vector<FeatureRow>& rows);

// Share of the mean cosine distance attributable to one coordinate:
// (full - reduced) / full where `reduced` re-evaluates with that coordinate
// dropped from predictions and labels. Rows whose label loses its direction
// entirely are skipped in the reduced mean.
double target_imbalance_probe(const std::vector<PreferenceVector>& predictions,
                              const std::vector<Vec>& labels, size_t excluded);
double target_imbalance_probe(const AttentiveRegressor& model,
                              const std::vector<FeatureRow>& rows, size_t excluded);

}  // namespace brec

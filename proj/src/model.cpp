#include "brec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "brec/geometry.hpp"
#include "brec/rng.hpp"

namespace brec {

namespace {

constexpr double kPriorEps = 1e-6;    // guards ln(prior) in the mask logits
constexpr double kEntropyEps = 1e-12;  // guards ln(mask) in the regularizer
constexpr double kNormEps = 1e-12;     // guards the cosine-loss denominator

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void softmax_inplace(Vec& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (auto& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (auto& x : v) x /= sum;
}

// Everything the backward pass needs from one forward evaluation.
struct ForwardCache {
    std::vector<Vec> prior;   // S+1 entries, prior[0] = ones
    std::vector<Vec> mask;    // S
    std::vector<Vec> masked;  // S, mask * x
    std::vector<Vec> hidden;  // S, post-tanh
    Vec raw;                  // summed step outputs
    Vec pred;                 // softplus(raw)
    double cos_loss = 0.0;
    double entropy_term = 0.0;  // mean over steps of mask entropy
};

ForwardCache forward(const AttentiveRegressor& m, const Vec& x, const Vec* label) {
    const int f = m.feature_dim, h = m.config.hidden_dim, d = m.output_dim;
    const int s_count = m.config.steps;
    ForwardCache c;
    c.prior.assign(static_cast<size_t>(s_count) + 1, Vec());
    c.prior[0].assign(static_cast<size_t>(f), 1.0);
    c.mask.resize(static_cast<size_t>(s_count));
    c.masked.resize(static_cast<size_t>(s_count));
    c.hidden.resize(static_cast<size_t>(s_count));
    c.raw.assign(static_cast<size_t>(d), 0.0);

    double entropy_sum = 0.0;
    for (int s = 0; s < s_count; ++s) {
        const auto& w = m.steps[static_cast<size_t>(s)];
        Vec logits(static_cast<size_t>(f));
        for (int i = 0; i < f; ++i) {
            double acc = w.b_mask[static_cast<size_t>(i)] +
                         std::log(c.prior[static_cast<size_t>(s)][static_cast<size_t>(i)] + kPriorEps);
            for (int j = 0; j < f; ++j) acc += w.w_mask(i, j) * x[static_cast<size_t>(j)];
            logits[static_cast<size_t>(i)] = acc;
        }
        softmax_inplace(logits);
        c.mask[static_cast<size_t>(s)] = logits;
        const Vec& mask = c.mask[static_cast<size_t>(s)];

        for (int i = 0; i < f; ++i)
            entropy_sum -= mask[static_cast<size_t>(i)] *
                           std::log(mask[static_cast<size_t>(i)] + kEntropyEps);

        Vec z(static_cast<size_t>(f));
        for (int i = 0; i < f; ++i) z[static_cast<size_t>(i)] = mask[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        c.masked[static_cast<size_t>(s)] = z;

        Vec hid(static_cast<size_t>(h));
        for (int i = 0; i < h; ++i) {
            double acc = w.b_hidden[static_cast<size_t>(i)];
            for (int j = 0; j < f; ++j) acc += w.w_hidden(i, j) * z[static_cast<size_t>(j)];
            hid[static_cast<size_t>(i)] = std::tanh(acc);
        }
        c.hidden[static_cast<size_t>(s)] = hid;

        for (int i = 0; i < d; ++i) {
            double acc = w.b_out[static_cast<size_t>(i)];
            for (int j = 0; j < h; ++j) acc += w.w_out(i, j) * hid[static_cast<size_t>(j)];
            c.raw[static_cast<size_t>(i)] += acc;
        }

        auto& next_prior = c.prior[static_cast<size_t>(s) + 1];
        next_prior.resize(static_cast<size_t>(f));
        for (int i = 0; i < f; ++i)
            next_prior[static_cast<size_t>(i)] =
                c.prior[static_cast<size_t>(s)][static_cast<size_t>(i)] *
                (m.config.relax_gamma - mask[static_cast<size_t>(i)]);
    }

    c.pred.resize(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) c.pred[static_cast<size_t>(i)] = softplus(c.raw[static_cast<size_t>(i)]);
    c.entropy_term = entropy_sum / s_count;

    if (label) {
        double ny = norm(c.pred), nt = norm(*label);
        double denom = std::max(ny * nt, kNormEps);
        c.cos_loss = 1.0 - dot(c.pred, *label) / denom;
    }
    return c;
}

void check_feature_length(const AttentiveRegressor& m, const Vec& x) {
    if (static_cast<int>(x.size()) != m.feature_dim)
        throw std::domain_error("model: feature vector has wrong length");
}

}  // namespace

void AttentiveRegressorConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("config: steps must be >= 1");
    if (hidden_dim < 1) throw std::invalid_argument("config: hidden_dim must be >= 1");
    if (relax_gamma < 1.0) throw std::invalid_argument("config: relax_gamma must be >= 1");
    if (sparsity_coeff < 0.0) throw std::invalid_argument("config: sparsity_coeff must be >= 0");
    if (lr.initial <= 0.0) throw std::invalid_argument("config: learning rate must be positive");
    if (lr.decay <= 0.0 || lr.decay > 1.0)
        throw std::invalid_argument("config: lr decay must be in (0, 1]");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (holdout_fraction < 0.0 || holdout_fraction > 0.5)
        throw std::invalid_argument("config: holdout_fraction must be in [0, 0.5]");
    if (restarts < 1 || restarts > 16)
        throw std::invalid_argument("config: restarts must be in [1, 16]");
}

AttentiveRegressor AttentiveRegressor::make(int feature_dim, int output_dim,
                                            const AttentiveRegressorConfig& config) {
    config.validate();
    if (feature_dim < 1 || output_dim < 1)
        throw std::invalid_argument("model: dimensions must be positive");
    AttentiveRegressor m;
    m.config = config;
    m.feature_dim = feature_dim;
    m.output_dim = output_dim;
    auto rng = derive_stream(config.seed, "model_init", 0);
    auto fill = [&rng](Mat& w, int rows, int cols) {
        w = Mat(rows, cols);
        double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (auto& v : w.a) v = rng.uniform(-0.5, 0.5) * scale;
    };
    auto fillv = [&rng](Vec& v, int n) {
        v.assign(static_cast<size_t>(n), 0.0);
        for (auto& x : v) x = rng.uniform(-0.05, 0.05);
    };
    m.steps.resize(static_cast<size_t>(config.steps));
    for (auto& s : m.steps) {
        fill(s.w_mask, feature_dim, feature_dim);
        fillv(s.b_mask, feature_dim);
        fill(s.w_hidden, config.hidden_dim, feature_dim);
        fillv(s.b_hidden, config.hidden_dim);
        fill(s.w_out, output_dim, config.hidden_dim);
        fillv(s.b_out, output_dim);
    }
    return m;
}

Vec AttentiveRegressor::predict(const Vec& features) const {
    check_feature_length(*this, features);
    return forward(*this, features, nullptr).pred;
}

std::vector<Vec> AttentiveRegressor::masks(const Vec& features) const {
    check_feature_length(*this, features);
    return forward(*this, features, nullptr).mask;
}

double AttentiveRegressor::sample_loss(const Vec& features, const Vec& label) const {
    check_feature_length(*this, features);
    auto c = forward(*this, features, &label);
    return c.cos_loss + config.sparsity_coeff * c.entropy_term;
}

size_t AttentiveRegressor::param_count() const {
    size_t f = static_cast<size_t>(feature_dim), h = static_cast<size_t>(config.hidden_dim),
           d = static_cast<size_t>(output_dim);
    return static_cast<size_t>(config.steps) * (f * f + f + h * f + h + d * h + d);
}

std::vector<double> AttentiveRegressor::flatten() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& s : steps) {
        out.insert(out.end(), s.w_mask.a.begin(), s.w_mask.a.end());
        out.insert(out.end(), s.b_mask.begin(), s.b_mask.end());
        out.insert(out.end(), s.w_hidden.a.begin(), s.w_hidden.a.end());
        out.insert(out.end(), s.b_hidden.begin(), s.b_hidden.end());
        out.insert(out.end(), s.w_out.a.begin(), s.w_out.a.end());
        out.insert(out.end(), s.b_out.begin(), s.b_out.end());
    }
    return out;
}

void AttentiveRegressor::unflatten(const std::vector<double>& params) {
    if (params.size() != param_count())
        throw std::invalid_argument("model: parameter vector has wrong length");
    size_t pos = 0;
    auto take = [&params, &pos](double* dst, size_t n) {
        std::copy(params.begin() + static_cast<long>(pos),
                  params.begin() + static_cast<long>(pos + n), dst);
        pos += n;
    };
    for (auto& s : steps) {
        take(s.w_mask.a.data(), s.w_mask.a.size());
        take(s.b_mask.data(), s.b_mask.size());
        take(s.w_hidden.a.data(), s.w_hidden.a.size());
        take(s.b_hidden.data(), s.b_hidden.size());
        take(s.w_out.a.data(), s.w_out.a.size());
        take(s.b_out.data(), s.b_out.size());
    }
}

void AttentiveRegressor::accumulate_grad(const Vec& x, const Vec& label,
                                         std::vector<double>& grad) const {
    check_feature_length(*this, x);
    if (grad.size() != param_count())
        throw std::invalid_argument("model: gradient vector has wrong length");
    const int f = feature_dim, h = config.hidden_dim, d = output_dim;
    const int s_count = config.steps;
    auto c = forward(*this, x, &label);

    // d(cos loss)/d(pred): L = 1 - (y.t) / max(|y||t|, eps).
    Vec dpred(static_cast<size_t>(d), 0.0);
    {
        double ny = norm(c.pred), nt = norm(label);
        double denom = std::max(ny * nt, kNormEps);
        if (ny * nt > kNormEps) {
            double s = dot(c.pred, label);
            for (int i = 0; i < d; ++i)
                dpred[static_cast<size_t>(i)] =
                    -label[static_cast<size_t>(i)] / denom +
                    s * c.pred[static_cast<size_t>(i)] / (ny * ny * denom);
        }
    }
    // Through softplus: dy/draw = sigmoid(raw). raw feeds from every step.
    Vec draw(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i)
        draw[static_cast<size_t>(i)] =
            dpred[static_cast<size_t>(i)] * sigmoid(c.raw[static_cast<size_t>(i)]);

    // Per-step parameter gradients, walking the prior chain backwards:
    //   prior[s+1] = prior[s] * (gamma - mask[s])
    //   logits[s]  = Wm x + bm + ln(prior[s] + eps)
    // so dprior[s] collects (gamma - mask[s]) * dprior[s+1] from the chain and
    // dlogits[s] / (prior[s] + eps) from the mask head.
    const double entropy_w = config.sparsity_coeff / s_count;
    Vec dprior(static_cast<size_t>(f), 0.0);  // d loss / d prior[s+1], starts at zero for s = S-1

    // Layout bookkeeping: offsets of step s within the flat vector.
    const size_t step_span = static_cast<size_t>(f) * f + static_cast<size_t>(f) +
                             static_cast<size_t>(h) * f + static_cast<size_t>(h) +
                             static_cast<size_t>(d) * h + static_cast<size_t>(d);

    for (int s = s_count - 1; s >= 0; --s) {
        const auto& w = steps[static_cast<size_t>(s)];
        const Vec& mask = c.mask[static_cast<size_t>(s)];
        const Vec& prior_s = c.prior[static_cast<size_t>(s)];
        const Vec& hid = c.hidden[static_cast<size_t>(s)];
        size_t base = static_cast<size_t>(s) * step_span;
        size_t off_wm = base;
        size_t off_bm = off_wm + static_cast<size_t>(f) * f;
        size_t off_wh = off_bm + static_cast<size_t>(f);
        size_t off_bh = off_wh + static_cast<size_t>(h) * f;
        size_t off_wo = off_bh + static_cast<size_t>(h);
        size_t off_bo = off_wo + static_cast<size_t>(d) * h;

        // Output head: raw += Wo hid + bo, so d(raw)/d(step outputs) = 1.
        for (int i = 0; i < d; ++i) {
            grad[off_bo + static_cast<size_t>(i)] += draw[static_cast<size_t>(i)];
            for (int j = 0; j < h; ++j)
                grad[off_wo + static_cast<size_t>(i) * h + static_cast<size_t>(j)] +=
                    draw[static_cast<size_t>(i)] * hid[static_cast<size_t>(j)];
        }
        // Into hidden, through tanh.
        Vec dpre(static_cast<size_t>(h));
        for (int j = 0; j < h; ++j) {
            double acc = 0.0;
            for (int i = 0; i < d; ++i) acc += w.w_out(i, j) * draw[static_cast<size_t>(i)];
            dpre[static_cast<size_t>(j)] =
                acc * (1.0 - hid[static_cast<size_t>(j)] * hid[static_cast<size_t>(j)]);
        }
        const Vec& z = c.masked[static_cast<size_t>(s)];
        for (int i = 0; i < h; ++i) {
            grad[off_bh + static_cast<size_t>(i)] += dpre[static_cast<size_t>(i)];
            for (int j = 0; j < f; ++j)
                grad[off_wh + static_cast<size_t>(i) * f + static_cast<size_t>(j)] +=
                    dpre[static_cast<size_t>(i)] * z[static_cast<size_t>(j)];
        }
        // Into the mask: z = mask * x, plus entropy term, plus the prior chain.
        Vec dmask(static_cast<size_t>(f), 0.0);
        for (int j = 0; j < f; ++j) {
            double acc = 0.0;
            for (int i = 0; i < h; ++i) acc += w.w_hidden(i, j) * dpre[static_cast<size_t>(i)];
            dmask[static_cast<size_t>(j)] = acc * x[static_cast<size_t>(j)];
            double mj = mask[static_cast<size_t>(j)];
            dmask[static_cast<size_t>(j)] -=
                entropy_w * (std::log(mj + kEntropyEps) + mj / (mj + kEntropyEps));
            // prior[s+1] = prior[s] * (gamma - mask[s])
            dmask[static_cast<size_t>(j)] -=
                dprior[static_cast<size_t>(j)] * prior_s[static_cast<size_t>(j)];
        }
        // Softmax backward: dlogits = mask * (dmask - <dmask, mask>).
        double inner = 0.0;
        for (int j = 0; j < f; ++j)
            inner += dmask[static_cast<size_t>(j)] * mask[static_cast<size_t>(j)];
        Vec dlogits(static_cast<size_t>(f));
        for (int j = 0; j < f; ++j)
            dlogits[static_cast<size_t>(j)] =
                mask[static_cast<size_t>(j)] * (dmask[static_cast<size_t>(j)] - inner);
        for (int i = 0; i < f; ++i) {
            grad[off_bm + static_cast<size_t>(i)] += dlogits[static_cast<size_t>(i)];
            for (int j = 0; j < f; ++j)
                grad[off_wm + static_cast<size_t>(i) * f + static_cast<size_t>(j)] +=
                    dlogits[static_cast<size_t>(i)] * x[static_cast<size_t>(j)];
        }
        // Propagate to prior[s]: the chain term and the ln(prior + eps) term.
        Vec dprior_prev(static_cast<size_t>(f));
        for (int j = 0; j < f; ++j)
            dprior_prev[static_cast<size_t>(j)] =
                dprior[static_cast<size_t>(j)] * (config.relax_gamma - mask[static_cast<size_t>(j)]) +
                dlogits[static_cast<size_t>(j)] / (prior_s[static_cast<size_t>(j)] + kPriorEps);
        dprior = std::move(dprior_prev);
    }
}

double grad_check(const AttentiveRegressor& model, const FeatureRow& sample, double epsilon) {
    if (epsilon < 1e-7 || epsilon > 1e-3)
        throw std::invalid_argument("grad_check: epsilon must be in [1e-7, 1e-3]");
    std::vector<double> analytic(model.param_count(), 0.0);
    model.accumulate_grad(sample.features, sample.label, analytic);

    AttentiveRegressor probe = model;
    std::vector<double> params = model.flatten();
    double worst = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
        double keep = params[i];
        params[i] = keep + epsilon;
        probe.unflatten(params);
        double up = probe.sample_loss(sample.features, sample.label);
        params[i] = keep - epsilon;
        probe.unflatten(params);
        double down = probe.sample_loss(sample.features, sample.label);
        params[i] = keep;
        double numeric = (up - down) / (2.0 * epsilon);
        double rel = std::fabs(analytic[i] - numeric) /
                     std::max(1e-6, std::fabs(analytic[i]) + std::fabs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

namespace {

void validate_dataset(const std::vector<FeatureRow>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    size_t f = dataset[0].features.size();
    size_t d = dataset[0].label.size();
    if (f == 0 || d == 0) throw std::invalid_argument("train: empty feature or label vector");
    for (const auto& row : dataset) {
        if (row.features.size() != f) throw std::invalid_argument("train: inconsistent feature length");
        validate_preference(row.label, static_cast<int>(d));
    }
}

// Deterministic holdout split: shuffled by a stream derived from the seed.
void split_rows(const std::vector<FeatureRow>& dataset, double fraction, uint64_t seed,
                std::vector<FeatureRow>& train_rows, std::vector<FeatureRow>& holdout_rows) {
    std::vector<size_t> idx(dataset.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = derive_stream(seed, "train_split", 0);
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
    size_t n_hold = static_cast<size_t>(std::floor(fraction * static_cast<double>(dataset.size())));
    if (fraction > 0.0 && n_hold == 0 && dataset.size() >= 2) n_hold = 1;
    for (size_t i = 0; i < idx.size(); ++i)
        (i < n_hold ? holdout_rows : train_rows).push_back(dataset[idx[i]]);
}

}  // namespace

double mean_cos_distance(const std::function<Vec(const Vec&)>& predictor,
                         const std::vector<FeatureRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("mean_cos_distance: no rows");
    double acc = 0.0;
    for (const auto& r : rows) acc += cos_dist(predictor(r.features), r.label);
    return acc / static_cast<double>(rows.size());
}

namespace {

// One SGD run from a fresh init; fills the model's report (traces, row counts,
// final train cosine) but leaves holdout_cos for the caller.
AttentiveRegressor train_once(const std::vector<FeatureRow>& train_rows,
                              const AttentiveRegressorConfig& config) {
    auto model = AttentiveRegressor::make(static_cast<int>(train_rows[0].features.size()),
                                          static_cast<int>(train_rows[0].label.size()), config);

    auto full_loss = [&model, &train_rows]() {
        double acc = 0.0;
        for (const auto& r : train_rows) acc += model.sample_loss(r.features, r.label);
        return acc / static_cast<double>(train_rows.size());
    };

    auto shuffle_rng = derive_stream(config.seed, "train_shuffle", 0);
    std::vector<size_t> order(train_rows.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> params = model.flatten();
    std::vector<double> grad(params.size());
    std::vector<double> best_params = params;
    double best_loss = full_loss();
    if (!std::isfinite(best_loss))
        throw std::runtime_error("train: loss diverged (non-finite) at initialization");

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
        double lr = config.lr.initial * std::pow(config.lr.decay, epoch);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            size_t stop = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t i = start; i < stop; ++i) {
                const auto& row = train_rows[order[i]];
                model.accumulate_grad(row.features, row.label, grad);
            }
            double inv = 1.0 / static_cast<double>(stop - start);
            for (size_t i = 0; i < params.size(); ++i) params[i] -= lr * inv * grad[i];
            model.unflatten(params);
        }
        double loss = full_loss();
        if (!std::isfinite(loss))
            throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                     std::to_string(epoch));
        model.report.epoch_losses.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best_params = params;
        }
        model.report.loss_trace.push_back(best_loss);
    }

    model.unflatten(best_params);
    model.report.train_rows = static_cast<int>(train_rows.size());
    auto predictor = [&model](const Vec& x) { return model.predict(x); };
    model.report.final_train_cos = mean_cos_distance(predictor, train_rows);
    return model;
}

}  // namespace

AttentiveRegressor train(const std::vector<FeatureRow>& dataset,
                         const AttentiveRegressorConfig& config) {
    config.validate();
    validate_dataset(dataset);
    std::vector<FeatureRow> train_rows, holdout_rows;
    // One split for all restarts, keyed by the caller's seed, so restart
    // selection compares candidates on identical data.
    split_rows(dataset, config.holdout_fraction, config.seed, train_rows, holdout_rows);
    if (train_rows.empty()) throw std::invalid_argument("train: no training rows after split");

    AttentiveRegressor best;
    std::vector<double> restart_cos;
    for (int r = 0; r < config.restarts; ++r) {
        AttentiveRegressorConfig run = config;
        if (r > 0) run.seed = splitmix64_hash(config.seed, static_cast<uint64_t>(r));
        auto candidate = train_once(train_rows, run);
        restart_cos.push_back(candidate.report.final_train_cos);
        if (r == 0 || candidate.report.final_train_cos < best.report.final_train_cos) {
            best = std::move(candidate);
            best.report.selected_restart = r;
        }
    }

    best.config = config;  // expose the caller's seed, not the winning substream
    best.report.restart_train_cos = std::move(restart_cos);
    best.report.holdout_rows = static_cast<int>(holdout_rows.size());
    auto predictor = [&best](const Vec& x) { return best.predict(x); };
    best.report.holdout_cos =
        holdout_rows.empty() ? best.report.final_train_cos : mean_cos_distance(predictor, holdout_rows);
    return best;
}

void FeatureImportance::validate() const {
    if (weights.empty()) throw std::invalid_argument("FeatureImportance: empty");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("FeatureImportance: negative weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("FeatureImportance: weights must sum to 1");
}

FeatureImportance feature_importance(const AttentiveRegressor& model,
                                     const std::vector<FeatureRow>& sample) {
    if (sample.empty()) throw std::invalid_argument("feature_importance: empty sample");
    Vec acc(static_cast<size_t>(model.feature_dim), 0.0);
    for (const auto& row : sample) {
        auto masks = model.masks(row.features);
        for (const auto& m : masks)
            for (size_t i = 0; i < m.size(); ++i) acc[i] += m[i];
    }
    double sum = 0.0;
    for (double v : acc) sum += v;
    FeatureImportance fi;
    fi.weights.resize(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) fi.weights[i] = acc[i] / sum;
    fi.validate();
    return fi;
}

namespace {

// Gaussian elimination with partial pivoting; solves in place.
Vec solve_linear(Mat a, Vec b) {
    int n = a.rows;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
        if (std::fabs(a(pivot, col)) < 1e-300)
            throw std::runtime_error("solve_linear: singular system");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
            std::swap(b[static_cast<size_t>(col)], b[static_cast<size_t>(pivot)]);
        }
        for (int r = col + 1; r < n; ++r) {
            double factor = a(r, col) / a(col, col);
            if (factor == 0.0) continue;
            for (int j = col; j < n; ++j) a(r, j) -= factor * a(col, j);
            b[static_cast<size_t>(r)] -= factor * b[static_cast<size_t>(col)];
        }
    }
    Vec x(static_cast<size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<size_t>(r)];
        for (int j = r + 1; j < n; ++j) acc -= a(r, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(r)] = acc / a(r, r);
    }
    return x;
}

}  // namespace

Vec LinearModel::predict_raw(const Vec& features) const {
    if (static_cast<int>(features.size()) != w.cols)
        throw std::domain_error("baseline: feature vector has wrong length");
    Vec out(static_cast<size_t>(w.rows));
    for (int i = 0; i < w.rows; ++i) {
        double acc = b[static_cast<size_t>(i)];
        for (int j = 0; j < w.cols; ++j) acc += w(i, j) * features[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

Vec LinearModel::predict(const Vec& features) const {
    Vec out = predict_raw(features);
    for (auto& v : out) v = std::max(v, 1e-9);
    return out;
}

LinearModel train_baseline(const std::vector<FeatureRow>& dataset, double ridge_lambda,
                           double holdout_fraction, uint64_t seed) {
    if (ridge_lambda < 0.0) throw std::invalid_argument("train_baseline: lambda must be >= 0");
    validate_dataset(dataset);
    std::vector<FeatureRow> train_rows, holdout_rows;
    split_rows(dataset, holdout_fraction, seed, train_rows, holdout_rows);
    if (train_rows.empty()) throw std::invalid_argument("train_baseline: no training rows");

    const int f = static_cast<int>(train_rows[0].features.size());
    const int d = static_cast<int>(train_rows[0].label.size());
    const int n_aug = f + 1;  // bias via augmented column, unregularized

    // Normal equations on unit-normalized labels (cosine objective cares only
    // about label direction).
    Mat xtx(n_aug, n_aug);
    std::vector<Vec> xty(static_cast<size_t>(d), Vec(static_cast<size_t>(n_aug), 0.0));
    for (const auto& row : train_rows) {
        Vec t = to_unit(row.label);
        Vec aug(row.features);
        aug.push_back(1.0);
        for (int i = 0; i < n_aug; ++i) {
            for (int j = 0; j < n_aug; ++j)
                xtx(i, j) += aug[static_cast<size_t>(i)] * aug[static_cast<size_t>(j)];
            for (int k = 0; k < d; ++k)
                xty[static_cast<size_t>(k)][static_cast<size_t>(i)] +=
                    aug[static_cast<size_t>(i)] * t[static_cast<size_t>(k)];
        }
    }
    for (int i = 0; i < f; ++i) xtx(i, i) += ridge_lambda;

    LinearModel model;
    model.ridge_lambda = ridge_lambda;
    model.w = Mat(d, f);
    model.b.assign(static_cast<size_t>(d), 0.0);
    for (int k = 0; k < d; ++k) {
        Vec beta = solve_linear(xtx, xty[static_cast<size_t>(k)]);
        for (int j = 0; j < f; ++j) model.w(k, j) = beta[static_cast<size_t>(j)];
        model.b[static_cast<size_t>(k)] = beta[static_cast<size_t>(f)];
    }
    auto predictor = [&model](const Vec& x) { return model.predict(x); };
    model.final_train_cos = mean_cos_distance(predictor, train_rows);
    model.holdout_cos =
        holdout_rows.empty() ? model.final_train_cos : mean_cos_distance(predictor, holdout_rows);
    return model;
}

double baseline_grad_check(const LinearModel& model, const std::vector<FeatureRow>& dataset,
                           double epsilon) {
    if (epsilon < 1e-7 || epsilon > 1e-3)
        throw std::invalid_argument("baseline_grad_check: epsilon must be in [1e-7, 1e-3]");
    validate_dataset(dataset);
    const int f = model.w.cols, d = model.w.rows;

    // Ridge objective: sum_i |W x_i + b - t_i|^2 + lambda |W|^2, t unit-normalized.
    auto objective = [&dataset, f, d](const Mat& w, const Vec& b, double lambda) {
        double acc = 0.0;
        for (const auto& row : dataset) {
            Vec t = to_unit(row.label);
            for (int k = 0; k < d; ++k) {
                double pred = b[static_cast<size_t>(k)];
                for (int j = 0; j < f; ++j)
                    pred += w(k, j) * row.features[static_cast<size_t>(j)];
                double r = pred - t[static_cast<size_t>(k)];
                acc += r * r;
            }
        }
        for (double v : w.a) acc += lambda * v * v;
        return acc;
    };

    // Analytic gradient.
    Mat gw(d, f);
    Vec gb(static_cast<size_t>(d), 0.0);
    for (const auto& row : dataset) {
        Vec t = to_unit(row.label);
        Vec res = model.predict_raw(row.features);
        for (int k = 0; k < d; ++k) {
            double r = 2.0 * (res[static_cast<size_t>(k)] - t[static_cast<size_t>(k)]);
            gb[static_cast<size_t>(k)] += r;
            for (int j = 0; j < f; ++j) gw(k, j) += r * row.features[static_cast<size_t>(j)];
        }
    }
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < f; ++j) gw(k, j) += 2.0 * model.ridge_lambda * model.w(k, j);

    double worst = 0.0;
    Mat w = model.w;
    Vec b = model.b;
    auto probe = [&](double* slot, double analytic) {
        double keep = *slot;
        *slot = keep + epsilon;
        double up = objective(w, b, model.ridge_lambda);
        *slot = keep - epsilon;
        double down = objective(w, b, model.ridge_lambda);
        *slot = keep;
        double numeric = (up - down) / (2.0 * epsilon);
        double rel = std::fabs(analytic - numeric) /
                     std::max(1.0, std::fabs(analytic) + std::fabs(numeric));
        worst = std::max(worst, rel);
    };
    for (int k = 0; k < d; ++k) {
        probe(&b[static_cast<size_t>(k)], gb[static_cast<size_t>(k)]);
        for (int j = 0; j < f; ++j) probe(&w.a[static_cast<size_t>(k) * f + j], gw(k, j));
    }
    return worst;
}

AggregatedDataset aggregate_features(const std::vector<DailyFeatureRow>& raw, int n_days,
                                     int min_active_days,
                                     const std::map<int64_t, PreferenceVector>& labels) {
    if (n_days < 1) throw std::invalid_argument("aggregate_features: n_days must be >= 1");
    if (min_active_days < 1)
        throw std::invalid_argument("aggregate_features: min_active_days must be >= 1");

    std::map<int64_t, std::vector<const DailyFeatureRow*>> by_user;
    for (const auto& row : raw) by_user[row.user_id].push_back(&row);

    AggregatedDataset out;
    for (auto& [uid, rows] : by_user) {
        std::sort(rows.begin(), rows.end(),
                  [](const DailyFeatureRow* a, const DailyFeatureRow* b) { return a->day < b->day; });
        for (size_t i = 1; i < rows.size(); ++i)
            if (rows[i]->day == rows[i - 1]->day)
                throw std::invalid_argument("aggregate_features: duplicate (user, day) row");
        int days_active = static_cast<int>(rows.size());
        int window = std::min(n_days, days_active);
        FeatureRow fr;
        fr.user_id = uid;
        fr.agg_days = window;
        fr.features.assign(rows.back()->features.size(), 0.0);
        for (int i = days_active - window; i < days_active; ++i) {
            const auto& f = rows[static_cast<size_t>(i)]->features;
            if (f.size() != fr.features.size())
                throw std::invalid_argument("aggregate_features: inconsistent feature length");
            for (size_t j = 0; j < f.size(); ++j) fr.features[j] += f[j];
        }
        for (auto& v : fr.features) v /= window;
        if (auto it = labels.find(uid); it != labels.end()) fr.label = it->second;
        out.all.push_back(fr);

        if (days_active >= min_active_days) {
            bool nonzero = false;
            for (double v : fr.label) nonzero = nonzero || v > 0.0;
            if (nonzero)
                out.training.push_back(fr);
            else
                ++out.excluded_zero_label;
        }
    }
    return out;
}

}  // namespace brec

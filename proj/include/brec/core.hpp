#pragma once
// Core domain types shared by every stage of the recommendation pipeline.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace brec {

using Vec = std::vector<double>;

// Per-user vector of item purchase intensities. Only its direction matters
// downstream; entries are nonnegative and at least one must be positive
// before it enters any cosine computation.
using PreferenceVector = Vec;

struct ItemCatalog {
    int dim = 13;
    std::vector<std::string> names;   // size dim
    std::vector<int> min_qty;         // size dim, >= 0
    std::vector<int> max_qty;         // size dim, >= max(1, min_qty)

    static ItemCatalog with_defaults(int dim, int min_qty = 0, int max_qty = 99);
    void validate() const;
};

struct Bundle {
    std::string id;
    std::vector<int> volumes;

    Vec as_vec() const {
        Vec v(volumes.size());
        for (size_t i = 0; i < volumes.size(); ++i) v[i] = static_cast<double>(volumes[i]);
        return v;
    }
};

struct BundlePool {
    std::vector<Bundle> bundles;

    void validate() const;
    const Bundle* find(const std::string& id) const;
    int index_of(const std::string& id) const;   // -1 when absent
};

struct UserRecord {
    int64_t user_id = 0;
    std::vector<double> archetype_weights;  // simplex over latent archetypes
    double activity_rate = 0.0;             // daily activity probability
    double spend_scale = 1.0;               // positive
    int days_active = 0;
};

struct FeatureRow {
    int64_t user_id = 0;
    Vec features;
    int agg_days = 1;
    PreferenceVector label;
};

enum class PolicyTag { model, contaminated_random, pure_random, heuristic, fallback };

const char* to_string(PolicyTag tag);
PolicyTag policy_tag_from_string(const std::string& s);

struct EventRecord {
    int day = 0;
    int64_t user_id = 0;
    std::string bundle_id;
    bool impression = false;
    bool clicked = false;
    bool taken = false;
    PolicyTag policy_tag = PolicyTag::model;
};

// Append-only event log. Every write checks taken => clicked => impression.
class EventLog {
public:
    void append(EventRecord rec);
    const std::vector<EventRecord>& records() const { return records_; }
    size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    void reserve(size_t n) { records_.reserve(n); }

private:
    std::vector<EventRecord> records_;
};

void validate_preference(const PreferenceVector& p, int dim);

}  // namespace brec

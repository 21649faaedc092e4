#include "brec/core.hpp"

#include <cstdio>

namespace brec {

ItemCatalog ItemCatalog::with_defaults(int dim, int min_qty, int max_qty) {
    ItemCatalog cat;
    cat.dim = dim;
    cat.names.resize(dim);
    for (int i = 0; i < dim; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "item_%02d", i);
        cat.names[i] = buf;
    }
    cat.min_qty.assign(dim, min_qty);
    cat.max_qty.assign(dim, max_qty);
    cat.validate();
    return cat;
}

void ItemCatalog::validate() const {
    if (dim < 2) throw std::invalid_argument("ItemCatalog: dim must be >= 2");
    if (static_cast<int>(names.size()) != dim ||
        static_cast<int>(min_qty.size()) != dim ||
        static_cast<int>(max_qty.size()) != dim)
        throw std::invalid_argument("ItemCatalog: field lengths must equal dim");
    for (int i = 0; i < dim; ++i) {
        if (min_qty[i] < 0) throw std::invalid_argument("ItemCatalog: min_qty must be >= 0");
        if (max_qty[i] < std::max(1, min_qty[i]))
            throw std::invalid_argument("ItemCatalog: max_qty must be >= max(1, min_qty)");
    }
}

void BundlePool::validate() const {
    if (bundles.empty()) throw std::invalid_argument("BundlePool: pool is empty");
    for (size_t i = 0; i < bundles.size(); ++i) {
        bool nonzero = false;
        for (int v : bundles[i].volumes)
            if (v > 0) nonzero = true;
        if (!nonzero) throw std::invalid_argument("BundlePool: bundle " + bundles[i].id +
                                                  " has no positive volume");
        for (size_t j = i + 1; j < bundles.size(); ++j)
            if (bundles[i].id == bundles[j].id)
                throw std::invalid_argument("BundlePool: duplicate bundle id " + bundles[i].id);
    }
}

const Bundle* BundlePool::find(const std::string& id) const {
    for (const auto& b : bundles)
        if (b.id == id) return &b;
    return nullptr;
}

int BundlePool::index_of(const std::string& id) const {
    for (size_t i = 0; i < bundles.size(); ++i)
        if (bundles[i].id == id) return static_cast<int>(i);
    return -1;
}

const char* to_string(PolicyTag tag) {
    switch (tag) {
        case PolicyTag::model: return "model";
        case PolicyTag::contaminated_random: return "contaminated_random";
        case PolicyTag::pure_random: return "pure_random";
        case PolicyTag::heuristic: return "heuristic";
        case PolicyTag::fallback: return "fallback";
    }
    return "model";
}

PolicyTag policy_tag_from_string(const std::string& s) {
    if (s == "model") return PolicyTag::model;
    if (s == "contaminated_random") return PolicyTag::contaminated_random;
    if (s == "pure_random") return PolicyTag::pure_random;
    if (s == "heuristic") return PolicyTag::heuristic;
    if (s == "fallback") return PolicyTag::fallback;
    throw std::invalid_argument("unknown policy tag: " + s);
}

void EventLog::append(EventRecord rec) {
    if (rec.taken && !rec.clicked)
        throw std::invalid_argument("EventRecord: taken without click");
    if (rec.clicked && !rec.impression)
        throw std::invalid_argument("EventRecord: click without impression");
    records_.push_back(std::move(rec));
}

void validate_preference(const PreferenceVector& p, int dim) {
    if (static_cast<int>(p.size()) != dim)
        throw std::invalid_argument("PreferenceVector: wrong length");
    bool any = false;
    for (double x : p) {
        if (x < 0.0) throw std::invalid_argument("PreferenceVector: negative entry");
        if (x > 0.0) any = true;
    }
    if (!any) throw std::domain_error("PreferenceVector: all entries are zero");
}

}  // namespace brec

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "sensorrank/error.hpp"
#include "sensorrank/ranking.hpp"
#include "sensorrank/registry.hpp"

namespace sensorrank {

struct CphfStage {
    std::string property;
    std::size_t remove_count = 0;

    friend bool operator==(const CphfStage&, const CphfStage&) = default;
};

/**
 * Pruning schedule for comparative priority-based heuristic filtering.
 *
 * Stages run in descending weight order (ties by name). Each stage removes
 * a weight-proportional share of the n_removable sensors that do not need
 * to reach the indexing step; the rounding remainder goes to the first
 * (highest-weight) stage.
 */
struct CphfPlan {
    std::vector<CphfStage> stages;
    std::size_t candidate_count = 0;
    std::size_t n_keep = 0;
    std::size_t n_removable = 0;
    double margin_percent = 0.0;

    friend bool operator==(const CphfPlan&, const CphfPlan&) = default;
};

/// Size of the pool kept for indexing: ceil(n * (1 + M/100)), capped at the
/// candidate count.
inline std::size_t keep_count(std::size_t candidate_count, std::size_t n_requested, double margin_percent) {
    // n * (100 + M) / 100 keeps integer margins exact (1 + M/100 is not).
    double pool = std::ceil(static_cast<double>(n_requested) * (100.0 + margin_percent) / 100.0);
    if (pool >= static_cast<double>(candidate_count)) return candidate_count;
    return static_cast<std::size_t>(pool);
}

inline CphfPlan build_plan(std::size_t candidate_count, const WeightVector& weights, std::size_t n_requested,
                           double margin_percent) {
    if (candidate_count < 1) throw InvalidArgument("candidate count must be positive");
    if (n_requested < 1) throw InvalidArgument("n must be at least 1");
    if (!(margin_percent >= 0.0) || !std::isfinite(margin_percent)) {
        throw InvalidArgument("margin of error must be a finite non-negative percentage");
    }
    if (weights.properties.size() != weights.weights.size() || weights.properties.empty()) {
        throw DimensionMismatch("weight vector is empty or malformed");
    }

    CphfPlan plan;
    plan.candidate_count = candidate_count;
    plan.margin_percent = margin_percent;
    plan.n_keep = keep_count(candidate_count, n_requested, margin_percent);
    plan.n_removable = candidate_count - plan.n_keep;

    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (weights.weights[a] != weights.weights[b]) return weights.weights[a] > weights.weights[b];
        return weights.properties[a] < weights.properties[b];
    });

    const double removable = static_cast<double>(plan.n_removable);
    std::size_t assigned = 0;
    for (std::size_t i : order) {
        // The small offset absorbs products like 0.3 * 90 = 26.999...
        auto share = static_cast<std::size_t>(std::floor(weights.weights[i] * removable + 1e-9));
        share = std::min(share, plan.n_removable - assigned);
        assigned += share;
        plan.stages.push_back({weights.properties[i], share});
    }
    plan.stages.front().remove_count += plan.n_removable - assigned;
    return plan;
}

namespace detail {

/// Sort key of one raw value: smaller is better, missing sorts last.
inline double stage_key(double v, bool higher_is_better) {
    if (is_missing(v)) return std::numeric_limits<double>::infinity();
    return higher_is_better ? -v : v;
}

inline constexpr std::size_t kSampleSize = 1024;

struct KeyedIndex {
    double key;
    std::size_t index;
};

}  // namespace detail

/**
 * Applies the plan: for each stage, orders the survivors best-first on the
 * stage's raw property and drops the `remove_count` worst. Only the
 * survivor set matters between stages, so a selection replaces the full
 * sort. Survivors are returned in their input order.
 *
 * Pruning always aims at the best corner; ideal-point overrides are not
 * consulted here.
 */
inline std::vector<const SensorRecord*> heuristic_filter(std::span<const SensorRecord* const> candidates,
                                                         const PropertySchema& schema, const WeightVector& weights,
                                                         const CphfPlan& plan) {
    if (plan.candidate_count != candidates.size()) {
        throw PlanMismatch("plan was built for " + std::to_string(plan.candidate_count) + " candidates, got " +
                           std::to_string(candidates.size()));
    }
    std::size_t total = 0;
    for (const auto& st : plan.stages) {
        if (!weights.weight(st.property)) throw PlanMismatch("stage property '" + st.property + "' is not weighted");
        total += st.remove_count;
    }
    if (plan.stages.size() != weights.size() || total != plan.n_removable ||
        plan.n_keep + plan.n_removable != plan.candidate_count) {
        throw PlanMismatch("plan counts are inconsistent with the weight vector");
    }

    struct Active {
        bool higher_is_better;
        std::size_t remove_count;
    };
    std::vector<std::size_t> props;
    std::vector<Active> active;
    for (const auto& st : plan.stages) {
        if (st.remove_count == 0) continue;
        const std::size_t p = schema.index_of(st.property);
        props.push_back(p);
        active.push_back({schema[p].polarity == Polarity::HigherIsBetter, st.remove_count});
    }
    if (active.empty()) return {candidates.begin(), candidates.end()};

    // Stage keys in one sensor-major pass, stored column by column.
    const std::size_t n = candidates.size();
    std::vector<double> keys(active.size() * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* values = candidates[i]->values.data();
        for (std::size_t k = 0; k < active.size(); ++k) {
            keys[k * n + i] = detail::stage_key(values[props[k]], active[k].higher_is_better);
        }
    }

    // Pool of candidate indices, kept ascending so survivors stay in input order.
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<detail::KeyedIndex> scratch;
    for (std::size_t k = 0; k < active.size(); ++k) {
        const double* column = keys.data() + k * n;
        auto better = [&](const detail::KeyedIndex& a, const detail::KeyedIndex& b) {
            if (a.key != b.key) return a.key < b.key;
            return candidates[a.index]->id < candidates[b.index]->id;
        };
        const std::size_t keep = pool.size() - active[k].remove_count;
        if (keep == 0) {
            pool.clear();
            break;
        }
        const std::size_t remove = active[k].remove_count;
        // The removed entries are the `remove` worst; every one of them has a
        // key >= any threshold that at least `remove` keys reach. Estimate such
        // a threshold from a sample so only the tail needs selecting.
        double threshold = -std::numeric_limits<double>::infinity();
        if (pool.size() > 4 * detail::kSampleSize && remove < pool.size() / 4) {
            std::vector<double> sample(detail::kSampleSize);
            const std::size_t stride = pool.size() / sample.size();
            for (std::size_t j = 0; j < sample.size(); ++j) sample[j] = column[pool[j * stride]];
            double fraction = static_cast<double>(remove) / static_cast<double>(pool.size());
            auto cut = static_cast<std::size_t>(std::ceil(fraction * 1.5 * static_cast<double>(sample.size()))) + 16;
            cut = std::min(cut, sample.size());
            std::nth_element(sample.begin(), sample.end() - static_cast<std::ptrdiff_t>(cut), sample.end());
            threshold = *(sample.end() - static_cast<std::ptrdiff_t>(cut));
        }
        scratch.clear();
        for (std::size_t i : pool) {
            if (column[i] >= threshold) scratch.push_back({column[i], i});
        }
        if (scratch.size() < remove) {
            scratch.clear();
            for (std::size_t i : pool) scratch.push_back({column[i], i});
        }
        // Best of the removed entries; entries strictly better than it survive.
        auto nth = scratch.end() - static_cast<std::ptrdiff_t>(remove);
        std::nth_element(scratch.begin(), nth, scratch.end(), better);
        const detail::KeyedIndex pivot = *nth;
        std::size_t out = 0;
        for (std::size_t j = 0; j < pool.size(); ++j) {
            detail::KeyedIndex e{column[pool[j]], pool[j]};
            if (better(e, pivot)) pool[out++] = pool[j];
        }
        pool.resize(out);
    }

    std::vector<const SensorRecord*> kept;
    kept.reserve(pool.size());
    for (std::size_t i : pool) kept.push_back(candidates[i]);
    return kept;
}

/// Fraction of the exact top-N ids that the heuristic top-N also contains.
inline double cphf_accuracy(const RankedResult& heuristic_topn, const RankedResult& exact_topn) {
    if (exact_topn.empty()) return 1.0;
    std::unordered_set<std::string_view> heuristic;
    for (const auto& e : heuristic_topn.entries) heuristic.insert(e.id());
    std::size_t hits = 0;
    for (const auto& e : exact_topn.entries) hits += heuristic.count(e.id());
    return static_cast<double>(hits) / static_cast<double>(exact_topn.size());
}

}  // namespace sensorrank

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "sensorrank/cphf.hpp"
#include "sensorrank/error.hpp"
#include "sensorrank/query.hpp"
#include "sensorrank/ranking.hpp"
#include "sensorrank/registry.hpp"

namespace sensorrank {

struct SearchRequest {
    std::string query_text;
    PriorityProfile profile;
    bool use_cphf = false;
    double margin_percent = 0.0;
};

/// Wall time of each pipeline phase in microseconds.
struct PhaseTimings {
    double filter = 0.0;
    double normalize = 0.0;
    double cphf = 0.0;
    double index = 0.0;
    double rank = 0.0;
    double select = 0.0;
    double total = 0.0;
};

struct SearchResponse {
    RankedResult results;
    PhaseTimings timings;
    std::size_t n_requested = 0;
    std::size_t candidates_before_cphf = 0;
    std::size_t candidates_indexed = 0;
    /// Fewer sensors matched than requested; results are the unranked matches.
    bool truncated = false;
    /// No property was checked; results are the first N matches, unranked.
    bool no_checked_properties = false;
    std::uint64_t snapshot_version = 0;
    WeightVector weights;
    std::optional<CphfPlan> plan;
};

namespace detail {

class PhaseClock {
public:
    using clock = std::chrono::steady_clock;

    PhaseClock() : last_(clock::now()) {}

    /// Microseconds since the previous lap (or construction).
    double lap() {
        auto now = clock::now();
        double us = std::chrono::duration<double, std::micro>(now - last_).count();
        last_ = now;
        return us;
    }

private:
    clock::time_point last_;
};

inline RankedResult unranked(const CandidateSet& candidates, std::size_t limit) {
    RankedResult r;
    const std::size_t count = std::min(limit, candidates.size());
    r.entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) r.entries.push_back({candidates[i], 0.0});
    return r;
}

}  // namespace detail

/**
 * Runs the full selection flow against one snapshot:
 *
 *  1. filter on the hard requirements;
 *  2. if fewer than N sensors remain, return them as they are (truncated);
 *  3. derive weights from the priority profile;
 *  4. optionally prune with the heuristic filter;
 *  5. normalize the survivors, compute CPWI, rank and keep the top N.
 *
 * A profile with nothing checked yields the first N matches unranked.
 */
inline SearchResponse search(const RegistrySnapshot& snapshot, const PointQuery& query, const SearchRequest& request) {
    if (!(request.margin_percent >= 0.0) || !std::isfinite(request.margin_percent)) {
        throw InvalidArgument("margin_percent must be a finite non-negative number");
    }
    request.profile.validate();
    validate(query);

    SearchResponse resp;
    resp.n_requested = query.n;
    resp.snapshot_version = snapshot.version();
    detail::PhaseClock clock;
    detail::PhaseClock total;

    CandidateSet filtered = evaluate_filter(snapshot, query);
    resp.timings.filter = clock.lap();
    resp.candidates_before_cphf = filtered.size();

    if (filtered.size() < query.n) {
        resp.truncated = true;
        resp.results = detail::unranked(filtered, filtered.size());
        resp.timings.total = total.lap();
        return resp;
    }

    try {
        resp.weights = compute_weights(request.profile);
    } catch (const NoCheckedProperties&) {
        resp.no_checked_properties = true;
        resp.results = detail::unranked(filtered, query.n);
        resp.timings.total = total.lap();
        return resp;
    }
    for (const auto& name : resp.weights.properties) snapshot.schema().index_of(name);
    clock.lap();

    if (request.use_cphf) {
        resp.plan = build_plan(filtered.size(), resp.weights, query.n, request.margin_percent);
        filtered = heuristic_filter(filtered, snapshot.schema(), resp.weights, *resp.plan);
        resp.timings.cphf = clock.lap();
    }
    resp.candidates_indexed = filtered.size();

    NormalizedSpace space =
        normalize(filtered, snapshot.schema(), resp.weights.properties, request.profile.ideal_overrides());
    resp.timings.normalize = clock.lap();

    RankedResult ranked = index_sensors(space, resp.weights);
    resp.timings.index = clock.lap();

    sort_ranked(ranked);
    resp.timings.rank = clock.lap();

    resp.results = select_top_n(std::move(ranked), query.n);
    resp.timings.select = clock.lap();
    resp.timings.total = total.lap();
    return resp;
}

inline SearchResponse search(const RegistrySnapshot& snapshot, const SearchRequest& request) {
    return search(snapshot, parse_query(request.query_text), request);
}

}  // namespace sensorrank

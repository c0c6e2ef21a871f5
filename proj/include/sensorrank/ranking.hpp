#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sensorrank/error.hpp"
#include "sensorrank/registry.hpp"
#include "sensorrank/schema.hpp"

namespace sensorrank {

struct PriorityEntry {
    bool checked = false;
    int slider = 0;
    /// Ideal coordinate in normalized, polarity-flipped space (1 = best).
    std::optional<double> ideal;

    friend bool operator==(const PriorityEntry&, const PriorityEntry&) = default;
};

/// User priorities as captured from check-boxes and comparative sliders.
struct PriorityProfile {
    int scale = 100;
    std::map<std::string, PriorityEntry> entries;

    void validate() const {
        if (scale < 1) throw InvalidArgument("scale must be a positive integer");
        for (const auto& [name, e] : entries) {
            if (e.slider < 0 || e.slider > scale) {
                throw InvalidArgument("slider of '" + name + "' is outside [0, scale]");
            }
            if (e.ideal && !(*e.ideal >= 0.0 && *e.ideal <= 1.0)) {
                throw InvalidArgument("ideal of '" + name + "' is outside [0, 1]");
            }
        }
    }

    std::vector<std::string> checked() const {
        std::vector<std::string> out;
        for (const auto& [name, e] : entries) {
            if (e.checked) out.push_back(name);
        }
        return out;
    }

    std::map<std::string, double> ideal_overrides() const {
        std::map<std::string, double> out;
        for (const auto& [name, e] : entries) {
            if (e.checked && e.ideal) out.emplace(name, *e.ideal);
        }
        return out;
    }
};

/// Weights over the checked properties, in profile (name) order. Sums to 1.
struct WeightVector {
    std::vector<std::string> properties;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }

    std::optional<double> weight(std::string_view property) const {
        for (std::size_t i = 0; i < properties.size(); ++i) {
            if (properties[i] == property) return weights[i];
        }
        return std::nullopt;
    }

    friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

/// W_i = slider_i / sum of checked sliders; uniform when every checked slider is 0.
inline WeightVector compute_weights(const PriorityProfile& profile) {
    profile.validate();
    WeightVector w;
    long long total = 0;
    for (const auto& [name, e] : profile.entries) {
        if (!e.checked) continue;
        w.properties.push_back(name);
        total += e.slider;
    }
    if (w.properties.empty()) throw NoCheckedProperties();
    const double k = static_cast<double>(w.properties.size());
    for (const auto& name : w.properties) {
        const auto& e = profile.entries.at(name);
        w.weights.push_back(total == 0 ? 1.0 / k : static_cast<double>(e.slider) / static_cast<double>(total));
    }
    return w;
}

/**
 * Candidates plotted in the unit hypercube, one dimension per checked
 * property. Coordinates are stored row-major: sensor i occupies
 * coords[i * dims() .. (i + 1) * dims()). After the polarity flip a
 * coordinate of 1 is always the best possible value.
 */
struct NormalizedSpace {
    std::vector<std::string> properties;
    std::vector<const SensorRecord*> sensors;
    std::vector<double> coords;
    std::vector<double> ideal;
    std::vector<Bounds> bounds_used;

    std::size_t dims() const noexcept { return properties.size(); }
    std::size_t size() const noexcept { return sensors.size(); }

    std::span<const double> point(std::size_t i) const {
        return std::span<const double>(coords).subspan(i * dims(), dims());
    }
};

/**
 * Min-max normalization of the candidates over the `checked` properties.
 *
 * The range of a property is its declared schema bounds, otherwise the
 * observed min/max over the candidates themselves. Values outside the range
 * are clamped, LowerIsBetter dimensions are flipped, a degenerate range maps
 * every present value to 0.5 and a missing value maps to 0 (the worst).
 * The ideal point is all ones unless `ideal_overrides` says otherwise.
 */
inline NormalizedSpace normalize(std::span<const SensorRecord* const> candidates, const PropertySchema& schema,
                                 std::span<const std::string> checked,
                                 const std::map<std::string, double>& ideal_overrides = {}) {
    if (candidates.empty()) throw EmptyCandidates();
    NormalizedSpace space;
    const std::size_t dims = checked.size();
    space.properties.assign(checked.begin(), checked.end());
    space.sensors.assign(candidates.begin(), candidates.end());
    space.ideal.assign(dims, 1.0);
    space.bounds_used.resize(dims);
    space.coords.resize(candidates.size() * dims);

    struct Column {
        std::size_t p;
        bool observe;
        bool any;
        bool flip;
    };
    std::vector<Column> cols(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        const std::size_t p = schema.index_of(checked[d]);
        const PropertyDef& def = schema[p];
        if (auto it = ideal_overrides.find(checked[d]); it != ideal_overrides.end()) {
            if (!(it->second >= 0.0 && it->second <= 1.0)) {
                throw InvalidArgument("ideal of '" + checked[d] + "' is outside [0, 1]");
            }
            space.ideal[d] = it->second;
        }
        cols[d] = {p, !def.bounds.has_value(), false, def.polarity == Polarity::LowerIsBetter};
        space.bounds_used[d] = def.bounds.value_or(Bounds{0.0, 0.0});
    }

    // Sensor-major passes: each record's values are touched once per pass.
    if (std::any_of(cols.begin(), cols.end(), [](const Column& c) { return c.observe; })) {
        for (const SensorRecord* s : candidates) {
            for (std::size_t d = 0; d < dims; ++d) {
                auto& c = cols[d];
                double v = s->values[c.p];
                if (!c.observe || is_missing(v)) continue;
                auto& range = space.bounds_used[d];
                if (!c.any) {
                    range = {v, v};
                    c.any = true;
                } else {
                    range.min = std::min(range.min, v);
                    range.max = std::max(range.max, v);
                }
            }
        }
    }

    std::vector<double> lo(dims), span(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        lo[d] = space.bounds_used[d].min;
        span[d] = space.bounds_used[d].max - space.bounds_used[d].min;
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double* values = candidates[i]->values.data();
        double* row = space.coords.data() + i * dims;
        for (std::size_t d = 0; d < dims; ++d) {
            double v = values[cols[d].p];
            double c;
            if (is_missing(v)) {
                c = 0.0;
            } else if (!(span[d] > 0.0)) {
                c = 0.5;
            } else {
                double t = std::clamp((v - lo[d]) / span[d], 0.0, 1.0);
                c = cols[d].flip ? 1.0 - t : t;
            }
            row[d] = c;
        }
    }
    return space;
}

/// Weighted Euclidean distance from `point` to `ideal`; smaller is better.
inline double compute_cpwi(std::span<const double> point, std::span<const double> ideal,
                           std::span<const double> weights) {
    if (point.size() != ideal.size() || point.size() != weights.size()) {
        throw DimensionMismatch("point, ideal and weights differ in dimension");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        double d = ideal[i] - point[i];
        sum += weights[i] * (d * d);
    }
    return std::sqrt(sum);
}

inline double compute_cpwi(std::span<const double> point, std::span<const double> ideal, const WeightVector& weights) {
    return compute_cpwi(point, ideal, std::span<const double>(weights.weights));
}

struct RankedEntry {
    const SensorRecord* sensor = nullptr;
    double cpwi = 0.0;

    const std::string& id() const { return sensor->id; }
};

/// Ascending CPWI, ties broken by ascending sensor id.
struct RankedResult {
    std::vector<RankedEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.id());
        return out;
    }
};

inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.cpwi != b.cpwi) return a.cpwi < b.cpwi;
    return a.sensor->id < b.sensor->id;
}

/// CPWI of every point in the space, in space order (unsorted).
inline RankedResult index_sensors(const NormalizedSpace& space, const WeightVector& weights) {
    if (space.properties != weights.properties) {
        throw DimensionMismatch("weight vector dimensions differ from the normalized space");
    }
    RankedResult out;
    out.entries.resize(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        out.entries[i] = {space.sensors[i], compute_cpwi(space.point(i), space.ideal, weights)};
    }
    return out;
}

inline void sort_ranked(RankedResult& result) {
    std::sort(result.entries.begin(), result.entries.end(), ranks_before);
}

inline RankedResult rank_sensors(const NormalizedSpace& space, const WeightVector& weights) {
    auto result = index_sensors(space, weights);
    sort_ranked(result);
    return result;
}

inline RankedResult select_top_n(RankedResult ranked, std::size_t n) {
    if (n < 1) throw InvalidArgument("n must be at least 1");
    if (ranked.entries.size() > n) ranked.entries.resize(n);
    return ranked;
}

}  // namespace sensorrank

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sensorrank/error.hpp"

namespace sensorrank {

enum class Polarity { HigherIsBetter, LowerIsBetter };

/// Closed value range in a property's native units. min < max when declared.
struct Bounds {
    double min = 0.0;
    double max = 1.0;

    friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct PropertyDef {
    std::string name;
    Polarity polarity = Polarity::HigherIsBetter;
    std::optional<Bounds> bounds;
    std::string description;

    friend bool operator==(const PropertyDef&, const PropertyDef&) = default;
};

/**
 * Ordered, non-empty list of context properties.
 *
 * Position in the schema is the column index used by SensorRecord::values,
 * so a schema is fixed for the lifetime of any snapshot built on it.
 * Names are case-sensitive and pairwise distinct.
 */
class PropertySchema {
public:
    explicit PropertySchema(std::vector<PropertyDef> properties) : properties_(std::move(properties)) {
        if (properties_.empty()) {
            throw InvalidArgument("schema needs at least one property");
        }
        index_.reserve(properties_.size());
        for (std::size_t i = 0; i < properties_.size(); ++i) {
            const auto& p = properties_[i];
            if (p.name.empty()) {
                throw InvalidArgument("property name must not be empty");
            }
            if (p.bounds && !(p.bounds->min < p.bounds->max)) {
                throw InvalidArgument("property '" + p.name + "' has bounds with min >= max");
            }
            if (!index_.emplace(p.name, i).second) {
                throw InvalidArgument("duplicate property name '" + p.name + "'");
            }
        }
    }

    std::size_t size() const noexcept { return properties_.size(); }
    const std::vector<PropertyDef>& properties() const noexcept { return properties_; }
    const PropertyDef& operator[](std::size_t i) const { return properties_[i]; }

    std::optional<std::size_t> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index_of(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw UnknownProperty(std::string(name));
    }

    bool contains(std::string_view name) const { return find(name).has_value(); }

    /// Schema restricted to its first `count` properties.
    PropertySchema prefix(std::size_t count) const {
        return PropertySchema({properties_.begin(), properties_.begin() + std::min(count, size())});
    }

    friend bool operator==(const PropertySchema& a, const PropertySchema& b) {
        return a.properties_ == b.properties_;
    }

private:
    std::vector<PropertyDef> properties_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::array<std::string_view, 30> kDefaultPropertyNames = {
    "availability",
    "accuracy",
    "reliability",
    "response time",
    "frequency",
    "sensitivity",
    "measurement range",
    "selectivity",
    "precision",
    "latency",
    "drift",
    "resolution",
    "detection limit",
    "operating power range",
    "system (sensor) lifetime",
    "battery life",
    "security",
    "accessibility",
    "robustness",
    "exception handling",
    "interoperability",
    "configurability",
    "user satisfaction rating",
    "capacity",
    "throughput",
    "cost of data transmission",
    "cost of data generation",
    "data ownership cost",
    "bandwidth",
    "trust",
};

/// The 30-property context framework. Costs, latency and response time
/// are LowerIsBetter and carry no declared bounds (normalized against the
/// observed range); drift and detection limit are LowerIsBetter on [0,1].
inline PropertySchema default_schema() {
    constexpr std::array<std::string_view, 7> lower_is_better = {
        "response time", "latency", "drift", "detection limit",
        "cost of data transmission", "cost of data generation", "data ownership cost",
    };
    constexpr std::array<std::string_view, 5> unbounded = {
        "response time", "latency",
        "cost of data transmission", "cost of data generation", "data ownership cost",
    };
    auto in = [](auto& list, std::string_view name) {
        return std::find(list.begin(), list.end(), name) != list.end();
    };

    std::vector<PropertyDef> defs;
    defs.reserve(kDefaultPropertyNames.size());
    for (auto name : kDefaultPropertyNames) {
        PropertyDef def;
        def.name = std::string(name);
        def.polarity = in(lower_is_better, name) ? Polarity::LowerIsBetter : Polarity::HigherIsBetter;
        if (!in(unbounded, name)) def.bounds = Bounds{0.0, 1.0};
        defs.push_back(std::move(def));
    }
    return PropertySchema(std::move(defs));
}

/// Default schema for `count` properties: the first entries of the default
/// framework, extended with generic HigherIsBetter [0,1] properties when
/// `count` exceeds 30.
inline PropertySchema synthetic_schema(std::size_t count) {
    if (count == 0) throw InvalidArgument("property count must be positive");
    auto base = default_schema();
    if (count <= base.size()) return base.prefix(count);
    auto defs = base.properties();
    for (std::size_t i = defs.size(); i < count; ++i) {
        defs.push_back({"property " + std::to_string(i + 1), Polarity::HigherIsBetter, Bounds{0.0, 1.0}, {}});
    }
    return PropertySchema(std::move(defs));
}

}  // namespace sensorrank

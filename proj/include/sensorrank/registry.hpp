#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sensorrank/error.hpp"
#include "sensorrank/schema.hpp"

namespace sensorrank {

/// Marker stored in SensorRecord::values for an absent property value.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

struct Location {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const Location&, const Location&) = default;
};

/// One sensor. `values` is aligned with the snapshot schema: values[i] is the
/// raw value of schema property i, or kMissing.
struct SensorRecord {
    std::string id;
    std::string type;
    Location location;
    std::vector<double> values;

    std::optional<double> value(std::size_t property) const {
        double v = values[property];
        if (is_missing(v)) return std::nullopt;
        return v;
    }

    friend bool operator==(const SensorRecord& a, const SensorRecord& b) {
        if (a.id != b.id || a.type != b.type || !(a.location == b.location)) return false;
        if (a.values.size() != b.values.size()) return false;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            bool ma = is_missing(a.values[i]), mb = is_missing(b.values[i]);
            if (ma != mb || (!ma && a.values[i] != b.values[i])) return false;
        }
        return true;
    }
};

/**
 * Immutable, versioned view of the catalog.
 *
 * All records are validated on construction: ids are unique and non-empty,
 * coordinates are in range, and every record has exactly one value slot per
 * schema property. The per-property observed range over present values is
 * recorded; it serves as the provisional range of properties whose schema
 * declares no bounds.
 *
 * Snapshots are not copyable (the id index refers into the record storage);
 * share them through std::shared_ptr<const RegistrySnapshot>.
 */
class RegistrySnapshot {
public:
    RegistrySnapshot(PropertySchema schema, std::vector<SensorRecord> sensors, std::uint64_t version)
        : schema_(std::move(schema)), sensors_(std::move(sensors)), version_(version) {
        by_id_.reserve(sensors_.size());
        observed_.assign(schema_.size(), std::nullopt);
        for (std::size_t i = 0; i < sensors_.size(); ++i) {
            const auto& s = sensors_[i];
            if (s.id.empty()) throw InvalidArgument("sensor id must not be empty");
            if (!(s.location.lat >= -90.0 && s.location.lat <= 90.0) ||
                !(s.location.lon >= -180.0 && s.location.lon <= 180.0)) {
                throw InvalidArgument("sensor '" + s.id + "' has a location out of range");
            }
            if (s.values.size() != schema_.size()) {
                throw InvalidArgument("sensor '" + s.id + "' does not match the schema width");
            }
            for (std::size_t p = 0; p < s.values.size(); ++p) {
                double v = s.values[p];
                if (is_missing(v)) continue;
                if (!std::isfinite(v)) throw InvalidArgument("sensor '" + s.id + "' has a non-finite value");
                auto& r = observed_[p];
                if (!r) {
                    r = Bounds{v, v};
                } else {
                    r->min = std::min(r->min, v);
                    r->max = std::max(r->max, v);
                }
            }
            if (!by_id_.emplace(std::string_view(s.id), i).second) throw DuplicateId(s.id);
        }
    }

    RegistrySnapshot(const RegistrySnapshot&) = delete;
    RegistrySnapshot& operator=(const RegistrySnapshot&) = delete;
    RegistrySnapshot(RegistrySnapshot&&) = default;
    RegistrySnapshot& operator=(RegistrySnapshot&&) = default;

    const PropertySchema& schema() const noexcept { return schema_; }
    std::span<const SensorRecord> sensors() const noexcept { return sensors_; }
    std::size_t size() const noexcept { return sensors_.size(); }
    std::uint64_t version() const noexcept { return version_; }

    const SensorRecord* find(std::string_view id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &sensors_[it->second];
    }

    /// Min/max over present values of property `p`; nullopt when no sensor has one.
    const std::optional<Bounds>& observed_range(std::size_t p) const { return observed_[p]; }

    std::optional<double> value(const SensorRecord& s, std::string_view property) const {
        return s.value(schema_.index_of(property));
    }

private:
    PropertySchema schema_;
    std::vector<SensorRecord> sensors_;
    std::uint64_t version_;
    std::unordered_map<std::string_view, std::size_t> by_id_;
    std::vector<std::optional<Bounds>> observed_;
};

enum class CatalogFormat { CSV, JSONLines };

namespace detail {

inline std::optional<double> parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_number(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Splits one CSV record. Quoted fields may contain commas and doubled
/// quotes; embedded line breaks are not supported.
inline std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            if (!field.empty() || was_quoted) return std::nullopt;
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else {
            if (was_quoted) return std::nullopt;
            field.push_back(c);
        }
    }
    if (quoted) return std::nullopt;
    fields.push_back(std::move(field));
    return fields;
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

inline bool blank(std::string_view s) {
    return s.find_first_not_of(" \t") == std::string_view::npos;
}

inline std::vector<SensorRecord> read_csv(std::istream& in, const PropertySchema& schema) {
    std::string line;
    if (!read_line(in, line)) throw MalformedRow(1, "missing header row");
    auto header = split_csv_line(line);
    if (!header || header->size() < 4) throw MalformedRow(1, "header must start with id,type,lat,lon");
    constexpr std::string_view meta[] = {"id", "type", "lat", "lon"};
    for (std::size_t i = 0; i < 4; ++i) {
        if ((*header)[i] != meta[i]) throw MalformedRow(1, "header must start with id,type,lat,lon");
    }
    std::vector<std::size_t> column_property;
    std::vector<bool> seen(schema.size(), false);
    for (std::size_t i = 4; i < header->size(); ++i) {
        std::size_t p = schema.index_of((*header)[i]);
        if (seen[p]) throw MalformedRow(1, "duplicate column '" + (*header)[i] + "'");
        seen[p] = true;
        column_property.push_back(p);
    }

    std::vector<SensorRecord> records;
    std::size_t line_no = 1;
    while (read_line(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        auto fields = split_csv_line(line);
        if (!fields) throw MalformedRow(line_no, "unbalanced quotes");
        if (fields->size() != header->size()) {
            throw MalformedRow(line_no, "expected " + std::to_string(header->size()) + " fields, got " +
                                            std::to_string(fields->size()));
        }
        SensorRecord r;
        r.id = std::move((*fields)[0]);
        r.type = std::move((*fields)[1]);
        if (r.id.empty()) throw MalformedRow(line_no, "empty id");
        auto lat = parse_number((*fields)[2]);
        auto lon = parse_number((*fields)[3]);
        if (!lat || !lon || *lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
            throw MalformedRow(line_no, "invalid location");
        }
        r.location = {*lat, *lon};
        r.values.assign(schema.size(), kMissing);
        for (std::size_t c = 0; c < column_property.size(); ++c) {
            const auto& cell = (*fields)[c + 4];
            if (blank(cell)) continue;
            auto v = parse_number(cell);
            if (!v) throw MalformedRow(line_no, "invalid number '" + cell + "'");
            r.values[column_property[c]] = *v;
        }
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<SensorRecord> read_jsonl(std::istream& in, const PropertySchema& schema) {
    using nlohmann::json;
    std::vector<SensorRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (read_line(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw MalformedRow(line_no, "not a JSON object");
        auto str = [&](const char* key) -> std::string {
            auto it = j.find(key);
            if (it == j.end() || !it->is_string()) throw MalformedRow(line_no, std::string("missing string '") + key + "'");
            return it->get<std::string>();
        };
        auto num = [&](const char* key) -> double {
            auto it = j.find(key);
            if (it == j.end() || !it->is_number()) throw MalformedRow(line_no, std::string("missing number '") + key + "'");
            return it->get<double>();
        };
        SensorRecord r;
        r.id = str("id");
        r.type = str("type");
        if (r.id.empty()) throw MalformedRow(line_no, "empty id");
        r.location = {num("lat"), num("lon")};
        if (r.location.lat < -90.0 || r.location.lat > 90.0 || r.location.lon < -180.0 || r.location.lon > 180.0) {
            throw MalformedRow(line_no, "invalid location");
        }
        r.values.assign(schema.size(), kMissing);
        if (auto it = j.find("values"); it != j.end()) {
            if (!it->is_object()) throw MalformedRow(line_no, "'values' must be an object");
            for (const auto& [name, v] : it->items()) {
                std::size_t p = schema.index_of(name);
                if (v.is_null()) continue;
                if (!v.is_number() || !std::isfinite(v.get<double>())) {
                    throw MalformedRow(line_no, "value of '" + name + "' is not a finite number");
                }
                r.values[p] = v.get<double>();
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace detail

/// Parses a whole catalog. Any error rejects the entire input; no partial
/// snapshot is ever produced.
inline RegistrySnapshot load_catalog(std::istream& source, CatalogFormat format, const PropertySchema& schema,
                                     std::uint64_t previous_version = 0) {
    auto records = format == CatalogFormat::CSV ? detail::read_csv(source, schema)
                                                : detail::read_jsonl(source, schema);
    return RegistrySnapshot(schema, std::move(records), previous_version + 1);
}

/// Writes every schema property as a column; missing values are empty cells.
inline void export_csv(const RegistrySnapshot& snapshot, std::ostream& out) {
    out << "id,type,lat,lon";
    for (const auto& p : snapshot.schema().properties()) out << ',' << detail::csv_escape(p.name);
    out << '\n';
    for (const auto& s : snapshot.sensors()) {
        out << detail::csv_escape(s.id) << ',' << detail::csv_escape(s.type) << ','
            << detail::format_number(s.location.lat) << ',' << detail::format_number(s.location.lon);
        for (double v : s.values) {
            out << ',';
            if (!is_missing(v)) out << detail::format_number(v);
        }
        out << '\n';
    }
}

inline void export_jsonl(const RegistrySnapshot& snapshot, std::ostream& out) {
    const auto& schema = snapshot.schema();
    for (const auto& s : snapshot.sensors()) {
        nlohmann::json values = nlohmann::json::object();
        for (std::size_t p = 0; p < schema.size(); ++p) {
            if (!is_missing(s.values[p])) values[schema[p].name] = s.values[p];
        }
        nlohmann::json line = {
            {"id", s.id}, {"type", s.type}, {"lat", s.location.lat}, {"lon", s.location.lon}, {"values", values}};
        out << line.dump() << '\n';
    }
}

struct BoundingBox {
    double south = -35.5;
    double west = 148.9;
    double north = -35.1;
    double east = 149.3;
};

inline constexpr std::array<std::string_view, 6> kSyntheticSensorTypes = {
    "temperature", "humidity", "pressure", "light", "soil moisture", "wind speed",
};

/**
 * Seeded synthetic catalog. Each value is uniform over the property's
 * declared bounds, [0,1] when none are declared; locations are uniform in
 * `region`. Ids are "s" followed by a zero-padded index so lexicographic and
 * generation order agree.
 */
inline RegistrySnapshot generate_synthetic(std::size_t count, const PropertySchema& schema, std::uint64_t seed,
                                           const BoundingBox& region = {}, std::uint64_t version = 1) {
    if (count == 0) throw InvalidArgument("synthetic catalog needs at least one sensor");
    if (!(region.south <= region.north) || region.south < -90.0 || region.north > 90.0 ||
        region.west < -180.0 || region.east > 180.0 || !(region.west <= region.east)) {
        throw InvalidArgument("invalid synthetic region");
    }
    std::mt19937_64 rng(seed);
    // 53 random mantissa bits; avoids the implementation-defined std distributions.
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<Bounds> ranges;
    ranges.reserve(schema.size());
    for (const auto& p : schema.properties()) ranges.push_back(p.bounds.value_or(Bounds{0.0, 1.0}));

    const std::size_t width = std::max<std::size_t>(7, std::to_string(count - 1).size());
    std::vector<SensorRecord> sensors(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto& s = sensors[i];
        auto digits = std::to_string(i);
        s.id.reserve(width + 1);
        s.id = "s";
        s.id.append(width - digits.size(), '0');
        s.id += digits;
        s.type = std::string(kSyntheticSensorTypes[rng() % kSyntheticSensorTypes.size()]);
        s.location.lat = region.south + unit() * (region.north - region.south);
        s.location.lon = region.west + unit() * (region.east - region.west);
        s.values.resize(ranges.size());
        for (std::size_t p = 0; p < ranges.size(); ++p) {
            s.values[p] = ranges[p].min + unit() * (ranges[p].max - ranges[p].min);
        }
    }
    return RegistrySnapshot(schema, std::move(sensors), version);
}

/**
 * Holder of the currently published snapshot.
 *
 * Readers take a shared_ptr and keep using it for as long as they like;
 * publishing swaps the pointer. Writers are serialized so versions increase
 * by exactly one per publish.
 */
class Registry {
public:
    std::shared_ptr<const RegistrySnapshot> current() const {
        std::lock_guard lock(read_mutex_);
        return current_;
    }

    std::uint64_t version() const {
        auto snap = current();
        return snap ? snap->version() : 0;
    }

    /// `build(next_version)` returns the new snapshot. If it throws, the
    /// published snapshot is unchanged.
    template <typename Build>
    std::shared_ptr<const RegistrySnapshot> publish(Build&& build) {
        std::lock_guard writer(write_mutex_);
        auto next = std::make_shared<const RegistrySnapshot>(build(version() + 1));
        std::lock_guard lock(read_mutex_);
        current_ = next;
        return next;
    }

    std::shared_ptr<const RegistrySnapshot> load(std::istream& source, CatalogFormat format,
                                                 const PropertySchema& schema) {
        return publish([&](std::uint64_t next) { return load_catalog(source, format, schema, next - 1); });
    }

private:
    mutable std::mutex read_mutex_;
    std::mutex write_mutex_;
    std::shared_ptr<const RegistrySnapshot> current_;
};

}  // namespace sensorrank

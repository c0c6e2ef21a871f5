#pragma once

#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sensorrank/cphf.hpp"
#include "sensorrank/error.hpp"
#include "sensorrank/pipeline.hpp"
#include "sensorrank/ranking.hpp"
#include "sensorrank/registry.hpp"
#include "sensorrank/schema.hpp"

// Structured-document forms of the public types. All readers throw
// InvalidArgument on malformed input.

namespace sensorrank {

using nlohmann::json;

inline std::string_view polarity_name(Polarity p) {
    return p == Polarity::HigherIsBetter ? "higher_is_better" : "lower_is_better";
}

inline Polarity parse_polarity(std::string_view text) {
    if (text == "higher_is_better" || text == "HigherIsBetter" || text == "higher") return Polarity::HigherIsBetter;
    if (text == "lower_is_better" || text == "LowerIsBetter" || text == "lower") return Polarity::LowerIsBetter;
    throw InvalidArgument("unknown polarity '" + std::string(text) + "'");
}

inline json parse_json_text(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("document is not valid JSON");
    return j;
}

/// {"properties": [{"name", "polarity", "min"?, "max"?, "description"?}, ...]}
/// With a snapshot, each property also carries its observed range.
inline json schema_to_json(const PropertySchema& schema, const RegistrySnapshot* snapshot = nullptr) {
    json props = json::array();
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& p = schema[i];
        json j = {{"name", p.name}, {"polarity", polarity_name(p.polarity)}};
        if (p.bounds) {
            j["min"] = p.bounds->min;
            j["max"] = p.bounds->max;
        }
        if (!p.description.empty()) j["description"] = p.description;
        if (snapshot) {
            if (const auto& r = snapshot->observed_range(i)) {
                j["observed"] = {{"min", r->min}, {"max", r->max}};
            }
        }
        props.push_back(std::move(j));
    }
    return {{"properties", std::move(props)}};
}

inline PropertySchema schema_from_json(const json& j) {
    try {
        const json& props = j.is_array() ? j : j.at("properties");
        if (!props.is_array()) throw InvalidArgument("'properties' must be an array");
        std::vector<PropertyDef> defs;
        for (const auto& p : props) {
            PropertyDef def;
            def.name = p.at("name").get<std::string>();
            def.polarity = parse_polarity(p.value("polarity", std::string("higher_is_better")));
            bool has_min = p.contains("min"), has_max = p.contains("max");
            if (has_min != has_max) throw InvalidArgument("property '" + def.name + "' needs both min and max");
            if (has_min) def.bounds = Bounds{p.at("min").get<double>(), p.at("max").get<double>()};
            def.description = p.value("description", std::string());
            defs.push_back(std::move(def));
        }
        return PropertySchema(std::move(defs));
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("invalid schema document: ") + e.what());
    }
}

inline PropertySchema parse_schema(std::string_view text) { return schema_from_json(parse_json_text(text)); }

/// {"scale": 100, "properties": {"<name>": {"checked", "slider", "ideal"?}}}
inline json profile_to_json(const PriorityProfile& profile) {
    json props = json::object();
    for (const auto& [name, e] : profile.entries) {
        json j = {{"checked", e.checked}, {"slider", e.slider}};
        if (e.ideal) j["ideal"] = *e.ideal;
        props[name] = std::move(j);
    }
    return {{"scale", profile.scale}, {"properties", std::move(props)}};
}

inline PriorityProfile profile_from_json(const json& j) {
    try {
        PriorityProfile profile;
        profile.scale = j.value("scale", 100);
        if (auto it = j.find("properties"); it != j.end()) {
            for (const auto& [name, e] : it->items()) {
                PriorityEntry entry;
                entry.checked = e.value("checked", false);
                entry.slider = e.value("slider", 0);
                if (auto ideal = e.find("ideal"); ideal != e.end() && !ideal->is_null()) {
                    entry.ideal = ideal->get<double>();
                }
                profile.entries.emplace(name, entry);
            }
        }
        profile.validate();
        return profile;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("invalid priority profile: ") + e.what());
    }
}

inline json weights_to_json(const WeightVector& w) {
    json out = json::object();
    for (std::size_t i = 0; i < w.size(); ++i) out[w.properties[i]] = w.weights[i];
    return out;
}

/// {"query", "profile", "use_cphf"?, "margin_percent"?}
inline SearchRequest request_from_json(const json& j) {
    try {
        SearchRequest req;
        req.query_text = j.value("query", std::string());
        if (auto it = j.find("profile"); it != j.end()) req.profile = profile_from_json(*it);
        req.use_cphf = j.value("use_cphf", false);
        req.margin_percent = j.value("margin_percent", 0.0);
        if (!(req.margin_percent >= 0.0)) throw InvalidArgument("margin_percent must be non-negative");
        return req;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("invalid search request: ") + e.what());
    }
}

inline json request_to_json(const SearchRequest& req) {
    return {{"query", req.query_text},
            {"profile", profile_to_json(req.profile)},
            {"use_cphf", req.use_cphf},
            {"margin_percent", req.margin_percent}};
}

inline json sensor_to_json(const SensorRecord& s, const PropertySchema& schema) {
    json values = json::object();
    for (std::size_t p = 0; p < schema.size(); ++p) {
        if (!is_missing(s.values[p])) values[schema[p].name] = s.values[p];
    }
    return {{"id", s.id}, {"type", s.type}, {"lat", s.location.lat}, {"lon", s.location.lon}, {"values", values}};
}

inline json plan_to_json(const CphfPlan& plan) {
    json stages = json::array();
    for (const auto& st : plan.stages) stages.push_back({{"property", st.property}, {"remove_count", st.remove_count}});
    return {{"stages", stages},
            {"candidate_count", plan.candidate_count},
            {"n_keep", plan.n_keep},
            {"n_removable", plan.n_removable},
            {"margin_percent", plan.margin_percent}};
}

inline json response_to_json(const SearchResponse& resp, const PropertySchema& schema) {
    json results = json::array();
    std::size_t rank = 0;
    for (const auto& e : resp.results.entries) {
        json j = sensor_to_json(*e.sensor, schema);
        j["rank"] = ++rank;
        j["cpwi"] = e.cpwi;
        results.push_back(std::move(j));
    }
    const auto& t = resp.timings;
    json out = {
        {"results", std::move(results)},
        {"phase_timings_us",
         {{"filter", t.filter},
          {"normalize", t.normalize},
          {"cphf", t.cphf},
          {"index", t.index},
          {"rank", t.rank},
          {"select", t.select},
          {"total", t.total}}},
        {"n", resp.n_requested},
        {"candidates_before_cphf", resp.candidates_before_cphf},
        {"candidates_indexed", resp.candidates_indexed},
        {"truncated", resp.truncated},
        {"no_checked_properties", resp.no_checked_properties},
        {"snapshot_version", resp.snapshot_version},
        {"weights", weights_to_json(resp.weights)},
    };
    if (resp.plan) out["cphf_plan"] = plan_to_json(*resp.plan);
    return out;
}

/// rank,id,type,lat,lon,cpwi,<every schema property>
inline std::string response_to_csv(const SearchResponse& resp, const PropertySchema& schema) {
    std::ostringstream out;
    out << "rank,id,type,lat,lon,cpwi";
    for (const auto& p : schema.properties()) out << ',' << detail::csv_escape(p.name);
    out << '\n';
    std::size_t rank = 0;
    for (const auto& e : resp.results.entries) {
        const auto& s = *e.sensor;
        out << ++rank << ',' << detail::csv_escape(s.id) << ',' << detail::csv_escape(s.type) << ','
            << detail::format_number(s.location.lat) << ',' << detail::format_number(s.location.lon) << ','
            << detail::format_number(e.cpwi);
        for (double v : s.values) {
            out << ',';
            if (!is_missing(v)) out << detail::format_number(v);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace sensorrank

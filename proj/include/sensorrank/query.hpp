#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sensorrank/error.hpp"
#include "sensorrank/registry.hpp"

namespace sensorrank {

enum class MetaField { Id, Type };

/// Either a meta field of the record or the name of a schema property.
using Field = std::variant<MetaField, std::string>;
using Literal = std::variant<double, std::string>;

struct Eq {
    Field field;
    Literal value;
    friend bool operator==(const Eq&, const Eq&) = default;
};

struct InSet {
    Field field;
    std::vector<Literal> values;
    friend bool operator==(const InSet&, const InSet&) = default;
};

/// Inclusive on both ends.
struct Range {
    std::string property;
    double min = 0.0;
    double max = 0.0;
    friend bool operator==(const Range&, const Range&) = default;
};

struct WithinRadius {
    Location center;
    double radius_m = 0.0;
    friend bool operator==(const WithinRadius&, const WithinRadius&) = default;
};

/// west > east denotes a box that crosses the antimeridian.
struct WithinBBox {
    double south = 0.0;
    double west = 0.0;
    double north = 0.0;
    double east = 0.0;
    friend bool operator==(const WithinBBox&, const WithinBBox&) = default;
};

using Predicate = std::variant<Eq, InSet, Range, WithinRadius, WithinBBox>;

/// Conjunction of hard requirements plus the number of sensors wanted.
struct PointQuery {
    std::vector<Predicate> predicates;
    std::size_t n = 10;
    friend bool operator==(const PointQuery&, const PointQuery&) = default;
};

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Great-circle distance in meters (haversine on a sphere of mean Earth radius).
inline double haversine_m(Location a, Location b) {
    constexpr double rad = std::numbers::pi / 180.0;
    double dlat = (b.lat - a.lat) * rad;
    double dlon = (b.lon - a.lon) * rad;
    double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
               std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

/// Throws InvalidArgument when a predicate breaks its own invariants.
inline void validate(const Predicate& predicate) {
    auto check_field = [](const Field& f, const Literal& v) {
        bool meta = std::holds_alternative<MetaField>(f);
        if (meta != std::holds_alternative<std::string>(v)) {
            throw InvalidArgument(meta ? "meta fields compare against strings" : "properties compare against numbers");
        }
    };
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Eq>) {
                check_field(p.field, p.value);
            } else if constexpr (std::is_same_v<T, InSet>) {
                if (p.values.empty()) throw InvalidArgument("'in' needs at least one value");
                for (const auto& v : p.values) check_field(p.field, v);
            } else if constexpr (std::is_same_v<T, Range>) {
                if (!(p.min <= p.max)) throw InvalidArgument("range requires min <= max");
            } else if constexpr (std::is_same_v<T, WithinRadius>) {
                if (!(p.radius_m > 0.0)) throw InvalidArgument("radius must be positive");
                if (std::abs(p.center.lat) > 90.0 || std::abs(p.center.lon) > 180.0) {
                    throw InvalidArgument("radius center out of range");
                }
            } else {
                if (!(p.south <= p.north)) throw InvalidArgument("bbox requires south <= north");
                if (p.south < -90.0 || p.north > 90.0 || std::abs(p.west) > 180.0 || std::abs(p.east) > 180.0) {
                    throw InvalidArgument("bbox out of range");
                }
            }
        },
        predicate);
}

inline void validate(const PointQuery& query) {
    if (query.n < 1) throw InvalidArgument("n must be at least 1");
    for (const auto& p : query.predicates) validate(p);
}

namespace detail {

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : text_(text) {}

    PointQuery parse() {
        PointQuery q;
        bool have_n = false;
        skip_ws();
        if (at_end()) return q;
        for (;;) {
            clause(q, have_n);
            skip_ws();
            if (at_end()) break;
            std::size_t at = pos_;
            auto word = identifier();
            if (!word || !iequals(*word, "and")) fail(at, "AND or end of input");
        }
        return q;
    }

private:
    [[noreturn]] void fail(std::size_t at, std::string expected) const { throw SyntaxError(at, std::move(expected)); }

    static bool iequals(std::string_view a, std::string_view b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
                return false;
            }
        }
        return true;
    }

    bool at_end() const { return pos_ >= text_.size(); }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (!at_end() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(pos_, std::string("'") + c + "'");
    }

    std::optional<std::string_view> identifier() {
        skip_ws();
        std::size_t start = pos_;
        if (at_end() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            return std::nullopt;
        }
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    void keyword(std::string_view kw) {
        skip_ws();
        std::size_t at = pos_;
        auto word = identifier();
        if (!word || !iequals(*word, kw)) fail(at, "'" + std::string(kw) + "'");
    }

    double number() {
        skip_ws();
        std::size_t start = pos_;
        if (!at_end() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
        if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (!at_end() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        auto v = parse_number(text_.substr(start, pos_ - start));
        if (!v) fail(start, "number");
        return *v;
    }

    std::string string_literal() {
        skip_ws();
        if (at_end() || text_[pos_] != '"') fail(pos_, "string literal");
        std::size_t start = pos_++;
        std::string out;
        while (!at_end() && text_[pos_] != '"') {
            if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
            out.push_back(text_[pos_++]);
        }
        if (at_end()) fail(start, "closing '\"'");
        ++pos_;
        return out;
    }

    Literal literal(const Field& field) {
        if (std::holds_alternative<MetaField>(field)) return string_literal();
        return number();
    }

    void clause(PointQuery& q, bool& have_n) {
        skip_ws();
        std::size_t at = pos_;
        if (!at_end() && text_[pos_] == '`') {
            ++pos_;
            auto close = text_.find('`', pos_);
            if (close == std::string_view::npos) fail(at, "closing '`'");
            std::string name(text_.substr(pos_, close - pos_));
            pos_ = close + 1;
            if (name.empty()) fail(at, "property name");
            field_clause(q, Field{std::move(name)});
            return;
        }
        auto word = identifier();
        if (!word) fail(at, "clause");
        if (iequals(*word, "within")) {
            skip_ws();
            std::size_t kind_at = pos_;
            auto kind = identifier();
            if (kind && iequals(*kind, "radius")) {
                expect('(');
                std::size_t lat_at = pos_;
                WithinRadius r;
                r.center.lat = number();
                expect(',');
                r.center.lon = number();
                expect(',');
                std::size_t radius_at = pos_;
                r.radius_m = number();
                expect(')');
                if (std::abs(r.center.lat) > 90.0 || std::abs(r.center.lon) > 180.0) fail(lat_at, "valid lat/lon");
                if (!(r.radius_m > 0.0)) fail(radius_at, "positive radius");
                q.predicates.emplace_back(r);
            } else if (kind && iequals(*kind, "bbox")) {
                expect('(');
                std::size_t box_at = pos_;
                WithinBBox b;
                b.south = number();
                expect(',');
                b.west = number();
                expect(',');
                b.north = number();
                expect(',');
                b.east = number();
                expect(')');
                if (!(b.south <= b.north)) fail(box_at, "south <= north");
                if (b.south < -90.0 || b.north > 90.0 || std::abs(b.west) > 180.0 || std::abs(b.east) > 180.0) {
                    fail(box_at, "bbox within valid lat/lon");
                }
                q.predicates.emplace_back(b);
            } else {
                fail(kind_at, "'radius' or 'bbox'");
            }
            return;
        }
        if (iequals(*word, "n")) {
            if (have_n) fail(at, "at most one n clause");
            expect('=');
            skip_ws();
            std::size_t num_at = pos_;
            double v = number();
            if (v < 1.0 || v != std::floor(v) || v > 1e15) fail(num_at, "positive integer");
            q.n = static_cast<std::size_t>(v);
            have_n = true;
            return;
        }
        Field field = iequals(*word, "type") ? Field{MetaField::Type}
                      : iequals(*word, "id") ? Field{MetaField::Id}
                                             : Field{std::string(*word)};
        field_clause(q, std::move(field));
    }

    void field_clause(PointQuery& q, Field field) {
        skip_ws();
        if (accept('=')) {
            q.predicates.emplace_back(Eq{field, literal(field)});
            return;
        }
        std::size_t at = pos_;
        auto op = identifier();
        if (op && iequals(*op, "in")) {
            expect('[');
            InSet set{field, {}};
            set.values.push_back(literal(field));
            while (accept(',')) set.values.push_back(literal(field));
            expect(']');
            q.predicates.emplace_back(std::move(set));
        } else if (op && iequals(*op, "between")) {
            auto* name = std::get_if<std::string>(&field);
            if (!name) fail(at, "'=' or 'in' for a meta field");
            skip_ws();
            std::size_t min_at = pos_;
            double lo = number();
            keyword("and");
            double hi = number();
            if (!(lo <= hi)) fail(min_at, "min <= max");
            q.predicates.emplace_back(Range{*name, lo, hi});
        } else {
            fail(at, "'=', 'in' or 'between'");
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline std::string quote_field(const Field& f) {
    if (auto* m = std::get_if<MetaField>(&f)) return *m == MetaField::Id ? "id" : "type";
    return "`" + std::get<std::string>(f) + "`";
}

inline std::string quote_literal(const Literal& v) {
    if (auto* d = std::get_if<double>(&v)) return format_number(*d);
    std::string out = "\"";
    for (char c : std::get<std::string>(v)) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out + "\"";
}

}  // namespace detail

/**
 * Parses the conjunctive query language:
 *
 *     expr   := clause ("AND" clause)*
 *     clause := type = "<str>" | id = "<str>" | <prop> = <num>
 *             | <field> in [<lit>, ...] | <prop> between <num> and <num>
 *             | within radius(<lat>, <lon>, <meters>)
 *             | within bbox(<south>, <west>, <north>, <east>)
 *             | n = <int>
 *
 * Keywords are case-insensitive. Property names that are not plain
 * identifiers (e.g. "response time") are written in backticks. An empty
 * text matches everything with n = 10. Property names are resolved later,
 * against the schema of the snapshot being filtered.
 */
inline PointQuery parse_query(std::string_view text) {
    return detail::QueryParser(text).parse();
}

/// Canonical text for a query; parse_query(format_query(q)) == q.
inline std::string format_query(const PointQuery& query) {
    std::string out;
    auto sep = [&] {
        if (!out.empty()) out += " AND ";
    };
    for (const auto& pred : query.predicates) {
        sep();
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                using detail::format_number;
                if constexpr (std::is_same_v<T, Eq>) {
                    out += detail::quote_field(p.field) + " = " + detail::quote_literal(p.value);
                } else if constexpr (std::is_same_v<T, InSet>) {
                    out += detail::quote_field(p.field) + " in [";
                    for (std::size_t i = 0; i < p.values.size(); ++i) {
                        if (i) out += ", ";
                        out += detail::quote_literal(p.values[i]);
                    }
                    out += "]";
                } else if constexpr (std::is_same_v<T, Range>) {
                    out += "`" + p.property + "` between " + format_number(p.min) + " and " + format_number(p.max);
                } else if constexpr (std::is_same_v<T, WithinRadius>) {
                    out += "within radius(" + format_number(p.center.lat) + ", " + format_number(p.center.lon) +
                           ", " + format_number(p.radius_m) + ")";
                } else {
                    out += "within bbox(" + format_number(p.south) + ", " + format_number(p.west) + ", " +
                           format_number(p.north) + ", " + format_number(p.east) + ")";
                }
            },
            pred);
    }
    sep();
    out += "n = " + std::to_string(query.n);
    return out;
}

namespace detail {

/// Predicate with property names resolved to schema columns.
struct BoundPredicate {
    Predicate source;
    std::size_t property = 0;
};

inline bool literal_matches(const SensorRecord& s, const Field& field, std::size_t property, const Literal& v) {
    if (auto* m = std::get_if<MetaField>(&field)) {
        const std::string& text = *m == MetaField::Id ? s.id : s.type;
        return text == std::get<std::string>(v);
    }
    double x = s.values[property];
    return !is_missing(x) && x == std::get<double>(v);
}

inline bool matches(const SensorRecord& s, const BoundPredicate& bp) {
    return std::visit(
        [&](const auto& p) -> bool {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Eq>) {
                return literal_matches(s, p.field, bp.property, p.value);
            } else if constexpr (std::is_same_v<T, InSet>) {
                for (const auto& v : p.values) {
                    if (literal_matches(s, p.field, bp.property, v)) return true;
                }
                return false;
            } else if constexpr (std::is_same_v<T, Range>) {
                double x = s.values[bp.property];
                return !is_missing(x) && x >= p.min && x <= p.max;
            } else if constexpr (std::is_same_v<T, WithinRadius>) {
                return haversine_m(p.center, s.location) <= p.radius_m;
            } else {
                double lat = s.location.lat, lon = s.location.lon;
                if (lat < p.south || lat > p.north) return false;
                if (p.west <= p.east) return lon >= p.west && lon <= p.east;
                return lon >= p.west || lon <= p.east;
            }
        },
        bp.source);
}

inline std::vector<BoundPredicate> bind(const PropertySchema& schema, const PointQuery& query) {
    validate(query);
    std::vector<BoundPredicate> bound;
    bound.reserve(query.predicates.size());
    for (const auto& p : query.predicates) {
        BoundPredicate b{p, 0};
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Eq> || std::is_same_v<T, InSet>) {
                    if (auto* name = std::get_if<std::string>(&x.field)) b.property = schema.index_of(*name);
                } else if constexpr (std::is_same_v<T, Range>) {
                    b.property = schema.index_of(x.property);
                }
            },
            p);
        bound.push_back(std::move(b));
    }
    return bound;
}

}  // namespace detail

using CandidateSet = std::vector<const SensorRecord*>;

/// All sensors satisfying every predicate, in snapshot order. A sensor with
/// no value for a property named by a predicate never satisfies it.
inline CandidateSet evaluate_filter(const RegistrySnapshot& snapshot, const PointQuery& query) {
    auto bound = detail::bind(snapshot.schema(), query);
    CandidateSet out;
    if (bound.empty()) out.reserve(snapshot.size());
    for (const auto& s : snapshot.sensors()) {
        bool ok = true;
        for (const auto& b : bound) {
            if (!detail::matches(s, b)) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(&s);
    }
    return out;
}

}  // namespace sensorrank

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sensorrank/cphf.hpp"
#include "sensorrank/error.hpp"
#include "sensorrank/pipeline.hpp"
#include "sensorrank/query.hpp"
#include "sensorrank/registry.hpp"

namespace sensorrank::bench {

enum class Experiment { PhaseTiming, PropertyScaling, CphfSpeedup, AccuracyVsMargin };

inline std::string_view experiment_name(Experiment e) {
    switch (e) {
        case Experiment::PhaseTiming: return "phase-timing";
        case Experiment::PropertyScaling: return "property-scaling";
        case Experiment::CphfSpeedup: return "cphf-speedup";
        case Experiment::AccuracyVsMargin: return "accuracy-vs-margin";
    }
    return "?";
}

inline Experiment parse_experiment(std::string_view name) {
    for (auto e : {Experiment::PhaseTiming, Experiment::PropertyScaling, Experiment::CphfSpeedup,
                   Experiment::AccuracyVsMargin}) {
        if (experiment_name(e) == name) return e;
    }
    throw InvalidArgument("unknown experiment '" + std::string(name) + "'");
}

struct ExperimentSpec {
    Experiment experiment = Experiment::PhaseTiming;
    std::vector<std::size_t> sensor_counts = {1'000, 10'000, 100'000};
    std::vector<std::size_t> property_counts = {30};
    std::size_t n_requested = 50;
    std::vector<double> margins = {0.0};
    std::vector<std::uint64_t> seeds = {42};
    std::size_t repetitions = 10;
    /// Phase timing only: number of always-true range predicates in the
    /// query, to sweep hard-filter cost.
    std::vector<std::size_t> predicate_counts = {0};

    void validate() const {
        if (sensor_counts.empty() || property_counts.empty() || seeds.empty()) {
            throw InvalidArgument("sensor_counts, property_counts and seeds must be non-empty");
        }
        if ((experiment == Experiment::CphfSpeedup || experiment == Experiment::AccuracyVsMargin) && margins.empty()) {
            throw InvalidArgument("margins must be non-empty");
        }
        if (experiment == Experiment::PhaseTiming && predicate_counts.empty()) {
            throw InvalidArgument("predicate_counts must be non-empty");
        }
        if (repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
        if (n_requested < 1) throw InvalidArgument("n must be at least 1");
        for (auto c : sensor_counts) {
            if (c < 1) throw InvalidArgument("sensor counts must be positive");
        }
        for (auto c : property_counts) {
            if (c < 1) throw InvalidArgument("property counts must be positive");
        }
        for (double m : margins) {
            if (!(m >= 0.0)) throw InvalidArgument("margins must be non-negative");
        }
    }
};

/// Result table; every cell is already formatted.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw InvalidArgument("no column '" + std::string(name) + "'");
    }

    double number(std::size_t row, std::string_view name) const { return std::stod(rows.at(row).at(column(name))); }

    void write(std::ostream& out) const {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
    }
};

struct Stats {
    double mean = 0.0;
    double sd = 0.0;
};

/// Mean and sample standard deviation.
inline Stats summarize(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

/// Every property checked with a slider drawn uniformly from [1, scale].
inline PriorityProfile random_profile(const PropertySchema& schema, std::uint64_t seed, int scale = 100) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    PriorityProfile profile;
    profile.scale = scale;
    for (const auto& p : schema.properties()) {
        profile.entries[p.name] = {true, static_cast<int>(1 + rng() % static_cast<std::uint64_t>(scale)), std::nullopt};
    }
    return profile;
}

/// `count` range predicates that every synthetic sensor satisfies.
inline PointQuery pass_through_query(const PropertySchema& schema, std::size_t count, std::size_t n) {
    PointQuery q;
    q.n = n;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& p = schema[i % schema.size()];
        auto b = p.bounds.value_or(Bounds{0.0, 1.0});
        q.predicates.emplace_back(Range{p.name, b.min, b.max});
    }
    return q;
}

namespace detail {

using sensorrank::detail::format_number;

inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(double v) { return format_number(v); }

struct PhaseSamples {
    std::vector<double> filter, normalize, cphf, index, rank, select, total, index_rank;

    void add(const PhaseTimings& t) {
        filter.push_back(t.filter);
        normalize.push_back(t.normalize);
        cphf.push_back(t.cphf);
        index.push_back(t.index);
        rank.push_back(t.rank);
        select.push_back(t.select);
        total.push_back(t.total);
        index_rank.push_back(t.index + t.rank);
    }
};

inline constexpr std::string_view kPhases[] = {"filter", "normalize", "cphf", "index", "rank", "select", "total"};

inline void phase_columns(std::vector<std::string>& header) {
    for (auto p : kPhases) {
        header.push_back(std::string(p) + "_mean_us");
        header.push_back(std::string(p) + "_sd_us");
    }
    header.push_back("index_rank_mean_us");
}

inline void phase_cells(std::vector<std::string>& row, const PhaseSamples& s) {
    for (const auto* xs : {&s.filter, &s.normalize, &s.cphf, &s.index, &s.rank, &s.select, &s.total}) {
        auto st = summarize(*xs);
        row.push_back(cell(st.mean));
        row.push_back(cell(st.sd));
    }
    row.push_back(cell(summarize(s.index_rank).mean));
}

inline CsvTable phase_timing(const ExperimentSpec& spec, bool sweep_predicates) {
    CsvTable t;
    t.header = {"experiment", "sensors", "properties", "predicates", "n", "seeds", "repetitions"};
    phase_columns(t.header);
    t.header.push_back("candidates_indexed");
    const std::vector<std::size_t> predicate_counts =
        sweep_predicates ? spec.predicate_counts : std::vector<std::size_t>{0};

    struct Cell {
        std::size_t props_index;
        std::size_t props;
        std::size_t preds;
        PhaseSamples samples;
        std::size_t indexed = 0;
    };
    for (std::size_t sensors : spec.sensor_counts) {
        std::vector<Cell> cells;
        for (std::size_t i = 0; i < spec.property_counts.size(); ++i) {
            for (std::size_t preds : predicate_counts) cells.push_back({i, spec.property_counts[i], preds, {}, 0});
        }
        for (auto seed : spec.seeds) {
            // Repetitions rotate through every configuration of this sensor
            // count so slow drift in machine state hits all of them alike.
            std::vector<RegistrySnapshot> snapshots;
            std::vector<SearchRequest> requests;
            for (std::size_t props : spec.property_counts) {
                snapshots.push_back(generate_synthetic(sensors, synthetic_schema(props), seed));
                SearchRequest req;
                req.profile = random_profile(snapshots.back().schema(), seed);
                requests.push_back(std::move(req));
            }
            std::vector<PointQuery> queries;
            for (const auto& c : cells) {
                queries.push_back(pass_through_query(snapshots[c.props_index].schema(), c.preds, spec.n_requested));
                search(snapshots[c.props_index], queries.back(), requests[c.props_index]);  // warm-up
            }
            for (std::size_t r = 0; r < spec.repetitions; ++r) {
                for (std::size_t j = 0; j < cells.size(); ++j) {
                    std::size_t c = (r + j) % cells.size();
                    auto resp = search(snapshots[cells[c].props_index], queries[c], requests[cells[c].props_index]);
                    cells[c].samples.add(resp.timings);
                    cells[c].indexed = resp.candidates_indexed;
                }
            }
        }
        for (const auto& c : cells) {
            std::vector<std::string> row = {std::string(experiment_name(spec.experiment)),
                                            cell(sensors),
                                            cell(c.props),
                                            cell(c.preds),
                                            cell(spec.n_requested),
                                            cell(spec.seeds.size()),
                                            cell(spec.repetitions)};
            phase_cells(row, c.samples);
            row.push_back(cell(c.indexed));
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

inline CsvTable cphf_speedup(const ExperimentSpec& spec) {
    CsvTable t;
    t.header = {"experiment",
                "sensors",
                "properties",
                "n",
                "margin",
                "seeds",
                "repetitions",
                "exact_total_mean_us",
                "exact_total_sd_us",
                "cphf_total_mean_us",
                "cphf_total_sd_us",
                "exact_index_rank_mean_us",
                "cphf_prune_mean_us",
                "cphf_index_rank_mean_us",
                "exact_candidates_indexed",
                "cphf_candidates_indexed",
                "n_keep",
                "accuracy_mean"};
    for (std::size_t sensors : spec.sensor_counts) {
        for (std::size_t props : spec.property_counts) {
            const auto schema = synthetic_schema(props);
            for (double margin : spec.margins) {
                PhaseSamples exact, heuristic;
                std::vector<double> accuracy;
                std::size_t exact_indexed = 0, cphf_indexed = 0, n_keep = 0;
                for (auto seed : spec.seeds) {
                    auto snapshot = generate_synthetic(sensors, schema, seed);
                    SearchRequest exact_req;
                    exact_req.profile = random_profile(schema, seed);
                    SearchRequest cphf_req = exact_req;
                    cphf_req.use_cphf = true;
                    cphf_req.margin_percent = margin;
                    auto query = pass_through_query(schema, 0, spec.n_requested);

                    auto exact_resp = search(snapshot, query, exact_req);
                    auto cphf_resp = search(snapshot, query, cphf_req);
                    accuracy.push_back(cphf_accuracy(cphf_resp.results, exact_resp.results));
                    exact_indexed = exact_resp.candidates_indexed;
                    cphf_indexed = cphf_resp.candidates_indexed;
                    n_keep = cphf_resp.plan ? cphf_resp.plan->n_keep : cphf_indexed;
                    // Alternate so both variants see the same machine state.
                    for (std::size_t r = 0; r < spec.repetitions; ++r) {
                        exact.add(search(snapshot, query, exact_req).timings);
                        heuristic.add(search(snapshot, query, cphf_req).timings);
                    }
                }
                auto et = summarize(exact.total);
                auto ct = summarize(heuristic.total);
                t.rows.push_back({std::string(experiment_name(spec.experiment)),
                                  cell(sensors),
                                  cell(props),
                                  cell(spec.n_requested),
                                  cell(margin),
                                  cell(spec.seeds.size()),
                                  cell(spec.repetitions),
                                  cell(et.mean),
                                  cell(et.sd),
                                  cell(ct.mean),
                                  cell(ct.sd),
                                  cell(summarize(exact.index_rank).mean),
                                  cell(summarize(heuristic.cphf).mean),
                                  cell(summarize(heuristic.index_rank).mean),
                                  cell(exact_indexed),
                                  cell(cphf_indexed),
                                  cell(n_keep),
                                  cell(summarize(accuracy).mean)});
            }
        }
    }
    return t;
}

inline CsvTable accuracy_vs_margin(const ExperimentSpec& spec) {
    CsvTable t;
    t.header = {"experiment",    "sensors",       "properties",    "n",       "margin", "seeds", "n_keep",
                "accuracy_mean", "accuracy_sd",   "accuracy_min",  "cphf_total_mean_us"};
    for (std::size_t sensors : spec.sensor_counts) {
        for (std::size_t props : spec.property_counts) {
            const auto schema = synthetic_schema(props);
            std::vector<std::vector<double>> accuracy(spec.margins.size());
            std::vector<std::vector<double>> totals(spec.margins.size());
            std::vector<std::size_t> n_keep(spec.margins.size(), 0);
            for (auto seed : spec.seeds) {
                auto snapshot = generate_synthetic(sensors, schema, seed);
                SearchRequest exact_req;
                exact_req.profile = random_profile(schema, seed);
                auto query = pass_through_query(schema, 0, spec.n_requested);
                auto exact_resp = search(snapshot, query, exact_req);
                for (std::size_t m = 0; m < spec.margins.size(); ++m) {
                    SearchRequest req = exact_req;
                    req.use_cphf = true;
                    req.margin_percent = spec.margins[m];
                    auto resp = search(snapshot, query, req);
                    accuracy[m].push_back(cphf_accuracy(resp.results, exact_resp.results));
                    totals[m].push_back(resp.timings.total);
                    n_keep[m] = resp.plan ? resp.plan->n_keep : resp.candidates_indexed;
                }
            }
            for (std::size_t m = 0; m < spec.margins.size(); ++m) {
                auto st = summarize(accuracy[m]);
                t.rows.push_back({std::string(experiment_name(spec.experiment)),
                                  cell(sensors),
                                  cell(props),
                                  cell(spec.n_requested),
                                  cell(spec.margins[m]),
                                  cell(spec.seeds.size()),
                                  cell(n_keep[m]),
                                  cell(st.mean),
                                  cell(st.sd),
                                  cell(*std::min_element(accuracy[m].begin(), accuracy[m].end())),
                                  cell(summarize(totals[m]).mean)});
            }
        }
    }
    return t;
}

}  // namespace detail

/**
 * Runs one experiment over synthetic catalogs and returns its CSV table.
 *
 * Each configuration gets an untimed warm-up search per seed. Timing columns
 * are means and sample standard deviations over seeds x repetitions;
 * accuracy columns depend only on the seeds. Phase timing holds one catalog
 * per property count of the current sensor count in memory at once.
 */
inline CsvTable run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    switch (spec.experiment) {
        case Experiment::PhaseTiming: return detail::phase_timing(spec, true);
        case Experiment::PropertyScaling: return detail::phase_timing(spec, false);
        case Experiment::CphfSpeedup: return detail::cphf_speedup(spec);
        case Experiment::AccuracyVsMargin: return detail::accuracy_vs_margin(spec);
    }
    throw InvalidArgument("unknown experiment");
}

}  // namespace sensorrank::bench

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sensorrank/sensorrank.hpp"
#include "sensorrank/service.hpp"

namespace fs = std::filesystem;
using namespace sensorrank;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CatalogFormat format_for(const std::string& path, const std::string& format) {
    if (format == "csv") return CatalogFormat::CSV;
    if (format == "jsonl") return CatalogFormat::JSONLines;
    auto ext = fs::path(path).extension().string();
    return (ext == ".jsonl" || ext == ".ndjson") ? CatalogFormat::JSONLines : CatalogFormat::CSV;
}

PropertySchema schema_option(const std::string& schema_file, std::size_t properties) {
    if (!schema_file.empty()) return parse_schema(read_file(schema_file));
    return properties ? synthetic_schema(properties) : default_schema();
}

RegistrySnapshot load_file(const std::string& path, const std::string& format, const PropertySchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    return load_catalog(in, format_for(path, format), schema);
}

void write_output(const std::string& out, const std::function<void(std::ostream&)>& emit) {
    if (out.empty() || out == "-") {
        emit(std::cout);
        return;
    }
    std::ofstream file(out, std::ios::binary);
    if (!file) throw InvalidArgument("cannot write '" + out + "'");
    emit(file);
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto v = detail::parse_number(item);
        if (!v) throw InvalidArgument("invalid list item '" + item + "'");
        out.push_back(static_cast<T>(*v));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-aware sensor search and ranking"};
    app.require_subcommand(1);

    // load
    auto* load = app.add_subcommand("load", "Validate a catalog file and print a summary");
    std::string load_file_path, load_schema, load_format, load_export;
    load->add_option("file", load_file_path, "CSV or JSON-Lines catalog")->required();
    load->add_option("--schema", load_schema, "Schema document (JSON); default: 30-property schema");
    load->add_option("--format", load_format, "csv | jsonl (default: from extension)");
    load->add_option("--export", load_export, "Re-export the loaded catalog as CSV");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic catalog");
    std::size_t gen_count = 1000, gen_properties = 0;
    std::uint64_t gen_seed = 42;
    std::string gen_schema, gen_format = "csv", gen_out;
    gen->add_option("--count", gen_count, "Number of sensors")->required();
    gen->add_option("--seed", gen_seed, "Random seed");
    gen->add_option("--properties", gen_properties, "Use the first K default properties");
    gen->add_option("--schema", gen_schema, "Schema document (JSON)");
    gen->add_option("--format", gen_format, "csv | jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    gen->add_option("--out", gen_out, "Output file (default: stdout)");

    // search
    auto* srch = app.add_subcommand("search", "Filter, rank and select sensors");
    std::string q_text, q_profile, q_catalog, q_schema, q_catalog_format, q_format = "json";
    bool q_cphf = false;
    double q_margin = 0.0;
    std::size_t q_synthetic = 0, q_properties = 0;
    std::uint64_t q_seed = 42;
    srch->add_option("--query", q_text, "Point-based requirements, e.g. 'type = \"temperature\" AND n = 50'");
    srch->add_option("--profile", q_profile, "Priority profile document (JSON); default: all checked, equal");
    srch->add_flag("--cphf", q_cphf, "Prune with the heuristic filter before indexing");
    srch->add_option("--margin", q_margin, "Margin of error M in percent")->check(CLI::NonNegativeNumber);
    srch->add_option("--catalog", q_catalog, "Catalog file to search");
    srch->add_option("--catalog-format", q_catalog_format, "csv | jsonl (default: from extension)");
    srch->add_option("--schema", q_schema, "Schema document (JSON)");
    srch->add_option("--synthetic", q_synthetic, "Search a synthetic catalog of this size instead");
    srch->add_option("--seed", q_seed, "Seed for --synthetic");
    srch->add_option("--properties", q_properties, "Property count for --synthetic");
    srch->add_option("--format", q_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

    // serve
    auto* srv = app.add_subcommand("serve", "Run the HTTP service");
    int s_port = 8080;
    std::string s_host = "0.0.0.0", s_schema, s_catalog, s_static;
    srv->add_option("--port", s_port, "Port");
    srv->add_option("--host", s_host, "Bind address");
    srv->add_option("--schema", s_schema, "Schema for posted catalogs (JSON)");
    srv->add_option("--catalog", s_catalog, "Catalog to load at startup");
    srv->add_option("--static-dir", s_static, "Serve the web UI from this directory");

    // bench
    auto* bch = app.add_subcommand("bench", "Run an experiment and write CSV");
    std::string b_exp, b_sensors, b_properties, b_margins, b_seeds, b_predicates, b_out;
    std::size_t b_n = 50, b_reps = 10;
    bch->add_option("experiment", b_exp, "phase-timing | property-scaling | cphf-speedup | accuracy-vs-margin")
        ->required();
    bch->add_option("--sensors", b_sensors, "Comma-separated sensor counts");
    bch->add_option("--properties", b_properties, "Comma-separated property counts");
    bch->add_option("--n", b_n, "Sensors requested");
    bch->add_option("--margins", b_margins, "Comma-separated margins (percent)");
    bch->add_option("--seeds", b_seeds, "Comma-separated seeds");
    bch->add_option("--predicates", b_predicates, "Comma-separated predicate counts (phase-timing)");
    bch->add_option("--reps", b_reps, "Repetitions per configuration");
    bch->add_option("--out", b_out, "Output CSV file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*load) {
            auto schema = schema_option(load_schema, 0);
            auto snap = load_file(load_file_path, load_format, schema);
            std::map<std::string, std::size_t> types;
            for (const auto& s : snap.sensors()) ++types[s.type];
            json summary = {{"version", snap.version()},
                            {"sensors", snap.size()},
                            {"types", types},
                            {"schema", schema_to_json(snap.schema(), &snap)}};
            std::cout << summary.dump(2) << '\n';
            if (!load_export.empty()) write_output(load_export, [&](std::ostream& o) { export_csv(snap, o); });
        } else if (*gen) {
            auto schema = schema_option(gen_schema, gen_properties);
            auto snap = generate_synthetic(gen_count, schema, gen_seed);
            write_output(gen_out, [&](std::ostream& o) {
                if (gen_format == "csv") {
                    export_csv(snap, o);
                } else {
                    export_jsonl(snap, o);
                }
            });
        } else if (*srch) {
            auto schema = schema_option(q_schema, q_properties);
            std::unique_ptr<RegistrySnapshot> snap;
            if (!q_catalog.empty()) {
                snap = std::make_unique<RegistrySnapshot>(load_file(q_catalog, q_catalog_format, schema));
            } else if (q_synthetic > 0) {
                snap = std::make_unique<RegistrySnapshot>(generate_synthetic(q_synthetic, schema, q_seed));
            } else {
                throw InvalidArgument("search needs --catalog or --synthetic");
            }
            SearchRequest req;
            req.query_text = q_text;
            if (!q_profile.empty()) {
                req.profile = profile_from_json(parse_json_text(read_file(q_profile)));
            } else {
                for (const auto& p : snap->schema().properties()) req.profile.entries[p.name] = {true, 50, {}};
            }
            req.use_cphf = q_cphf;
            req.margin_percent = q_margin;
            auto resp = search(*snap, req);
            if (q_format == "csv") {
                std::cout << response_to_csv(resp, snap->schema());
            } else {
                std::cout << response_to_json(resp, snap->schema()).dump(2) << '\n';
            }
        } else if (*srv) {
            ServiceConfig config;
            config.host = s_host;
            config.port = s_port;
            config.schema = schema_option(s_schema, 0);
            if (!s_static.empty()) config.static_dir = s_static;
            SearchService service(std::move(config));
            if (!s_catalog.empty()) {
                std::ifstream in(s_catalog, std::ios::binary);
                if (!in) throw InvalidArgument("cannot open '" + s_catalog + "'");
                service.registry().load(in, format_for(s_catalog, ""), service.config().schema);
            }
            std::cerr << "listening on " << s_host << ':' << s_port << '\n';
            if (!serve(service)) {
                std::cerr << "error: cannot bind " << s_host << ':' << s_port << '\n';
                return 1;
            }
        } else if (*bch) {
            bench::ExperimentSpec spec;
            spec.experiment = bench::parse_experiment(b_exp);
            if (!b_sensors.empty()) spec.sensor_counts = parse_list<std::size_t>(b_sensors);
            if (!b_properties.empty()) spec.property_counts = parse_list<std::size_t>(b_properties);
            if (!b_margins.empty()) spec.margins = parse_list<double>(b_margins);
            if (!b_seeds.empty()) spec.seeds = parse_list<std::uint64_t>(b_seeds);
            if (!b_predicates.empty()) spec.predicate_counts = parse_list<std::size_t>(b_predicates);
            if (spec.experiment == bench::Experiment::AccuracyVsMargin && b_margins.empty()) {
                spec.margins = {0, 25, 50, 100, 200};
            }
            spec.n_requested = b_n;
            spec.repetitions = b_reps;
            auto table = bench::run_experiment(spec);
            write_output(b_out, [&](std::ostream& o) { table.write(o); });
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

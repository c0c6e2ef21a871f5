#pragma once

#include <csignal>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "sensorrank/json_io.hpp"
#include "sensorrank/pipeline.hpp"
#include "sensorrank/registry.hpp"

namespace sensorrank {

struct ServiceConfig {
    std::string host = "0.0.0.0";
    int port = 8080;
    /// Schema applied to catalogs posted to /sensors/bulk.
    PropertySchema schema = default_schema();
    /// Directory of static assets (the priority-tuning UI), mounted at "/".
    std::optional<std::string> static_dir;
};

/**
 * HTTP front end over a Registry.
 *
 *   GET  /health                       200 {status: "ok"} | 503 {status: "no_snapshot"}
 *   GET  /schema                       active schema (with observed ranges)
 *   GET  /sensors/{id}                 one sensor record
 *   POST /sensors/bulk?format=csv|jsonl  load a catalog, returns the new version
 *   POST /search[?format=csv]          SearchRequest -> SearchResponse
 *   POST /debug/profile                echoes a profile with its derived weights
 *
 * Every request that needs a snapshot gets 503 until the first load.
 * Handlers hold the snapshot they started with until the response is built.
 */
class SearchService {
public:
    explicit SearchService(ServiceConfig config) : config_(std::move(config)) {}

    Registry& registry() noexcept { return registry_; }
    const ServiceConfig& config() const noexcept { return config_; }

    void install(httplib::Server& server) {
        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            auto snap = registry_.current();
            if (!snap) {
                send(res, 503, {{"status", "no_snapshot"}});
                return;
            }
            send(res, 200, {{"status", "ok"}, {"version", snap->version()}, {"sensors", snap->size()}});
        });

        server.Get("/schema", [this](const httplib::Request&, httplib::Response& res) {
            auto snap = require_snapshot(res);
            if (!snap) return;
            json body = schema_to_json(snap->schema(), snap.get());
            body["version"] = snap->version();
            send(res, 200, body);
        });

        server.Get("/sensors/:id", [this](const httplib::Request& req, httplib::Response& res) {
            auto snap = require_snapshot(res);
            if (!snap) return;
            const auto& id = req.path_params.at("id");
            const SensorRecord* s = snap->find(id);
            if (!s) {
                send(res, 404, {{"error", "NotFound"}, {"message", "no sensor with id '" + id + "'"}});
                return;
            }
            send(res, 200, sensor_to_json(*s, snap->schema()));
        });

        server.Post("/sensors/bulk", [this](const httplib::Request& req, httplib::Response& res) {
            std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
            if (format != "csv" && format != "jsonl") {
                send(res, 400, {{"error", "InvalidArgument"}, {"message", "format must be csv or jsonl"}});
                return;
            }
            guarded(res, [&] {
                std::istringstream body(req.body);
                auto snap = registry_.load(body, format == "csv" ? CatalogFormat::CSV : CatalogFormat::JSONLines,
                                           config_.schema);
                send(res, 200, {{"version", snap->version()}, {"sensors", snap->size()}});
            });
        });

        server.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
            auto snap = require_snapshot(res);
            if (!snap) return;
            guarded(res, [&] {
                SearchRequest request = request_from_json(parse_json_text(req.body));
                SearchResponse response = search(*snap, request);
                if (req.has_param("format") && req.get_param_value("format") == "csv") {
                    res.status = 200;
                    res.set_content(response_to_csv(response, snap->schema()), "text/csv");
                } else {
                    send(res, 200, response_to_json(response, snap->schema()));
                }
            });
        });

        server.Post("/debug/profile", [](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                json body = parse_json_text(req.body);
                PriorityProfile profile = profile_from_json(body.contains("profile") ? body["profile"] : body);
                json out = {{"profile", profile_to_json(profile)}};
                try {
                    out["weights"] = weights_to_json(compute_weights(profile));
                    out["no_checked_properties"] = false;
                } catch (const NoCheckedProperties&) {
                    out["weights"] = json::object();
                    out["no_checked_properties"] = true;
                }
                send(res, 200, out);
            });
        });

        if (config_.static_dir) server.set_mount_point("/", *config_.static_dir);
    }

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

private:
    std::shared_ptr<const RegistrySnapshot> require_snapshot(httplib::Response& res) const {
        auto snap = registry_.current();
        if (!snap) send(res, 503, {{"error", "NoSnapshot"}, {"message", "no catalog has been loaded"}});
        return snap;
    }

    /// Maps library errors onto 400 responses with a machine-readable kind.
    template <typename F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const MalformedRow& e) {
            send(res, 400, {{"error", "MalformedRow"}, {"line", e.line_no()}, {"message", e.what()}});
        } catch (const DuplicateId& e) {
            send(res, 400, {{"error", "DuplicateId"}, {"id", e.id()}, {"message", e.what()}});
        } catch (const UnknownProperty& e) {
            send(res, 400, {{"error", "UnknownProperty"}, {"name", e.name()}, {"message", e.what()}});
        } catch (const SyntaxError& e) {
            send(res, 400, {{"error", "SyntaxError"},
                            {"position", e.position()},
                            {"expected", e.expected()},
                            {"message", e.what()}});
        } catch (const Error& e) {
            send(res, 400, {{"error", "InvalidArgument"}, {"message", e.what()}});
        }
    }

    ServiceConfig config_;
    Registry registry_;
};

/// Serves until SIGINT or SIGTERM, then stops accepting and returns.
/// Returns false when the address could not be bound.
inline bool serve(SearchService& service) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    httplib::Server server;
    service.install(server);
    if (!server.bind_to_port(service.config().host, service.config().port)) return false;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.listen_after_bind();
    // listen_after_bind can also return on its own; wake the waiter.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return true;
}

}  // namespace sensorrank

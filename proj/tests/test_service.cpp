#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "sensorrank/sensorrank.hpp"
#include "sensorrank/service.hpp"

using namespace sensorrank;
using json = nlohmann::json;

namespace {

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override { start(ServiceConfig{}); }

    void start(ServiceConfig config) {
        stop();
        service_ = std::make_unique<SearchService>(std::move(config));
        server_ = std::make_unique<httplib::Server>();
        service_->install(*server_);
        port_ = server_->bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_->listen_after_bind(); });
        server_->wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void stop() {
        if (server_) server_->stop();
        if (thread_.joinable()) thread_.join();
    }

    void TearDown() override { stop(); }

    std::string catalog_csv(std::size_t count, std::uint64_t seed) {
        std::ostringstream out;
        export_csv(generate_synthetic(count, default_schema(), seed), out);
        return out.str();
    }

    json body(const httplib::Result& r) { return json::parse(r->body); }

    std::unique_ptr<SearchService> service_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<httplib::Client> client_;
    std::thread thread_;
    int port_ = 0;
};

json search_body(const std::string& query) {
    SearchRequest req;
    req.query_text = query;
    req.profile.entries["accuracy"] = {true, 60, std::nullopt};
    req.profile.entries["latency"] = {true, 40, std::nullopt};
    return request_to_json(req);
}

}  // namespace

TEST_F(ServiceTest, UnavailableBeforeFirstLoad) {
    auto h = client_->Get("/health");
    ASSERT_TRUE(h);
    EXPECT_EQ(h->status, 503);
    EXPECT_EQ(body(h)["status"], "no_snapshot");
    EXPECT_EQ(client_->Get("/schema")->status, 503);
    EXPECT_EQ(client_->Get("/sensors/s0000001")->status, 503);
    EXPECT_EQ(client_->Post("/search", search_body("n = 1").dump(), "application/json")->status, 503);
}

TEST_F(ServiceTest, BulkLoadThenQuery) {
    auto load = client_->Post("/sensors/bulk?format=csv", catalog_csv(300, 5), "text/csv");
    ASSERT_TRUE(load);
    ASSERT_EQ(load->status, 200) << load->body;
    EXPECT_EQ(body(load)["version"], 1);
    EXPECT_EQ(body(load)["sensors"], 300);

    auto h = client_->Get("/health");
    EXPECT_EQ(h->status, 200);
    EXPECT_EQ(body(h)["version"], 1);

    auto schema = client_->Get("/schema");
    ASSERT_EQ(schema->status, 200);
    EXPECT_EQ(parse_schema(schema->body), default_schema());
    EXPECT_EQ(body(schema)["properties"].size(), 30u);

    auto snap = service_->registry().current();
    const auto& first = snap->sensors()[0];
    auto s = client_->Get("/sensors/" + first.id);
    ASSERT_EQ(s->status, 200);
    EXPECT_EQ(body(s), json::parse(sensor_to_json(first, snap->schema()).dump()));
    EXPECT_EQ(client_->Get("/sensors/nobody")->status, 404);
}

TEST_F(ServiceTest, JsonLinesReloadBumpsVersion) {
    client_->Post("/sensors/bulk", catalog_csv(50, 1), "text/csv");
    std::ostringstream jl;
    export_jsonl(generate_synthetic(80, default_schema(), 2), jl);
    auto r = client_->Post("/sensors/bulk?format=jsonl", jl.str(), "application/x-ndjson");
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(body(r)["version"], 2);
    EXPECT_EQ(body(client_->Get("/health"))["sensors"], 80);
}

TEST_F(ServiceTest, BulkErrors) {
    auto bad_format = client_->Post("/sensors/bulk?format=xml", "x", "text/plain");
    EXPECT_EQ(bad_format->status, 400);
    auto malformed = client_->Post("/sensors/bulk", "id,type,lat,lon,accuracy\na,t,0,0,oops\n", "text/csv");
    EXPECT_EQ(malformed->status, 400);
    EXPECT_EQ(body(malformed)["error"], "MalformedRow");
    EXPECT_EQ(body(malformed)["line"], 2);
    auto dup = client_->Post("/sensors/bulk", "id,type,lat,lon\na,t,0,0\na,t,1,1\n", "text/csv");
    EXPECT_EQ(body(dup)["error"], "DuplicateId");
    auto unknown = client_->Post("/sensors/bulk", "id,type,lat,lon,colour\na,t,0,0,1\n", "text/csv");
    EXPECT_EQ(body(unknown)["error"], "UnknownProperty");
    // A failed load leaves no snapshot behind.
    EXPECT_EQ(client_->Get("/health")->status, 503);
}

TEST_F(ServiceTest, SearchMatchesLibrary) {
    client_->Post("/sensors/bulk", catalog_csv(1000, 8), "text/csv");
    auto req = search_body(R"(type = "temperature" AND n = 5)");
    auto r = client_->Post("/search", req.dump(), "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    auto expected = search(*service_->registry().current(), request_from_json(req));
    auto got = body(r);
    ASSERT_EQ(got["results"].size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(got["results"][i]["id"], expected.results.entries[i].id());
        EXPECT_EQ(got["results"][i]["cpwi"].get<double>(), expected.results.entries[i].cpwi);
    }
    EXPECT_EQ(got["weights"]["accuracy"], 0.6);

    auto csv = client_->Post("/search?format=csv", req.dump(), "application/json");
    ASSERT_EQ(csv->status, 200);
    EXPECT_EQ(csv->get_header_value("Content-Type"), "text/csv");
    EXPECT_EQ(csv->body, response_to_csv(expected, service_->registry().current()->schema()));
}

TEST_F(ServiceTest, SearchTruncatedAndErrors) {
    client_->Post("/sensors/bulk", catalog_csv(100, 8), "text/csv");
    auto r = client_->Post("/search", search_body("n = 1000").dump(), "application/json");
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["truncated"], true);
    EXPECT_EQ(body(r)["results"].size(), 100u);

    auto syntax = client_->Post("/search", search_body("n = ").dump(), "application/json");
    EXPECT_EQ(syntax->status, 400);
    EXPECT_EQ(body(syntax)["error"], "SyntaxError");
    EXPECT_EQ(body(syntax)["position"], 4);
    auto unknown = client_->Post("/search", search_body("colour = 1").dump(), "application/json");
    EXPECT_EQ(body(unknown)["error"], "UnknownProperty");
    EXPECT_EQ(body(unknown)["name"], "colour");
    auto garbage = client_->Post("/search", "{not json", "application/json");
    EXPECT_EQ(garbage->status, 400);
}

TEST_F(ServiceTest, DebugProfileEchoesWeights) {
    PriorityProfile p;
    p.entries["accuracy"] = {true, 30, std::nullopt};
    p.entries["trust"] = {true, 10, 0.5};
    p.entries["latency"] = {false, 99, std::nullopt};
    auto r = client_->Post("/debug/profile", json{{"profile", profile_to_json(p)}}.dump(), "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(body(r)["profile"], profile_to_json(p));
    EXPECT_EQ(body(r)["weights"], weights_to_json(compute_weights(p)));
    EXPECT_EQ(body(r)["no_checked_properties"], false);

    p.entries["accuracy"].checked = p.entries["trust"].checked = false;
    r = client_->Post("/debug/profile", profile_to_json(p).dump(), "application/json");
    EXPECT_EQ(body(r)["no_checked_properties"], true);
}

TEST_F(ServiceTest, ServesStaticAssets) {
    auto dir = std::filesystem::temp_directory_path() / ("sensorrank_static_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "index.html") << "<html>ui</html>";
    ServiceConfig cfg;
    cfg.static_dir = dir.string();
    start(cfg);
    auto r = client_->Get("/index.html");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->body, "<html>ui</html>");
    EXPECT_EQ(client_->Get("/health")->status, 503);
    std::filesystem::remove_all(dir);
}

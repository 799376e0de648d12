#include <doctest.h>

// Eigen must come before httplib.h
#include "hrm/service.hpp"

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "cli.hpp"

using namespace hrm;
using namespace hrm::service;

namespace {

const Api api{AppConfig{}};

json quick_ga() { return {{"max_iterations", 300}, {"stall_iterations", 100}}; }

int run_cli(std::vector<std::string> args, std::string& out, std::string& err) {
    std::ostringstream o, e;
    const int rc = hrm::cli::run(args, o, e);
    out = o.str();
    err = e.str();
    return rc;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("health and hospitals") {
    auto r = api.handle("GET", "/api/health", "");
    CHECK(r.status == 200);
    CHECK(r.body["status"] == "ok");
    CHECK(api.handle("GET", "/api/v1/health", "").body["status"] == "ok");
    r = api.handle("GET", "/api/hospitals", "");
    CHECK(r.status == 200);
    CHECK(r.body["hospitals"].size() == 11);
    CHECK(r.body["seed"] == 1);
}

TEST_CASE("mdp solve") {
    const auto r = api.handle("POST", "/api/v1/mdp/solve", R"({"ratio":0.9,"severity":7,"transmissibility":5})");
    REQUIRE(r.status == 200);
    const auto& s = r.body["states"];
    REQUIRE(s.size() == 3);
    CHECK(s[1]["index"] == 2);
    CHECK(s[1]["action"] == "Share");
    CHECK(std::abs(s[1]["value"].get<double>() - 1.05) <= 0.005);
    CHECK(r.body["seed"] == 1);
    CHECK(r.body["bellman_residual"].get<double>() < 1e-9);

    const auto seeded = api.handle("POST", "/api/mdp/solve", R"({"ratio":0.1,"severity":2,"transmissibility":2,"seed":42})");
    CHECK(seeded.body["seed"] == 42);
}

TEST_CASE("status codes") {
    auto code = [](const Response& r) { return r.body["error"]["code"].get<std::string>(); };
    auto r = api.handle("POST", "/api/mdp/solve", R"({"ratio":0.1,"severity":2})");
    CHECK(r.status == 400);
    CHECK(code(r) == "schema_violation");
    CHECK(api.handle("POST", "/api/mdp/solve", R"({"ratio":"x","severity":2,"transmissibility":2})").status == 400);
    CHECK(api.handle("POST", "/api/mdp/solve", R"({"ratio":0.1,"severity":2,"transmissibility":2,"extra":1})").status == 400);
    CHECK(api.handle("POST", "/api/mdp/solve", "{not json").status == 400);
    CHECK(api.handle("POST", "/api/mdp/solve", "[1,2]").status == 400);
    CHECK(api.handle("POST", "/api/route", R"({"kmeans":[1]})").status == 400);
    CHECK(api.handle("POST", "/api/route", R"({"seed":-1})").status == 400);

    r = api.handle("POST", "/api/mdp/solve", R"({"ratio":2,"severity":2,"transmissibility":2})");
    CHECK(r.status == 422);
    CHECK(code(r) == "invalid_scenario");

    r = api.handle("POST", "/api/route",
                   R"({"points":[{"id":"A","latitude":1,"longitude":1},{"id":"B","latitude":2,"longitude":2}]})");
    CHECK(r.status == 422);
    CHECK(code(r) == "fewer_than_3_points");

    r = api.handle("POST", "/api/allocate",
                   R"({"hospitals":[{"facility_name":"A","rating":3,"beds":10,"death_rate":0,"cost":1}]})");
    CHECK(r.status == 422);
    CHECK(code(r) == "zero_death_rate");

    CHECK(api.handle("GET", "/api/nothing", "").status == 404);
    CHECK(api.handle("GET", "/api/route", "").status == 404);
}

TEST_CASE("allocate returns ranked decisions") {
    json body = {{"ff", "ff1"}, {"ga", quick_ga()}, {"seed", 5}};
    const auto r = api.handle("POST", "/api/allocate", body.dump());
    REQUIRE(r.status == 200);
    const auto& d = r.body["decisions"];
    REQUIRE(d.size() == 11);
    CHECK(d[0]["facility_name"] == "CENTRA");
    CHECK(d[0]["rank"] == 1);
    CHECK(r.body["seed"] == 5);
    CHECK(r.body["allocated_beds"].get<double>() <= 50.0 + 0.5);
}

TEST_CASE("route: fixture sizes, custom points and determinism") {
    json body = {{"ff", "ff4"}, {"ga", quick_ga()}};
    const auto a = api.handle("POST", "/api/route", body.dump());
    REQUIRE(a.status == 200);
    CHECK(a.body["tours"].size() == 1);
    CHECK(a.body["tours"][0]["order"].size() == 49);
    CHECK(a.body["tours"][0]["order"][0] == "PA");
    CHECK(a.body["clusters"].is_null());
    CHECK(a.body["geojson"]["type"] == "FeatureCollection");
    CHECK(a.body["fitness"]["mean"].get<double>() > 0);
    const auto b = api.handle("POST", "/api/route", body.dump());
    CHECK(a.body.dump() == b.body.dump());

    body = {{"ff", "ff3"}, {"normalized", true}, {"kmeans", 3}, {"ga", quick_ga()}};
    const auto c = api.handle("POST", "/api/route", body.dump());
    REQUIRE(c.status == 200);
    CHECK(c.body["clusters"]["k"] == 3);
    std::size_t visited = 0;
    for (const auto& t : c.body["tours"]) visited += t["order"].size();
    CHECK(visited == 47);

    body = {{"points", json::array({{{"id", "A"}, {"latitude", 38}, {"longitude", -77}},
                                    {{"id", "B"}, {"latitude", 40}, {"longitude", -75}},
                                    {{"id", "C"}, {"latitude", 36}, {"longitude", -80}}})},
            {"start", "B"}};
    const auto d = api.handle("POST", "/api/route", body.dump());
    REQUIRE(d.status == 200);
    CHECK(d.body["tours"][0]["order"][0] == "B");
}

TEST_CASE("CLI and API agree") {
    const auto dir = std::filesystem::temp_directory_path() / "hrm_cli_parity";
    std::filesystem::create_directories(dir);
    std::string out, err;

    REQUIRE(run_cli({"--seed", "3", "scenario", "--ratio", "0.1", "--severity", "2", "--transmissibility", "2", "--json"},
                out, err) == 0);
    CHECK(json::parse(out) == api.solve_mdp({{"ratio", 0.1}, {"severity", 2}, {"transmissibility", 2}, {"seed", 3}}));

    REQUIRE(run_cli({"scenario", "--ratio", "0.1", "--severity", "2", "--transmissibility", "2"}, out, err) == 0);
    CHECK(out == "stage,value,action\n1,0.81,Idle\n2,1.71,Idle\n3,3.71,Idle\n");

    const auto geo = (dir / "r.geojson").string();
    const auto sum = (dir / "r.json").string();
    REQUIRE(run_cli({"--seed", "2", "route", "--ff", "ff3", "--kmeans", "2", "--geojson", geo, "--summary", sum}, out,
                err) == 0);
    json expected = api.route({{"ff", "ff3"}, {"kmeans", 2}, {"seed", 2}});
    CHECK(json::parse(slurp(geo)) == expected["geojson"]);
    expected.erase("geojson");
    json got = json::parse(slurp(sum));
    got.erase("geojson_path");
    CHECK(got == expected);

    const auto manifest = (dir / "m.json").string();
    const auto csv = (dir / "a.csv").string();
    REQUIRE(run_cli({"allocate", "--output", csv, "--manifest", manifest, "--budget", "20"}, out, err) == 0);
    const std::string table = slurp(csv);
    CHECK(table.substr(table.find('\n') + 1, 7) == "CENTRA,");
    const json m = json::parse(slurp(manifest));
    CHECK(m["result_digest"] == sha256_hex(table));
    CHECK(m["seed"] == 1);
    CHECK(m["config"]["allocation"]["bed_budget"] == 50.0);
}

TEST_CASE("CLI errors are JSON on stderr") {
    std::string out, err;
    CHECK(run_cli({"frobnicate"}, out, err) == 2);
    CHECK(json::parse(err)["error"]["code"] == "invalid_arguments");
    CHECK(run_cli({"scenario", "--ratio", "0.1"}, out, err) == 2);
    CHECK(run_cli({"scenario", "--ratio", "5", "--severity", "2", "--transmissibility", "2"}, out, err) == 1);
    CHECK(json::parse(err)["error"]["code"] == "invalid_scenario");
    CHECK(run_cli({"--data-dir", "/nonexistent", "ingest"}, out, err) == 1);
    CHECK(json::parse(err)["error"]["code"] == "missing_file");
    CHECK(run_cli({"route", "--kmeans", "lots"}, out, err) == 2);
    CHECK(run_cli({"ingest"}, out, err) == 0);
    CHECK(json::parse(out)["joined_states"] == 47);
}

TEST_CASE("config round trip and environment") {
    AppConfig c;
    c.seed = 9;
    c.start = "VA";
    c.allocation.penalty_weight = 3.0;
    c.routing_ga.population_size = 42;
    const AppConfig d = AppConfig::from_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    CHECK_THROWS_AS(AppConfig::from_json({{"colour", "blue"}}), SchemaError);

    ::setenv("HRM_BIND", "0.0.0.0:9191", 1);
    ::setenv("HRM_DATA_DIR", "/nowhere", 1);
    AppConfig e;
    e.apply_environment();
    ::unsetenv("HRM_BIND");
    ::unsetenv("HRM_DATA_DIR");
    CHECK(e.host == "0.0.0.0");
    CHECK(e.port == 9191);
    CHECK(e.data_dir == "/nowhere");
    CHECK_THROWS_AS(e.validate(), DataError);
    CHECK_NOTHROW(AppConfig{}.validate());
}

TEST_CASE("manifest digests") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto a = RunManifest::create("route", 1, {{"k", 1}}, "payload");
    const auto b = RunManifest::create("route", 1, {{"k", 1}}, "payload");
    CHECK(a.run_id == b.run_id);
    CHECK(a.result_digest == b.result_digest);
    CHECK(RunManifest::create("route", 2, {{"k", 1}}, "payload").run_id != a.run_id);
}

TEST_CASE("HTTP server answers on /api and /api/v1") {
    auto server = make_server(api);
    const int port = server->bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server->listen_after_bind(); });
    server->wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/api/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");
    auto solve = client.Post("/api/mdp/solve", R"({"ratio":0.1,"severity":2,"transmissibility":2})",
                             "application/json");
    REQUIRE(solve);
    CHECK(solve->status == 200);
    CHECK(json::parse(solve->body)["states"][2]["action"] == "Idle");
    auto bad = client.Post("/api/mdp/solve", "{}", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    server->stop();
    t.join();
}

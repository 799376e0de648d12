#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "hrm/allocation.hpp"
#include "hrm/error.hpp"
#include "hrm/ga.hpp"

namespace httplib {
class Server;
}

namespace hrm::service {

using nlohmann::json;

/// Request body does not match the published schema (HTTP 400).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& message) : Error("schema_violation", message) {}
};

struct AppConfig {
    std::filesystem::path data_dir = HRM_DATA_DIR;
    allocation::FitnessConstants constants;
    allocation::AllocationOptions allocation;
    ga::GaConfig allocation_ga = ga::GaConfig::allocation_defaults();
    ga::GaConfig routing_ga = ga::GaConfig::routing_defaults();
    std::string start = "PA";
    std::string host = "127.0.0.1";
    int port = 8080;
    std::uint64_t seed = 1;

    /// Overlay a JSON document (same keys as to_json) on the defaults.
    static AppConfig from_json(const json& j);
    static AppConfig load(const std::filesystem::path& path);

    /// HRM_BIND ("host:port" or "port") and HRM_DATA_DIR override the file.
    void apply_environment();

    /// Referenced files exist and the port is valid; throws DataError.
    void validate() const;

    json to_json() const;
};

/// Provenance record for one CLI run.
struct RunManifest {
    std::string run_id;     // digest of (command, seed, config)
    std::string timestamp;  // UTC, ISO 8601
    std::uint64_t seed = 0;
    json config;
    std::string result_digest;  // SHA-256 of the primary output bytes

    static RunManifest create(std::string_view command, std::uint64_t seed, const json& config,
                              std::string_view result);
    json to_json() const;
};

std::string sha256_hex(std::string_view bytes);

struct Response {
    int status = 200;
    json body;
};

/// JSON API over the three methods. Every handler is const and keeps all
/// solver state local to the call, so one instance serves concurrent
/// requests.
class Api {
public:
    explicit Api(AppConfig config);

    const AppConfig& config() const { return config_; }

    json health() const;
    json hospitals() const;
    json solve_mdp(const json& request) const;
    json allocate(const json& request) const;
    json route(const json& request) const;

    /// Dispatch by method and path (with or without the /api/v1 prefix)
    /// and map errors to status codes: 400 schema, 404 unknown endpoint,
    /// 422 domain or data error.
    Response handle(std::string_view method, std::string_view path, std::string_view body) const;

private:
    AppConfig config_;
};

json error_body(std::string_view code, std::string_view message);

/// Server with every endpoint registered; the caller binds and listens.
std::unique_ptr<httplib::Server> make_server(const Api& api);

/// Blocking: bind config.host:config.port and serve until stopped.
void serve(const AppConfig& config);

}  // namespace hrm::service

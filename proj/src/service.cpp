#include "hrm/service.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hrm/dataset.hpp"
#include "hrm/mdp.hpp"
#include "hrm/routing.hpp"

namespace hrm::service {

namespace {

/// Typed, schema-checked access to a JSON request object.
class Fields {
public:
    Fields(const json& j, std::string_view where) : j_(j), where_(where) {
        if (!j_.is_object()) throw SchemaError(std::string(where_) + " must be a JSON object");
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& [key, value] : j_.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw SchemaError(std::string(where_) + ": unknown field '" + key + "'");
            }
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    double number(const char* key) const {
        if (!has(key)) throw SchemaError(std::string(where_) + ": missing field '" + key + "'");
        return opt_number(key).value();
    }

    std::optional<double> opt_number(const char* key) const {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_number()) throw SchemaError(field(key) + " must be a number");
        return v.get<double>();
    }

    std::optional<int> opt_int(const char* key) const {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw SchemaError(field(key) + " must be an integer");
        return v.get<int>();
    }

    std::optional<std::uint64_t> opt_seed(const char* key) const {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw SchemaError(field(key) + " must be a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::optional<std::string> opt_string(const char* key) const {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_string()) throw SchemaError(field(key) + " must be a string");
        return v.get<std::string>();
    }

    std::optional<bool> opt_bool(const char* key) const {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw SchemaError(field(key) + " must be a boolean");
        return v.get<bool>();
    }

    const json& at(const char* key) const { return j_.at(key); }

private:
    std::string field(const char* key) const { return std::string(where_) + "." + key; }

    const json& j_;
    std::string_view where_;
};

void apply_ga(const json& j, ga::GaConfig& cfg, std::string_view where) {
    Fields f(j, where);
    f.allow_only({"population_size", "mutation_prob", "crossover_prob", "max_iterations",
                  "stall_iterations", "elitism_fraction", "tournament_size", "permutation_mutation",
                  "seed"});
    if (auto v = f.opt_int("population_size")) cfg.population_size = *v;
    if (auto v = f.opt_number("mutation_prob")) cfg.mutation_prob = *v;
    if (auto v = f.opt_number("crossover_prob")) cfg.crossover_prob = *v;
    if (auto v = f.opt_int("max_iterations")) cfg.max_iterations = *v;
    if (auto v = f.opt_int("stall_iterations")) cfg.stall_iterations = *v;
    if (auto v = f.opt_number("elitism_fraction")) cfg.elitism_fraction = *v;
    if (auto v = f.opt_int("tournament_size")) cfg.tournament_size = *v;
    if (auto v = f.opt_string("permutation_mutation")) {
        cfg.permutation_mutation = ga::parse_permutation_mutation(*v);
    }
    if (auto v = f.opt_seed("seed")) cfg.seed = *v;
}

json ga_to_json(const ga::GaConfig& c) {
    return {{"population_size", c.population_size},
            {"mutation_prob", c.mutation_prob},
            {"crossover_prob", c.crossover_prob},
            {"max_iterations", c.max_iterations},
            {"stall_iterations", c.stall_iterations},
            {"elitism_fraction", c.elitism_fraction},
            {"tournament_size", c.tournament_size},
            {"permutation_mutation", ga::to_string(c.permutation_mutation)}};
}

json hospital_to_json(const HospitalRecord& r) {
    return {{"facility_name", r.facility_name}, {"state", r.state},       {"latitude", r.latitude},
            {"longitude", r.longitude},         {"rating", r.rating},     {"beds", r.beds},
            {"death_rate", r.death_rate},       {"cost", r.cost},         {"patients", r.patients}};
}

HospitalRecord hospital_from_json(const json& j, std::size_t i) {
    const std::string where = "hospitals[" + std::to_string(i) + "]";
    Fields f(j, where);
    f.allow_only({"facility_name", "state", "latitude", "longitude", "rating", "beds", "death_rate",
                  "cost", "patients"});
    HospitalRecord r;
    r.facility_name = f.opt_string("facility_name").value_or("");
    if (r.facility_name.empty()) throw SchemaError(where + ".facility_name is required");
    r.state = f.opt_string("state").value_or("");
    r.latitude = f.opt_number("latitude").value_or(0.0);
    r.longitude = f.opt_number("longitude").value_or(0.0);
    const auto rating = f.opt_int("rating");
    if (!rating) throw SchemaError(where + ".rating is required");
    if (*rating < 1 || *rating > 5) throw DataError("invalid_rating", where + ": rating must lie in 1..5");
    r.rating = *rating;
    r.beds = f.number("beds");
    r.death_rate = f.number("death_rate");
    r.cost = f.number("cost");
    r.patients = f.opt_number("patients").value_or(0.0);
    return r;
}

geo::GeoPoint point_from_json(const json& j, std::size_t i) {
    const std::string where = "points[" + std::to_string(i) + "]";
    Fields f(j, where);
    f.allow_only({"id", "latitude", "longitude", "patients", "cost", "rating"});
    geo::GeoPoint p;
    p.id = f.opt_string("id").value_or("");
    if (p.id.empty()) throw SchemaError(where + ".id is required");
    p.latitude = f.number("latitude");
    p.longitude = f.number("longitude");
    p.patients = f.opt_number("patients").value_or(0.0);
    p.cost = f.opt_number("cost").value_or(0.0);
    p.rating = f.opt_number("rating").value_or(0.0);
    return p;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// AppConfig

AppConfig AppConfig::from_json(const json& j) {
    AppConfig c;
    Fields f(j, "config");
    f.allow_only({"data_dir", "constants", "allocation", "allocation_ga", "routing_ga", "start",
                  "host", "port", "seed"});
    if (auto v = f.opt_string("data_dir")) c.data_dir = *v;
    if (f.has("constants")) {
        Fields k(f.at("constants"), "config.constants");
        k.allow_only({"alpha", "beta", "gamma"});
        c.constants.alpha = k.opt_number("alpha").value_or(c.constants.alpha);
        c.constants.beta = k.opt_number("beta").value_or(c.constants.beta);
        c.constants.gamma = k.opt_number("gamma").value_or(c.constants.gamma);
    }
    if (f.has("allocation")) {
        Fields a(f.at("allocation"), "config.allocation");
        a.allow_only({"bed_budget", "cap_fraction", "penalty_weight", "cost_coupling",
                      "decision_threshold"});
        c.allocation.bed_budget = a.opt_number("bed_budget").value_or(c.allocation.bed_budget);
        c.allocation.cap_fraction = a.opt_number("cap_fraction").value_or(c.allocation.cap_fraction);
        if (auto v = a.opt_number("penalty_weight")) c.allocation.penalty_weight = *v;
        c.allocation.cost_coupling = a.opt_number("cost_coupling").value_or(c.allocation.cost_coupling);
        c.allocation.decision_threshold =
            a.opt_number("decision_threshold").value_or(c.allocation.decision_threshold);
    }
    if (f.has("allocation_ga")) apply_ga(f.at("allocation_ga"), c.allocation_ga, "config.allocation_ga");
    if (f.has("routing_ga")) apply_ga(f.at("routing_ga"), c.routing_ga, "config.routing_ga");
    if (auto v = f.opt_string("start")) c.start = *v;
    if (auto v = f.opt_string("host")) c.host = *v;
    if (auto v = f.opt_int("port")) c.port = *v;
    if (auto v = f.opt_seed("seed")) c.seed = *v;
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing_file", "cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed_config", path.string() + ": " + e.what());
    }
    AppConfig c = from_json(j);
    if (c.data_dir.is_relative()) c.data_dir = path.parent_path() / c.data_dir;
    return c;
}

void AppConfig::apply_environment() {
    if (const char* dir = std::getenv("HRM_DATA_DIR"); dir && *dir) data_dir = dir;
    if (const char* bind = std::getenv("HRM_BIND"); bind && *bind) {
        const std::string s = bind;
        const auto colon = s.rfind(':');
        try {
            if (colon == std::string::npos) {
                port = std::stoi(s);
            } else {
                host = s.substr(0, colon);
                port = std::stoi(s.substr(colon + 1));
            }
        } catch (const std::exception&) {
            throw DataError("invalid_bind", "HRM_BIND must be host:port or port");
        }
    }
}

void AppConfig::validate() const {
    const auto paths = DatasetPaths::in_directory(data_dir);
    for (const auto& p : {paths.hospitals, paths.state_centers, paths.state_patients}) {
        if (!std::filesystem::exists(p)) throw DataError("missing_file", "dataset not found: " + p.string());
    }
    if (port < 0 || port > 65535) throw DataError("invalid_port", "port must lie in 0..65535");
    constants.validate();
    allocation.validate();
}

json AppConfig::to_json() const {
    json alloc = {{"bed_budget", allocation.bed_budget},
                  {"cap_fraction", allocation.cap_fraction},
                  {"cost_coupling", allocation.cost_coupling},
                  {"decision_threshold", allocation.decision_threshold}};
    if (allocation.penalty_weight) alloc["penalty_weight"] = *allocation.penalty_weight;
    return {{"data_dir", data_dir.string()},
            {"constants", {{"alpha", constants.alpha}, {"beta", constants.beta}, {"gamma", constants.gamma}}},
            {"allocation", alloc},
            {"allocation_ga", ga_to_json(allocation_ga)},
            {"routing_ga", ga_to_json(routing_ga)},
            {"start", start},
            {"host", host},
            {"port", port},
            {"seed", seed}};
}

// ---------------------------------------------------------------------------
// Manifest

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("digest_failed", "SHA-256 computation failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}

RunManifest RunManifest::create(std::string_view command, std::uint64_t seed, const json& config,
                                std::string_view result) {
    RunManifest m;
    m.seed = seed;
    m.config = config;
    m.timestamp = utc_now();
    m.run_id = sha256_hex(std::string(command) + "\n" + std::to_string(seed) + "\n" + config.dump())
                   .substr(0, 16);
    m.result_digest = sha256_hex(result);
    return m;
}

json RunManifest::to_json() const {
    return {{"run_id", run_id},
            {"timestamp", timestamp},
            {"seed", seed},
            {"config", config},
            {"result_digest", result_digest}};
}

// ---------------------------------------------------------------------------
// Api

Api::Api(AppConfig config) : config_(std::move(config)) {}

json error_body(std::string_view code, std::string_view message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

json Api::health() const { return {{"status", "ok"}, {"api_version", "v1"}, {"seed", config_.seed}}; }

json Api::hospitals() const {
    json list = json::array();
    for (const auto& r : load_hospitals(DatasetPaths::in_directory(config_.data_dir).hospitals)) {
        list.push_back(hospital_to_json(r));
    }
    return {{"seed", config_.seed}, {"hospitals", list}};
}

json Api::solve_mdp(const json& request) const {
    Fields f(request, "request");
    f.allow_only({"ratio", "severity", "transmissibility", "discount", "states", "reset_probability",
                  "wait_reward", "cut_reward", "seed"});
    mdp::ScenarioInput s;
    s.hospitalization_ratio = f.number("ratio");
    s.clinical_severity = f.number("severity");
    s.transmissibility = f.number("transmissibility");
    mdp::ScenarioMapping m;
    m.discount = f.opt_number("discount").value_or(m.discount);
    m.states = f.opt_int("states").value_or(m.states);
    m.reset_probability = f.opt_number("reset_probability");
    m.wait_reward = f.opt_number("wait_reward");
    m.cut_reward = f.opt_number("cut_reward");
    const std::uint64_t seed = f.opt_seed("seed").value_or(config_.seed);

    const auto result = mdp::recommend(s, m);
    json states = json::array();
    for (Eigen::Index i = 0; i < result.values.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        states.push_back({{"index", i + 1},
                          {"value", result.values[i]},
                          {"action", mdp::to_string(result.actions[idx])},
                          {"mdp_action", result.policy[idx] == mdp::wait ? "Wait" : "Cut"}});
    }
    return {{"seed", seed},
            {"discount", result.discount},
            {"bellman_residual", result.bellman_residual},
            {"states", states}};
}

json Api::allocate(const json& request) const {
    Fields f(request, "request");
    f.allow_only({"ff", "alpha", "beta", "gamma", "budget", "cap_fraction", "penalty_weight", "seed",
                  "ga", "hospitals"});
    const auto kind = allocation::parse_fitness_kind(f.opt_string("ff").value_or("ff1"));
    allocation::FitnessConstants c = config_.constants;
    c.alpha = f.opt_number("alpha").value_or(c.alpha);
    c.beta = f.opt_number("beta").value_or(c.beta);
    c.gamma = f.opt_number("gamma").value_or(c.gamma);
    allocation::AllocationOptions opts = config_.allocation;
    opts.bed_budget = f.opt_number("budget").value_or(opts.bed_budget);
    opts.cap_fraction = f.opt_number("cap_fraction").value_or(opts.cap_fraction);
    if (auto v = f.opt_number("penalty_weight")) opts.penalty_weight = *v;
    ga::GaConfig cfg = config_.allocation_ga;
    if (f.has("ga")) apply_ga(f.at("ga"), cfg, "request.ga");
    const std::uint64_t seed = f.opt_seed("seed").value_or(config_.seed);
    cfg.seed = seed;

    std::vector<HospitalRecord> records;
    if (f.has("hospitals")) {
        const json& list = f.at("hospitals");
        if (!list.is_array()) throw SchemaError("request.hospitals must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) records.push_back(hospital_from_json(list[i], i));
    } else {
        records = load_hospitals(DatasetPaths::in_directory(config_.data_dir).hospitals);
    }

    const auto rows = allocation::allocate_both(records, kind, c, opts, cfg);
    json decisions = json::array();
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& d = rows[i];
        total += d.optimized_beds - d.baseline_beds;
        decisions.push_back({{"rank", i + 1},
                             {"facility_name", d.facility_name},
                             {"rating", d.rating},
                             {"beds", d.baseline_beds},
                             {"death_rate", d.death_rate},
                             {"cost", d.cost},
                             {"ff1", d.ff1},
                             {"ff2", d.ff2},
                             {"increment", d.increment},
                             {"optimized_beds", d.optimized_beds},
                             {"optimized_fitness", d.optimized_fitness},
                             {"decision_ff1", d.decision_ff1.value_or(false) ? 1 : 0},
                             {"decision_ff2", d.decision_ff2.value_or(false) ? 1 : 0}});
    }
    return {{"seed", seed},
            {"ff", allocation::to_string(kind)},
            {"constants", {{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}}},
            {"budget", opts.bed_budget},
            {"allocated_beds", total},
            {"decisions", decisions}};
}

json Api::route(const json& request) const {
    Fields f(request, "request");
    f.allow_only({"ff", "normalized", "kmeans", "start", "seed", "aggregation", "ga", "points",
                  "k_min", "k_max"});
    const auto kind = routing::parse_tour_fitness(f.opt_string("ff").value_or("ff4"));
    const bool normalized = f.opt_bool("normalized").value_or(false);
    const auto aggregation =
        routing::parse_ff3_aggregation(f.opt_string("aggregation").value_or("tour_totals"));
    const std::string start = f.opt_string("start").value_or(config_.start);
    ga::GaConfig cfg = config_.routing_ga;
    if (f.has("ga")) apply_ga(f.at("ga"), cfg, "request.ga");
    const std::uint64_t seed = f.opt_seed("seed").value_or(config_.seed);
    cfg.seed = seed;

    routing::ClusterChoice choice;
    if (f.has("kmeans")) {
        const json& k = f.at("kmeans");
        if (k.is_string() && k.get<std::string>() == "auto") {
            choice = routing::ClusterChoice::elbow(f.opt_int("k_min").value_or(1),
                                                   f.opt_int("k_max").value_or(8));
        } else if (k.is_string() && k.get<std::string>() == "off") {
            choice = routing::ClusterChoice::none();
        } else if (k.is_number_integer()) {
            choice = routing::ClusterChoice::fixed_k(k.get<int>());
        } else if (k.is_boolean()) {
            choice = k.get<bool>() ? routing::ClusterChoice::elbow() : routing::ClusterChoice::none();
        } else {
            throw SchemaError("request.kmeans must be \"auto\", \"off\", a boolean or an integer");
        }
    }

    std::vector<geo::GeoPoint> points;
    if (f.has("points")) {
        const json& list = f.at("points");
        if (!list.is_array()) throw SchemaError("request.points must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) points.push_back(point_from_json(list[i], i));
    } else {
        const auto paths = DatasetPaths::in_directory(config_.data_dir);
        const auto locations = load_state_locations(paths.state_centers);
        points = kind == routing::TourFitness::ff4
                     ? routing::points_from_locations(contiguous_only(locations))
                     : routing::points_from_states(
                           join_state_centers(locations, load_state_patients(paths.state_patients)));
    }
    if (points.size() < 3) {
        throw DomainError("fewer_than_3_points", "a route needs at least 3 points");
    }

    const auto problem = routing::TourProblem::build(
        points, kind, normalized ? routing::Normalization::unit : routing::Normalization::raw, aggregation);
    const auto result = routing::route_by_cluster(problem, cfg, choice, start);

    json tours = json::array();
    for (std::size_t t = 0; t < result.tours.size(); ++t) {
        const auto& tour = result.tours[t];
        json ids = json::array();
        for (int i : tour.order) ids.push_back(points[static_cast<std::size_t>(i)].id);
        tours.push_back({{"cluster", static_cast<int>(t)},
                         {"order", ids},
                         {"leg_distances_km", tour.leg_distances},
                         {"total_distance_km", tour.total_distance},
                         {"fitness", tour.fitness}});
    }
    json clusters = nullptr;
    if (result.clusters) {
        json labels = json::array();
        json centroids = json::array();
        for (std::size_t i = 0; i < points.size(); ++i) {
            labels.push_back({{"id", points[i].id}, {"cluster", result.clusters->labels[i]}});
        }
        for (Eigen::Index c = 0; c < result.clusters->centroids.rows(); ++c) {
            centroids.push_back({result.clusters->centroids(c, 0), result.clusters->centroids(c, 1)});
        }
        clusters = {{"k", result.clusters->k},
                    {"labels", labels},
                    {"centroids", centroids},
                    {"sse", result.clusters->sse}};
    }
    return {{"seed", seed},
            {"ff", routing::to_string(kind)},
            {"normalized", normalized},
            {"aggregation", routing::to_string(aggregation)},
            {"start", start},
            {"tours", tours},
            {"clusters", clusters},
            {"fitness",
             {{"mean", result.mean_fitness},
              {"total", result.total_fitness},
              {"per_cluster", result.cluster_fitness}}},
            {"geojson", routing::export_geojson(points, result.tours, result.clusters)}};
}

Response Api::handle(std::string_view method, std::string_view path, std::string_view body) const {
    constexpr std::string_view v1 = "/api/v1/";
    std::string target(path);
    if (target.starts_with(v1)) target = "/api/" + target.substr(v1.size());

    try {
        auto parse_body = [&] {
            try {
                return body.empty() ? json::object() : json::parse(body);
            } catch (const json::parse_error& e) {
                throw SchemaError(std::string("request body is not valid JSON: ") + e.what());
            }
        };
        if (method == "GET" && target == "/api/health") return {200, health()};
        if (method == "GET" && target == "/api/hospitals") return {200, hospitals()};
        if (method == "POST" && target == "/api/mdp/solve") return {200, solve_mdp(parse_body())};
        if (method == "POST" && target == "/api/allocate") return {200, allocate(parse_body())};
        if (method == "POST" && target == "/api/route") return {200, route(parse_body())};
        return {404, error_body("not_found", "no endpoint " + std::string(method) + " " + std::string(path))};
    } catch (const SchemaError& e) {
        return {400, error_body(e.code(), e.what())};
    } catch (const Error& e) {
        return {422, error_body(e.code(), e.what())};
    } catch (const json::exception& e) {
        return {400, error_body("schema_violation", e.what())};
    } catch (const std::exception& e) {
        return {500, error_body("internal_error", e.what())};
    }
}

std::unique_ptr<httplib::Server> make_server(const Api& api) {
    auto server = std::make_unique<httplib::Server>();
    auto dispatch = [&api](const httplib::Request& req, httplib::Response& res) {
        const Response r = api.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server->Get(R"(/api/.*)", dispatch);
    server->Post(R"(/api/.*)", dispatch);
    return server;
}

void serve(const AppConfig& config) {
    config.validate();
    const Api api(config);
    auto server = make_server(api);
    if (!server->listen(config.host, config.port)) {
        throw Error("bind_failed", "cannot listen on " + config.host + ":" + std::to_string(config.port));
    }
}

}  // namespace hrm::service

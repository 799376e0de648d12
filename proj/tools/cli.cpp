#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hrm/allocation.hpp"
#include "hrm/csv.hpp"
#include "hrm/dataset.hpp"
#include "hrm/service.hpp"

namespace hrm::cli {

namespace {

using service::json;

struct Globals {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string config_path;
    std::string data_dir;
    std::string manifest_path;
};

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("unwritable_output", "cannot write " + path);
    f << bytes;
}

/// Run one API call and fail the command on an error status.
json call(const service::Api& api, const char* method, const char* path, const json& body) {
    const auto r = api.handle(method, path, body.is_null() ? "" : body.dump());
    if (r.status != 200) {
        const auto& e = r.body.at("error");
        throw Error(e.at("code").get<std::string>(), e.at("message").get<std::string>());
    }
    return r.body;
}

std::string scenario_table(const json& result) {
    std::ostringstream out;
    out << "stage,value,action\n";
    for (const auto& s : result.at("states")) {
        char value[32];
        std::snprintf(value, sizeof value, "%.2f", s.at("value").get<double>());
        out << s.at("index").get<int>() << ',' << value << ',' << s.at("action").get<std::string>() << '\n';
    }
    return out.str();
}

std::string allocation_csv(const json& result) {
    std::vector<allocation::AllocationDecision> rows;
    for (const auto& d : result.at("decisions")) {
        allocation::AllocationDecision a;
        a.facility_name = d.at("facility_name");
        a.rating = d.at("rating");
        a.baseline_beds = d.at("beds");
        a.death_rate = d.at("death_rate");
        a.cost = d.at("cost");
        a.ff1 = d.at("ff1");
        a.ff2 = d.at("ff2");
        a.increment = d.at("increment");
        a.optimized_beds = d.at("optimized_beds");
        a.optimized_fitness = d.at("optimized_fitness");
        a.decision_ff1 = d.at("decision_ff1").get<int>() == 1;
        a.decision_ff2 = d.at("decision_ff2").get<int>() == 1;
        rows.push_back(std::move(a));
    }
    std::ostringstream out;
    allocation::write_csv(out, rows);
    return out.str();
}

void print_error(std::ostream& err, std::string_view code, std::string_view message) {
    err << service::error_body(code, message).dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hospital resource allocation toolkit", "hrm"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "RNG seed (overrides the config file)")->each([&](const std::string&) {
        g.seed_set = true;
    });
    app.add_option("--config", g.config_path, "AppConfig JSON file")->check(CLI::ExistingFile);
    app.add_option("--data-dir", g.data_dir, "Directory holding the CSV fixtures");
    app.add_option("--manifest", g.manifest_path, "Write a run manifest JSON here");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate the fixtures and report their contents");
    std::vector<std::string> normalize_fields;
    std::string scale = "unit";
    std::string ingest_output;
    ingest->add_option("--normalize", normalize_fields, "Hospital fields to normalize")
        ->delimiter(',')
        ->check(CLI::IsMember({"rating", "beds", "death_rate", "cost", "patients"}));
    ingest->add_option("--scale", scale, "unit or percent")->check(CLI::IsMember({"unit", "percent"}));
    ingest->add_option("--output", ingest_output, "Write the (normalized) hospital CSV here");

    // scenario
    auto* scenario = app.add_subcommand("scenario", "Idle/Share/Ask recommendation per stage");
    double ratio = 0, severity = 0, transmissibility = 0;
    std::optional<double> discount;
    bool scenario_json = false;
    scenario->add_option("--ratio", ratio, "Hospitalization ratio in (0, 1]")->required();
    scenario->add_option("--severity", severity, "Clinical severity in [1, 7]")->required();
    scenario->add_option("--transmissibility", transmissibility, "Transmissibility in [1, 5]")->required();
    scenario->add_option("--discount", discount, "Discount factor");
    scenario->add_flag("--json", scenario_json, "Print the API response instead of a table");

    // allocate
    auto* alloc = app.add_subcommand("allocate", "GA bed allocation and ranking");
    std::string ff_alloc = "ff1";
    std::optional<double> alpha, beta, gamma, budget;
    std::string alloc_output;
    alloc->add_option("--ff", ff_alloc, "Ranking fitness")->check(CLI::IsMember({"ff1", "ff2"}));
    alloc->add_option("--alpha", alpha);
    alloc->add_option("--beta", beta);
    alloc->add_option("--gamma", gamma);
    alloc->add_option("--budget", budget, "Bed budget shared by all hospitals");
    alloc->add_option("--output", alloc_output, "CSV path (default stdout)");

    // route
    auto* route = app.add_subcommand("route", "GA tour of the state centers");
    std::string ff_route = "ff4";
    bool normalized = false;
    std::string kmeans = "off";
    std::optional<std::string> start;
    std::string aggregation = "tour_totals";
    std::string geojson_path = "route.geojson";
    std::string summary_path;
    route->add_option("--ff", ff_route, "Tour fitness")->check(CLI::IsMember({"ff3", "ff4"}));
    route->add_flag("--normalized", normalized, "Unit-normalize distances and FF3 attributes");
    route->add_option("--kmeans", kmeans, "off, auto or a cluster count");
    route->add_option("--start", start, "Anchor point id");
    route->add_option("--aggregation", aggregation, "FF3 over a tour")
        ->check(CLI::IsMember({"tour_totals", "per_leg"}));
    route->add_option("--geojson", geojson_path, "GeoJSON output path");
    route->add_option("--summary", summary_path, "Summary JSON path (default stdout)");

    // serve
    auto* serve = app.add_subcommand("serve", "Start the HTTP API");
    std::optional<std::string> host;
    std::optional<int> port;
    serve->add_option("--host", host);
    serve->add_option("--port", port)->check(CLI::Range(0, 65535));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        print_error(err, "invalid_arguments", e.what());
        return 2;
    }

    try {
        service::AppConfig config =
            g.config_path.empty() ? service::AppConfig{} : service::AppConfig::load(g.config_path);
        config.apply_environment();
        if (!g.data_dir.empty()) config.data_dir = g.data_dir;
        if (g.seed_set) config.seed = g.seed;
        if (host) config.host = *host;
        if (port) config.port = *port;
        config.validate();
        const service::Api api(config);

        std::string command;
        std::string primary;  // bytes the manifest digests

        if (*ingest) {
            command = "ingest";
            const auto paths = DatasetPaths::in_directory(config.data_dir);
            auto hospitals = load_hospitals(paths.hospitals);
            const auto locations = load_state_locations(paths.state_centers);
            const auto patients = load_state_patients(paths.state_patients);
            const auto joined = join_state_centers(locations, patients);
            std::vector<HospitalField> fields;
            for (const auto& f : normalize_fields) fields.push_back(parse_hospital_field(f));
            if (!fields.empty()) hospitals = normalize_dataset(std::move(hospitals), fields, parse_scale(scale));

            json summary = {{"hospitals", hospitals.size()},
                            {"state_locations", locations.size()},
                            {"contiguous_locations", contiguous_only(locations).size()},
                            {"state_patients", patients.size()},
                            {"joined_states", joined.size()}};
            if (!ingest_output.empty()) {
                std::ostringstream csvout;
                csvout << "facility_name,state,latitude,longitude,rating,beds,death_rate,cost,patients";
                for (const auto& f : normalize_fields) csvout << ',' << f << "_norm";
                csvout << '\n' << std::setprecision(15);
                for (const auto& r : hospitals) {
                    csvout << csv::escape(r.facility_name) << ',' << r.state << ',' << r.latitude << ','
                           << r.longitude << ',' << r.rating << ',' << r.beds << ',' << r.death_rate << ','
                           << r.cost << ',' << r.patients;
                    for (const auto& f : normalize_fields) csvout << ',' << r.normalized.at(parse_hospital_field(f));
                    csvout << '\n';
                }
                write_file(ingest_output, csvout.str());
                summary["output"] = ingest_output;
            }
            primary = summary.dump(2) + "\n";
            out << primary;
        } else if (*scenario) {
            command = "scenario";
            json body = {{"ratio", ratio}, {"severity", severity}, {"transmissibility", transmissibility},
                         {"seed", config.seed}};
            if (discount) body["discount"] = *discount;
            const json result = call(api, "POST", "/api/mdp/solve", body);
            primary = scenario_json ? result.dump(2) + "\n" : scenario_table(result);
            out << primary;
        } else if (*alloc) {
            command = "allocate";
            json body = {{"ff", ff_alloc}, {"seed", config.seed}};
            if (alpha) body["alpha"] = *alpha;
            if (beta) body["beta"] = *beta;
            if (gamma) body["gamma"] = *gamma;
            if (budget) body["budget"] = *budget;
            primary = allocation_csv(call(api, "POST", "/api/allocate", body));
            if (alloc_output.empty()) {
                out << primary;
            } else {
                write_file(alloc_output, primary);
            }
        } else if (*route) {
            command = "route";
            json body = {{"ff", ff_route}, {"normalized", normalized}, {"aggregation", aggregation},
                         {"seed", config.seed}};
            if (start) body["start"] = *start;
            if (kmeans == "off" || kmeans == "auto") {
                body["kmeans"] = kmeans;
            } else {
                try {
                    std::size_t used = 0;
                    body["kmeans"] = std::stoi(kmeans, &used);
                    if (used != kmeans.size()) throw std::invalid_argument(kmeans);
                } catch (const std::exception&) {
                    print_error(err, "invalid_arguments", "--kmeans must be off, auto or an integer");
                    return 2;
                }
            }
            json result = call(api, "POST", "/api/route", body);
            primary = result.at("geojson").dump(2) + "\n";
            write_file(geojson_path, primary);
            result.erase("geojson");
            result["geojson_path"] = geojson_path;
            const std::string summary = result.dump(2) + "\n";
            if (summary_path.empty()) {
                out << summary;
            } else {
                write_file(summary_path, summary);
            }
        } else if (*serve) {
            err << json{{"status", "listening"}, {"host", config.host}, {"port", config.port}}.dump() << '\n';
            service::serve(config);
            return 0;
        }

        if (!g.manifest_path.empty()) {
            const auto m = service::RunManifest::create(command, config.seed, config.to_json(), primary);
            write_file(g.manifest_path, m.to_json().dump(2) + "\n");
        }
        return 0;
    } catch (const Error& e) {
        print_error(err, e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error(err, "internal_error", e.what());
        return 1;
    }
}

}  // namespace hrm::cli

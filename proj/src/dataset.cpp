#include "hrm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hrm/csv.hpp"

namespace hrm {

std::string_view to_string(Scale s) { return s == Scale::unit ? "unit" : "percent"; }

Scale parse_scale(std::string_view s) {
    if (s == "unit") return Scale::unit;
    if (s == "percent") return Scale::percent;
    throw DataError("invalid_scale", "scale must be 'unit' or 'percent'");
}

std::string_view to_string(HospitalField f) {
    switch (f) {
        case HospitalField::rating: return "rating";
        case HospitalField::beds: return "beds";
        case HospitalField::death_rate: return "death_rate";
        case HospitalField::cost: return "cost";
        case HospitalField::patients: return "patients";
    }
    return "?";
}

HospitalField parse_hospital_field(std::string_view s) {
    for (auto f : {HospitalField::rating, HospitalField::beds, HospitalField::death_rate,
                   HospitalField::cost, HospitalField::patients}) {
        if (to_string(f) == s) return f;
    }
    throw DataError("invalid_field", "unknown hospital field '" + std::string(s) + "'");
}

double HospitalRecord::value(HospitalField f) const {
    switch (f) {
        case HospitalField::rating: return rating;
        case HospitalField::beds: return beds;
        case HospitalField::death_rate: return death_rate;
        case HospitalField::cost: return cost;
        case HospitalField::patients: return patients;
    }
    return 0.0;
}

namespace {

Eigen::VectorXd column(const std::vector<HospitalRecord>& records, HospitalField field) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = records[i].value(field);
    }
    return x;
}

/// Collects per-row problems so a load reports every bad row at once.
class RowErrors {
public:
    void add(std::size_t line, const std::string& what) {
        out_ << "\n  row " << line << ": " << what;
        ++count_;
    }

    void throw_if_any(const std::filesystem::path& path) const {
        if (count_ == 0) return;
        throw DataError("invalid_rows", path.string() + ": " + std::to_string(count_) +
                                            " rejected row(s)" + out_.str());
    }

private:
    std::ostringstream out_;
    std::size_t count_ = 0;
};

/// Parses each row with `parse_row`; exceptions become row diagnostics.
template <typename T, typename F>
std::vector<T> load_rows(const std::filesystem::path& path,
                         const std::vector<std::string_view>& required, F parse_row) {
    const csv::Table table = csv::read(path);
    std::vector<std::size_t> idx;
    for (auto name : required) idx.push_back(table.column(name));

    std::vector<T> out;
    RowErrors errors;
    for (const auto& row : table.rows) {
        if (row.cells.size() != table.header.size()) {
            errors.add(row.line, "expected " + std::to_string(table.header.size()) +
                                     " cells, found " + std::to_string(row.cells.size()));
            continue;
        }
        auto cell = [&](std::size_t k) -> const std::string& { return row.cells[idx[k]]; };
        auto number = [&](std::size_t k) {
            try {
                return csv::to_double(cell(k));
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument("malformed numeric cell in column '" +
                                            std::string(required[k]) + "': '" + cell(k) + "'");
            }
        };
        try {
            out.push_back(parse_row(cell, number));
        } catch (const std::invalid_argument& e) {
            errors.add(row.line, e.what());
        }
    }
    errors.throw_if_any(path);
    return out;
}

void check_state_code(const std::string& s) {
    if (s.size() != 2 || !std::isupper(static_cast<unsigned char>(s[0])) ||
        !std::isupper(static_cast<unsigned char>(s[1]))) {
        throw std::invalid_argument("state must be a two-letter code, got '" + s + "'");
    }
}

void check_coordinates(double lat, double lon) {
    if (lat < -90.0 || lat > 90.0) throw std::invalid_argument("latitude out of range");
    if (lon < -180.0 || lon > 180.0) throw std::invalid_argument("longitude out of range");
}

void check_nonnegative(double v, std::string_view name) {
    if (v < 0.0) throw std::invalid_argument(std::string(name) + " must be nonnegative");
}

void check_positive(double v, std::string_view name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
}

bool is_noncontiguous(std::string_view state) { return state == "AK" || state == "HI"; }

}  // namespace

std::vector<HospitalRecord> load_hospitals(const std::filesystem::path& path) {
    auto records = load_rows<HospitalRecord>(
        path,
        {"facility_name", "state", "latitude", "longitude", "rating", "beds", "death_rate", "cost",
         "patients"},
        [](auto cell, auto number) {
            HospitalRecord r;
            r.facility_name = cell(0);
            if (r.facility_name.empty()) throw std::invalid_argument("empty facility_name");
            r.state = cell(1);
            check_state_code(r.state);
            r.latitude = number(2);
            r.longitude = number(3);
            check_coordinates(r.latitude, r.longitude);
            const double rating = number(4);
            if (rating != static_cast<int>(rating) || rating < 1 || rating > 5) {
                throw std::invalid_argument("rating must be an integer in 1..5, got " + cell(4));
            }
            r.rating = static_cast<int>(rating);
            r.beds = number(5);
            check_nonnegative(r.beds, "beds");
            r.death_rate = number(6);
            check_nonnegative(r.death_rate, "death_rate");
            r.cost = number(7);
            check_positive(r.cost, "cost");
            r.patients = number(8);
            check_nonnegative(r.patients, "patients");
            return r;
        });

    std::set<std::string> seen;
    for (const auto& r : records) {
        if (!seen.insert(r.facility_name).second) {
            throw DataError("duplicate_facility",
                            path.string() + ": duplicate facility name '" + r.facility_name + "'");
        }
    }
    return records;
}

std::vector<StateLocation> load_state_locations(const std::filesystem::path& path) {
    auto rows = load_rows<StateLocation>(
        path, {"state", "latitude", "longitude", "rating_sum"}, [](auto cell, auto number) {
            StateLocation s;
            s.state = cell(0);
            check_state_code(s.state);
            s.latitude = number(1);
            s.longitude = number(2);
            check_coordinates(s.latitude, s.longitude);
            s.rating_sum = number(3);
            check_positive(s.rating_sum, "rating_sum");
            return s;
        });
    std::set<std::string> seen;
    for (const auto& s : rows) {
        if (!seen.insert(s.state).second) {
            throw DataError("duplicate_state", path.string() + ": duplicate state " + s.state);
        }
    }
    return rows;
}

std::vector<StatePatients> load_state_patients(const std::filesystem::path& path) {
    auto rows = load_rows<StatePatients>(
        path, {"state", "patients", "avg_recovery_days", "cost_per_day", "cost"},
        [](auto cell, auto number) {
            StatePatients s;
            s.state = cell(0);
            check_state_code(s.state);
            s.patients = number(1);
            check_nonnegative(s.patients, "patients");
            s.avg_recovery_days = number(2);
            check_positive(s.avg_recovery_days, "avg_recovery_days");
            s.cost_per_day = number(3);
            check_positive(s.cost_per_day, "cost_per_day");
            s.cost = number(4);
            check_positive(s.cost, "cost");
            return s;
        });
    std::set<std::string> seen;
    for (const auto& s : rows) {
        if (!seen.insert(s.state).second) {
            throw DataError("duplicate_state", path.string() + ": duplicate state " + s.state);
        }
    }
    return rows;
}

std::vector<StateLocation> contiguous_only(std::vector<StateLocation> locations) {
    std::erase_if(locations, [](const StateLocation& s) { return is_noncontiguous(s.state); });
    return locations;
}

std::vector<StateCenter> join_state_centers(const std::vector<StateLocation>& locations,
                                            const std::vector<StatePatients>& patients) {
    std::vector<StateCenter> out;
    for (const auto& loc : locations) {
        if (is_noncontiguous(loc.state)) continue;
        const auto it = std::find_if(patients.begin(), patients.end(),
                                     [&](const StatePatients& p) { return p.state == loc.state; });
        if (it == patients.end()) continue;
        out.push_back({loc.state, loc.latitude, loc.longitude, it->patients, it->cost,
                       loc.rating_sum});
    }
    return out;
}

NormalizationSpec fit_normalization(const std::vector<HospitalRecord>& records,
                                    HospitalField field, Scale target) {
    if (records.empty()) {
        throw DomainError("degenerate_range", "cannot normalize an empty dataset");
    }
    const Eigen::VectorXd x = column(records, field);
    NormalizationSpec spec{std::string(to_string(field)), x.minCoeff(), x.maxCoeff(), target};
    if (!(spec.mx > spec.mn)) {
        throw DomainError("degenerate_range",
                          "field '" + spec.field_name + "' is constant; cannot normalize");
    }
    return spec;
}

std::vector<HospitalRecord> normalize_dataset(std::vector<HospitalRecord> records,
                                              const std::vector<HospitalField>& fields,
                                              Scale target) {
    for (auto field : fields) {
        const NormalizationSpec spec = fit_normalization(records, field, target);
        const Eigen::VectorXd scaled = linear_scaling(spec, column(records, field));
        for (std::size_t i = 0; i < records.size(); ++i) {
            records[i].normalized[field] = scaled[static_cast<Eigen::Index>(i)];
        }
    }
    return records;
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
    return {dir / "va_hospitals.csv", dir / "state_centers.csv", dir / "covid_patients_by_state.csv"};
}

}  // namespace hrm

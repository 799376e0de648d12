#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hrm/error.hpp"

namespace hrm {

enum class Scale { unit, percent };

std::string_view to_string(Scale s);
Scale parse_scale(std::string_view s);

/// Numeric columns of a hospital record that can be normalized.
enum class HospitalField { rating, beds, death_rate, cost, patients };

std::string_view to_string(HospitalField f);
HospitalField parse_hospital_field(std::string_view s);

struct HospitalRecord {
    std::string facility_name;
    std::string state;
    double latitude = 0.0;
    double longitude = 0.0;
    int rating = 1;
    double beds = 0.0;
    double death_rate = 0.0;
    double cost = 0.0;
    double patients = 0.0;

    /// Filled by normalize_dataset; the raw fields above are never overwritten.
    std::map<HospitalField, double> normalized;

    double value(HospitalField f) const;
};

/// Coordinates and summed hospital rating of one state's center.
struct StateLocation {
    std::string state;
    double latitude = 0.0;
    double longitude = 0.0;
    double rating_sum = 0.0;
};

/// Per-state outlier-event load: patient count and cost of care
/// (average recovery days times average cost per inpatient day).
struct StatePatients {
    std::string state;
    double patients = 0.0;
    double avg_recovery_days = 0.0;
    double cost_per_day = 0.0;
    double cost = 0.0;
};

struct StateCenter {
    std::string state;
    double latitude = 0.0;
    double longitude = 0.0;
    double patients = 0.0;
    double cost = 0.0;
    double rating_sum = 0.0;
};

struct NormalizationSpec {
    std::string field_name;
    double mn = 0.0;
    double mx = 1.0;
    Scale target = Scale::unit;
};

/// Map x onto [0, 1] (or [0, 100]) using the range [mn, mx].
/// Throws DomainError("degenerate_range") unless mx > mn.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
linear_scaling(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar mn,
               typename Derived::Scalar mx, Scale target = Scale::unit) {
    using Scalar = typename Derived::Scalar;
    if (!(mx > mn)) {
        throw DomainError("degenerate_range", "linear scaling needs mx > mn");
    }
    const Scalar factor = target == Scale::percent ? Scalar(100) : Scalar(1);
    const Scalar width = mx - mn;
    return ((x.array() - mn) / width * factor).matrix();
}

/// Same as above with mn/mx taken from the data.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
linear_scaling(const Eigen::MatrixBase<Derived>& x, Scale target = Scale::unit) {
    if (x.size() == 0) {
        throw DomainError("degenerate_range", "linear scaling of an empty vector");
    }
    return linear_scaling(x, x.minCoeff(), x.maxCoeff(), target);
}

inline Eigen::VectorXd linear_scaling(const NormalizationSpec& spec, const Eigen::VectorXd& x) {
    return linear_scaling(x, spec.mn, spec.mx, spec.target);
}

/// Normalize the listed fields independently over the whole dataset.
/// Raw values are kept; normalized values land in HospitalRecord::normalized.
std::vector<HospitalRecord> normalize_dataset(std::vector<HospitalRecord> records,
                                              const std::vector<HospitalField>& fields,
                                              Scale target = Scale::unit);

/// The spec (min, max, scale) normalize_dataset would use for one field.
NormalizationSpec fit_normalization(const std::vector<HospitalRecord>& records,
                                    HospitalField field, Scale target = Scale::unit);

// CSV loaders. All rows are validated; any rejected row makes the call throw
// a DataError whose message lists every offending row by line number.

std::vector<HospitalRecord> load_hospitals(const std::filesystem::path& path);
std::vector<StateLocation> load_state_locations(const std::filesystem::path& path);
std::vector<StatePatients> load_state_patients(const std::filesystem::path& path);

/// Inner join of locations and patient data. Alaska and Hawaii are always
/// dropped, as is any state without patient data (Minnesota and Wyoming in
/// the bundled snapshot).
std::vector<StateCenter> join_state_centers(const std::vector<StateLocation>& locations,
                                            const std::vector<StatePatients>& patients);

/// Drop Alaska and Hawaii.
std::vector<StateLocation> contiguous_only(std::vector<StateLocation> locations);

/// File names of the bundled fixtures inside a data directory.
struct DatasetPaths {
    std::filesystem::path hospitals;
    std::filesystem::path state_centers;
    std::filesystem::path state_patients;

    static DatasetPaths in_directory(const std::filesystem::path& dir);
};

}  // namespace hrm

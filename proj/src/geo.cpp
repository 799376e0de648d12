#include "hrm/geo.hpp"

#include "hrm/error.hpp"

namespace hrm::geo {

Eigen::MatrixXd distance_matrix(std::span<const GeoPoint> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = haversine(points[static_cast<std::size_t>(i)],
                                          points[static_cast<std::size_t>(j)]);
        }
    }
    return d;
}

Eigen::MatrixX2d coordinates(std::span<const GeoPoint> points) {
    Eigen::MatrixX2d x(static_cast<Eigen::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) << points[i].latitude, points[i].longitude;
    }
    return x;
}

double cost_of_care(double avg_recovery_days, double cost_per_day) {
    if (!(avg_recovery_days > 0.0) || !(cost_per_day > 0.0)) {
        throw DomainError("nonpositive_cost_input",
                          "recovery duration and cost per day must be positive");
    }
    return avg_recovery_days * cost_per_day;
}

}  // namespace hrm::geo

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace hrm::geo {

/// Mean Earth radius (IUGG), km.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// A delivery location: a hospital or a state center.
struct GeoPoint {
    std::string id;
    double latitude = 0.0;   // degrees
    double longitude = 0.0;  // degrees
    double patients = 0.0;
    double cost = 0.0;
    double rating = 0.0;
};

template <typename Scalar>
Scalar deg2rad(Scalar deg) {
    return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

/// Great-circle distance in km between two (lat, lon) pairs in degrees.
template <typename Scalar>
Scalar haversine(Scalar lat1, Scalar lon1, Scalar lat2, Scalar lon2,
                 Scalar radius = Scalar(kEarthRadiusKm)) {
    const Scalar phi1 = deg2rad(lat1);
    const Scalar phi2 = deg2rad(lat2);
    const Scalar dphi = deg2rad(lat2 - lat1);
    const Scalar dlambda = deg2rad(lon2 - lon1);
    const Scalar s1 = std::sin(dphi / 2);
    const Scalar s2 = std::sin(dlambda / 2);
    Scalar h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::min(Scalar(1), std::max(Scalar(0), h));
    return Scalar(2) * radius * std::asin(std::sqrt(h));
}

inline double haversine(const GeoPoint& a, const GeoPoint& b) {
    return haversine(a.latitude, a.longitude, b.latitude, b.longitude);
}

/// Symmetric matrix of pairwise haversine distances, km.
Eigen::MatrixXd distance_matrix(std::span<const GeoPoint> points);

/// (lat, lon) rows for planar clustering.
Eigen::MatrixX2d coordinates(std::span<const GeoPoint> points);

/// Cost of care for an outlier-event patient: average recovery duration
/// times average hospital cost per day. Both inputs must be positive.
double cost_of_care(double avg_recovery_days, double cost_per_day);

}  // namespace hrm::geo

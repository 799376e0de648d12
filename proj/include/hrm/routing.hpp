#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrm/dataset.hpp"
#include "hrm/ga.hpp"
#include "hrm/geo.hpp"

namespace hrm::routing {

using geo::GeoPoint;

enum class TourFitness { ff3, ff4 };

std::string_view to_string(TourFitness k);
TourFitness parse_tour_fitness(std::string_view s);

enum class Normalization { raw, unit };

/// How FF3 combines the legs of a tour.
///  - tour_totals: patients, cost and rating summed over the visited points
///    and divided by the tour length, i.e. FF3 applied to the route as a whole.
///  - per_leg: sum over legs of FF3 with the leg's destination attributes.
enum class Ff3Aggregation { tour_totals, per_leg };

std::string_view to_string(Ff3Aggregation a);
Ff3Aggregation parse_ff3_aggregation(std::string_view s);

/// A closed tour. `order` holds indices into the point list the tour was
/// built from; order[0] is the anchor and the closing leg returns to it.
struct Tour {
    std::vector<int> order;
    std::vector<double> leg_distances;  // km, leg i ends at order[(i + 1) % n]
    double total_distance = 0.0;        // km
    double fitness = 0.0;
    TourFitness fitness_kind = TourFitness::ff4;
};

/// Distances and FF3 attributes as the fitness functions see them.
/// With Normalization::unit every quantity is divided by its maximum over
/// the point set (distances by the largest pairwise distance), which keeps
/// them strictly positive so FF3's denominators stay defined.
struct TourProblem {
    std::vector<GeoPoint> points;
    Eigen::MatrixXd km;         // raw pairwise distances
    Eigen::MatrixXd distances;  // distances used by the fitness
    Eigen::VectorXd patients;
    Eigen::VectorXd cost;
    Eigen::VectorXd rating;
    TourFitness kind = TourFitness::ff4;
    Normalization normalization = Normalization::raw;
    Ff3Aggregation aggregation = Ff3Aggregation::tour_totals;

    static TourProblem build(std::vector<GeoPoint> points, TourFitness kind,
                             Normalization normalization = Normalization::raw,
                             Ff3Aggregation aggregation = Ff3Aggregation::tour_totals);

    /// Restriction to a subset of points, keeping the parent's scaling.
    TourProblem subset(std::span<const int> members) const;

    int size() const { return static_cast<int>(points.size()); }
    int index_of(std::string_view id) const;  // -1 when absent
};

/// 1 / total distance. Throws DomainError("zero_distance") if total is 0.
double ff4(std::span<const double> legs);

/// Sum over legs of patients / (cost * distance * rating), with attributes
/// taken at each leg's destination. Throws DomainError on a zero leg,
/// cost or rating.
double ff3(std::span<const int> order, std::span<const double> legs,
           const Eigen::VectorXd& patients, const Eigen::VectorXd& cost,
           const Eigen::VectorXd& rating);

/// sum(patients) / (sum(cost) * total distance * sum(rating)) over the
/// tour's points. Throws DomainError on zero distance, cost or rating sums.
double ff3_tour_totals(std::span<const int> order, std::span<const double> legs,
                       const Eigen::VectorXd& patients, const Eigen::VectorXd& cost,
                       const Eigen::VectorXd& rating);

/// Legs of the closed tour `order` under distance matrix `d`.
std::vector<double> tour_legs(std::span<const int> order, const Eigen::MatrixXd& d);

/// Fitness of a closed tour under the problem's fitness kind and scaling.
double tour_fitness(const TourProblem& problem, std::span<const int> order);

/// Assemble a Tour (km legs, fitness) for a given visiting order.
Tour make_tour(const TourProblem& problem, std::vector<int> order);

/// Permutation GA over visiting orders with the anchor fixed at `start`.
/// Throws DomainError("fewer_than_3_points") for n < 3.
Tour solve_tsp(const TourProblem& problem, int start, const ga::GaConfig& config);

Tour solve_tsp(std::vector<GeoPoint> points, TourFitness kind, const ga::GaConfig& config,
               std::string_view start_id, Normalization normalization = Normalization::raw);

/// Greedy nearest-neighbor tour from `start` (by the problem's distances).
Tour nearest_neighbor_tour(const TourProblem& problem, int start);

struct ClusterAssignment {
    int k = 1;
    std::vector<int> labels;
    Eigen::MatrixX2d centroids;  // (lat, lon) per cluster
    double sse = 0.0;
    std::vector<double> sse_trace;  // SSE after each Lloyd iteration of the kept run
};

struct KMeansOptions {
    int max_iterations = 300;
    int restarts = 10;  // independent k-means++ starts; lowest SSE wins
};

/// Lloyd's algorithm on planar (lat, lon) rows from k-means++ seeding.
ClusterAssignment kmeans(const Eigen::MatrixX2d& x, int k, std::uint64_t seed,
                         const KMeansOptions& options = {});

/// Sum of squared Euclidean distances from each row to its centroid.
double sse(const Eigen::MatrixX2d& x, const std::vector<int>& labels,
           const Eigen::MatrixX2d& centroids);

struct ElbowResult {
    int k = 1;
    std::vector<int> ks;
    std::vector<double> sse;
};

/// k in [k_min, k_max] maximizing SSE(k-1) - 2 SSE(k) + SSE(k+1) over the
/// interior of the range; ties go to the smallest k.
ElbowResult elbow_select_k(const Eigen::MatrixX2d& x, int k_min, int k_max, std::uint64_t seed,
                           const KMeansOptions& options = {});

/// How route_by_cluster partitions the points.
struct ClusterChoice {
    enum class Mode { off, fixed, automatic } mode = Mode::off;
    int k = 1;
    int k_min = 1;
    int k_max = 8;

    static ClusterChoice none() { return {}; }
    static ClusterChoice fixed_k(int k) { return {Mode::fixed, k}; }
    static ClusterChoice elbow(int k_min = 1, int k_max = 8) { return {Mode::automatic, 0, k_min, k_max}; }
};

struct RouteResult {
    std::vector<Tour> tours;  // orders index the full point list
    std::optional<ClusterAssignment> clusters;
    std::vector<double> cluster_fitness;
    double mean_fitness = 0.0;   // mean over tours
    double total_fitness = 0.0;  // sum over tours
};

/// One independent TSP per cluster (a single tour when clustering is off).
/// A cluster holding the start point is anchored there; otherwise at its
/// member nearest to the start. Clusters with fewer than 3 points get a
/// trivial out-and-back tour.
RouteResult route_by_cluster(const TourProblem& problem, const ga::GaConfig& config,
                             const ClusterChoice& choice, std::string_view start_id);

/// RFC 7946 FeatureCollection: a closed LineString per tour and a Point per
/// visited location carrying cluster, rating and tour fitness.
nlohmann::json export_geojson(const std::vector<GeoPoint>& points, const std::vector<Tour>& tours,
                              const std::optional<ClusterAssignment>& clusters = std::nullopt);

/// Point builders for the bundled datasets.
std::vector<GeoPoint> points_from_states(const std::vector<StateCenter>& states);
std::vector<GeoPoint> points_from_locations(const std::vector<StateLocation>& locations);
std::vector<GeoPoint> points_from_hospitals(const std::vector<HospitalRecord>& records);

}  // namespace hrm::routing

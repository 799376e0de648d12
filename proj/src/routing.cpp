#include "hrm/routing.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace hrm::routing {

std::string_view to_string(TourFitness k) { return k == TourFitness::ff3 ? "ff3" : "ff4"; }

TourFitness parse_tour_fitness(std::string_view s) {
    if (s == "ff3" || s == "FF3") return TourFitness::ff3;
    if (s == "ff4" || s == "FF4") return TourFitness::ff4;
    throw DomainError("invalid_fitness", "fitness must be ff3 or ff4");
}

std::string_view to_string(Ff3Aggregation a) {
    return a == Ff3Aggregation::tour_totals ? "tour_totals" : "per_leg";
}

Ff3Aggregation parse_ff3_aggregation(std::string_view s) {
    if (s == "tour_totals" || s == "tour-totals") return Ff3Aggregation::tour_totals;
    if (s == "per_leg" || s == "per-leg") return Ff3Aggregation::per_leg;
    throw DomainError("invalid_aggregation", "FF3 aggregation must be tour_totals or per_leg");
}

// ---------------------------------------------------------------------------
// Tour problem

TourProblem TourProblem::build(std::vector<GeoPoint> points, TourFitness kind,
                               Normalization normalization, Ff3Aggregation aggregation) {
    TourProblem p;
    p.kind = kind;
    p.normalization = normalization;
    p.aggregation = aggregation;
    const auto n = static_cast<Eigen::Index>(points.size());
    p.km = geo::distance_matrix(points);
    p.patients.resize(n);
    p.cost.resize(n);
    p.rating.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pt = points[static_cast<std::size_t>(i)];
        if (pt.latitude < -90 || pt.latitude > 90 || pt.longitude < -180 || pt.longitude > 180) {
            throw DomainError("invalid_coordinates", pt.id + ": coordinates out of range");
        }
        p.patients[i] = pt.patients;
        p.cost[i] = pt.cost;
        p.rating[i] = pt.rating;
    }
    p.distances = p.km;
    if (normalization == Normalization::unit && n > 0) {
        // Scaling against zero keeps every positive quantity positive.
        auto scale = [](Eigen::VectorXd& v) {
            const double mx = v.maxCoeff();
            if (mx > 0.0) v = linear_scaling(v, 0.0, mx);
        };
        scale(p.patients);
        scale(p.cost);
        scale(p.rating);
        const double dmax = p.km.maxCoeff();
        if (dmax > 0.0) p.distances = p.km / dmax;
    }
    p.points = std::move(points);
    return p;
}

TourProblem TourProblem::subset(std::span<const int> members) const {
    TourProblem s;
    s.kind = kind;
    s.normalization = normalization;
    s.aggregation = aggregation;
    const auto m = static_cast<Eigen::Index>(members.size());
    s.km.resize(m, m);
    s.distances.resize(m, m);
    s.patients.resize(m);
    s.cost.resize(m);
    s.rating.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int gi = members[static_cast<std::size_t>(i)];
        s.points.push_back(points[static_cast<std::size_t>(gi)]);
        s.patients[i] = patients[gi];
        s.cost[i] = cost[gi];
        s.rating[i] = rating[gi];
        for (Eigen::Index j = 0; j < m; ++j) {
            const int gj = members[static_cast<std::size_t>(j)];
            s.km(i, j) = km(gi, gj);
            s.distances(i, j) = distances(gi, gj);
        }
    }
    return s;
}

int TourProblem::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

// ---------------------------------------------------------------------------
// Fitness

double ff4(std::span<const double> legs) {
    const double total = std::accumulate(legs.begin(), legs.end(), 0.0);
    if (!(total > 0.0)) throw DomainError("zero_distance", "tour has zero total distance");
    return 1.0 / total;
}

double ff3(std::span<const int> order, std::span<const double> legs,
           const Eigen::VectorXd& patients, const Eigen::VectorXd& cost,
           const Eigen::VectorXd& rating) {
    const std::size_t n = order.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < legs.size(); ++i) {
        const int dest = order[(i + 1) % n];
        const double d = legs[i];
        if (!(d > 0.0)) throw DomainError("zero_distance", "tour leg has zero length");
        if (!(cost[dest] > 0.0)) throw DomainError("zero_cost", "destination cost must be positive");
        if (!(rating[dest] > 0.0)) {
            throw DomainError("zero_rating", "destination rating must be positive");
        }
        sum += patients[dest] / (cost[dest] * d * rating[dest]);
    }
    return sum;
}

double ff3_tour_totals(std::span<const int> order, std::span<const double> legs,
                       const Eigen::VectorXd& patients, const Eigen::VectorXd& cost,
                       const Eigen::VectorXd& rating) {
    double p = 0.0, c = 0.0, r = 0.0;
    for (int i : order) {
        p += patients[i];
        c += cost[i];
        r += rating[i];
    }
    const double d = std::accumulate(legs.begin(), legs.end(), 0.0);
    if (!(d > 0.0)) throw DomainError("zero_distance", "tour has zero total distance");
    if (!(c > 0.0)) throw DomainError("zero_cost", "tour cost must be positive");
    if (!(r > 0.0)) throw DomainError("zero_rating", "tour rating must be positive");
    return p / (c * d * r);
}

std::vector<double> tour_legs(std::span<const int> order, const Eigen::MatrixXd& d) {
    const std::size_t n = order.size();
    std::vector<double> legs;
    if (n < 2) return legs;
    legs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) legs.push_back(d(order[i], order[(i + 1) % n]));
    return legs;
}

double tour_fitness(const TourProblem& problem, std::span<const int> order) {
    const auto legs = tour_legs(order, problem.distances);
    if (problem.kind == TourFitness::ff4) return ff4(legs);
    if (problem.aggregation == Ff3Aggregation::tour_totals) {
        return ff3_tour_totals(order, legs, problem.patients, problem.cost, problem.rating);
    }
    return ff3(order, legs, problem.patients, problem.cost, problem.rating);
}

Tour make_tour(const TourProblem& problem, std::vector<int> order) {
    Tour t;
    t.fitness_kind = problem.kind;
    t.leg_distances = tour_legs(order, problem.km);
    t.total_distance = std::accumulate(t.leg_distances.begin(), t.leg_distances.end(), 0.0);
    t.fitness = order.size() >= 2 ? tour_fitness(problem, order) : 0.0;
    t.order = std::move(order);
    return t;
}

// ---------------------------------------------------------------------------
// TSP

Tour solve_tsp(const TourProblem& problem, int start, const ga::GaConfig& config) {
    const int n = problem.size();
    if (n < 3) throw DomainError("fewer_than_3_points", "a tour needs at least 3 points");
    if (start < 0 || start >= n) throw DomainError("unknown_start", "start point not in the point set");

    // Genes permute the non-anchor points.
    std::vector<int> others;
    for (int i = 0; i < n; ++i) {
        if (i != start) others.push_back(i);
    }
    auto decode = [&](const ga::Chromosome& c) {
        std::vector<int> order;
        order.reserve(static_cast<std::size_t>(n));
        order.push_back(start);
        for (int g : c.order()) order.push_back(others[static_cast<std::size_t>(g)]);
        return order;
    };

    ga::GaConfig cfg = config;
    cfg.encoding = ga::Encoding::permutation;
    const auto result = ga::run(
        cfg, [&](const ga::Chromosome& c) { return tour_fitness(problem, decode(c)); }, n - 1);
    return make_tour(problem, decode(result.best));
}

Tour solve_tsp(std::vector<GeoPoint> points, TourFitness kind, const ga::GaConfig& config,
               std::string_view start_id, Normalization normalization) {
    const auto problem = TourProblem::build(std::move(points), kind, normalization);
    if (problem.size() < 3) throw DomainError("fewer_than_3_points", "a tour needs at least 3 points");
    const int start = problem.index_of(start_id);
    if (start < 0) {
        throw DomainError("unknown_start", "start point '" + std::string(start_id) + "' not found");
    }
    return solve_tsp(problem, start, config);
}

Tour nearest_neighbor_tour(const TourProblem& problem, int start) {
    const int n = problem.size();
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    std::vector<int> order{start};
    visited[static_cast<std::size_t>(start)] = true;
    for (int step = 1; step < n; ++step) {
        const int at = order.back();
        int next = -1;
        for (int j = 0; j < n; ++j) {
            if (visited[static_cast<std::size_t>(j)]) continue;
            if (next < 0 || problem.distances(at, j) < problem.distances(at, next)) next = j;
        }
        visited[static_cast<std::size_t>(next)] = true;
        order.push_back(next);
    }
    return make_tour(problem, std::move(order));
}

// ---------------------------------------------------------------------------
// Clustering

double sse(const Eigen::MatrixX2d& x, const std::vector<int>& labels,
           const Eigen::MatrixX2d& centroids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return total;
}

namespace {

Eigen::MatrixX2d kmeanspp(const Eigen::MatrixX2d& x, int k, ga::Rng& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixX2d c(k, 2);
    c.row(0) = x.row(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
    Eigen::VectorXd d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
    for (int j = 1; j < k; ++j) {
        Eigen::Index pick = 0;
        const double total = d2.sum();
        if (total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (pick = 0; pick < n - 1; ++pick) {
                u -= d2[pick];
                if (u < 0.0) break;
            }
        } else {
            pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        }
        c.row(j) = x.row(pick);
        d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
    }
    return c;
}

int nearest_centroid(const Eigen::RowVector2d& p, const Eigen::MatrixX2d& c) {
    Eigen::Index best = 0;
    (c.rowwise() - p).rowwise().squaredNorm().minCoeff(&best);
    return static_cast<int>(best);
}

ClusterAssignment lloyd(const Eigen::MatrixX2d& x, int k, ga::Rng& rng, int max_iterations) {
    const Eigen::Index n = x.rows();
    ClusterAssignment a;
    a.k = k;
    a.centroids = kmeanspp(x, k, rng);
    a.labels.assign(static_cast<std::size_t>(n), -1);

    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int current = a.labels[static_cast<std::size_t>(i)];
            const int l = nearest_centroid(x.row(i), a.centroids);
            // Keep the current label on exact ties.
            if (current >= 0 && (x.row(i) - a.centroids.row(current)).squaredNorm() <=
                                    (x.row(i) - a.centroids.row(l)).squaredNorm()) {
                continue;
            }
            if (l != current) {
                a.labels[static_cast<std::size_t>(i)] = l;
                changed = true;
            }
        }
        if (!changed) break;

        Eigen::MatrixX2d sums = Eigen::MatrixX2d::Zero(k, 2);
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(a.labels[static_cast<std::size_t>(i)]) += x.row(i);
            ++counts[a.labels[static_cast<std::size_t>(i)]];
        }
        for (int j = 0; j < k; ++j) {
            if (counts[j] > 0) a.centroids.row(j) = sums.row(j) / counts[j];
        }
        // An emptied cluster takes over the point farthest from its centroid.
        for (int j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            Eigen::VectorXd d2(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                d2[i] = (x.row(i) - a.centroids.row(a.labels[static_cast<std::size_t>(i)])).squaredNorm();
            }
            Eigen::Index far = 0;
            d2.maxCoeff(&far);
            --counts[a.labels[static_cast<std::size_t>(far)]];
            a.labels[static_cast<std::size_t>(far)] = j;
            counts[j] = 1;
            a.centroids.row(j) = x.row(far);
        }
        a.sse_trace.push_back(sse(x, a.labels, a.centroids));
    }
    a.sse = sse(x, a.labels, a.centroids);
    if (a.sse_trace.empty() || a.sse_trace.back() != a.sse) a.sse_trace.push_back(a.sse);
    return a;
}

}  // namespace

ClusterAssignment kmeans(const Eigen::MatrixX2d& x, int k, std::uint64_t seed,
                         const KMeansOptions& options) {
    const auto n = static_cast<int>(x.rows());
    if (k < 1 || k > n) throw DomainError("invalid_k", "k must lie in [1, number of points]");
    ga::Rng rng(seed);
    std::optional<ClusterAssignment> best;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        auto a = lloyd(x, k, rng, options.max_iterations);
        if (!best || a.sse < best->sse) best = std::move(a);
    }
    return *best;
}

ElbowResult elbow_select_k(const Eigen::MatrixX2d& x, int k_min, int k_max, std::uint64_t seed,
                           const KMeansOptions& options) {
    if (k_max - k_min + 1 < 3) {
        throw DomainError("invalid_k_range", "elbow selection needs at least 3 values of k");
    }
    if (k_min < 1 || k_max > x.rows()) {
        throw DomainError("invalid_k_range", "k range must lie within [1, number of points]");
    }
    ElbowResult r;
    for (int k = k_min; k <= k_max; ++k) {
        r.ks.push_back(k);
        r.sse.push_back(kmeans(x, k, seed, options).sse);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < r.sse.size(); ++i) {
        const double curvature = r.sse[i - 1] - 2.0 * r.sse[i] + r.sse[i + 1];
        if (curvature > best) {
            best = curvature;
            r.k = r.ks[i];
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Clustered routing

RouteResult route_by_cluster(const TourProblem& problem, const ga::GaConfig& config,
                             const ClusterChoice& choice, std::string_view start_id) {
    const int n = problem.size();
    const int start = problem.index_of(start_id);
    if (start < 0) {
        throw DomainError("unknown_start", "start point '" + std::string(start_id) + "' not found");
    }

    RouteResult result;
    std::vector<std::vector<int>> groups;
    if (choice.mode == ClusterChoice::Mode::off) {
        if (n < 3) throw DomainError("fewer_than_3_points", "a tour needs at least 3 points");
        groups.emplace_back(static_cast<std::size_t>(n));
        std::iota(groups[0].begin(), groups[0].end(), 0);
    } else {
        const Eigen::MatrixX2d x = geo::coordinates(problem.points);
        int k = choice.k;
        if (choice.mode == ClusterChoice::Mode::automatic) {
            k = elbow_select_k(x, choice.k_min, std::min(choice.k_max, n), config.seed).k;
        }
        result.clusters = kmeans(x, k, config.seed);
        groups.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < n; ++i) {
            groups[static_cast<std::size_t>(result.clusters->labels[static_cast<std::size_t>(i)])].push_back(i);
        }
    }

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& members = groups[g];
        int anchor = 0;
        const auto own = std::find(members.begin(), members.end(), start);
        if (own != members.end()) {
            anchor = static_cast<int>(own - members.begin());
        } else {
            for (std::size_t m = 1; m < members.size(); ++m) {
                if (problem.km(start, members[m]) < problem.km(start, members[static_cast<std::size_t>(anchor)])) {
                    anchor = static_cast<int>(m);
                }
            }
        }
        const TourProblem sub = problem.subset(members);
        Tour local;
        if (sub.size() >= 3) {
            ga::GaConfig cfg = config;
            cfg.seed = config.seed + g;
            local = solve_tsp(sub, anchor, cfg);
        } else {
            std::vector<int> order{anchor};
            if (sub.size() == 2) order.push_back(1 - anchor);
            local = make_tour(sub, std::move(order));
        }
        for (auto& idx : local.order) idx = members[static_cast<std::size_t>(idx)];
        result.cluster_fitness.push_back(local.fitness);
        result.tours.push_back(std::move(local));
    }
    result.total_fitness = std::accumulate(result.cluster_fitness.begin(), result.cluster_fitness.end(), 0.0);
    result.mean_fitness = result.total_fitness / static_cast<double>(result.cluster_fitness.size());
    return result;
}

// ---------------------------------------------------------------------------
// GeoJSON

nlohmann::json export_geojson(const std::vector<GeoPoint>& points, const std::vector<Tour>& tours,
                              const std::optional<ClusterAssignment>& clusters) {
    using nlohmann::json;
    json features = json::array();
    for (std::size_t t = 0; t < tours.size(); ++t) {
        const Tour& tour = tours[t];
        const int cluster_id = clusters && !tour.order.empty()
                                   ? clusters->labels[static_cast<std::size_t>(tour.order.front())]
                                   : static_cast<int>(t);
        json coords = json::array();
        for (int idx : tour.order) {
            const auto& p = points[static_cast<std::size_t>(idx)];
            coords.push_back({p.longitude, p.latitude});
        }
        if (!tour.order.empty()) coords.push_back(coords.front());
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                            {"properties",
                             {{"cluster", cluster_id},
                              {"fitness", tour.fitness},
                              {"fitness_kind", to_string(tour.fitness_kind)},
                              {"total_distance_km", tour.total_distance}}}});
        for (std::size_t pos = 0; pos < tour.order.size(); ++pos) {
            const auto& p = points[static_cast<std::size_t>(tour.order[pos])];
            features.push_back({{"type", "Feature"},
                                {"geometry", {{"type", "Point"}, {"coordinates", {p.longitude, p.latitude}}}},
                                {"properties",
                                 {{"id", p.id},
                                  {"cluster", cluster_id},
                                  {"rating", p.rating},
                                  {"fitness", tour.fitness},
                                  {"visit", pos}}}});
        }
    }
    return {{"type", "FeatureCollection"}, {"features", features}};
}

std::vector<GeoPoint> points_from_states(const std::vector<StateCenter>& states) {
    std::vector<GeoPoint> out;
    for (const auto& s : states) {
        out.push_back({s.state, s.latitude, s.longitude, s.patients, s.cost, s.rating_sum});
    }
    return out;
}

std::vector<GeoPoint> points_from_locations(const std::vector<StateLocation>& locations) {
    std::vector<GeoPoint> out;
    for (const auto& s : locations) {
        out.push_back({s.state, s.latitude, s.longitude, 0.0, 0.0, s.rating_sum});
    }
    return out;
}

std::vector<GeoPoint> points_from_hospitals(const std::vector<HospitalRecord>& records) {
    std::vector<GeoPoint> out;
    for (const auto& r : records) {
        out.push_back({r.facility_name, r.latitude, r.longitude, r.patients, r.cost,
                       static_cast<double>(r.rating)});
    }
    return out;
}

}  // namespace hrm::routing

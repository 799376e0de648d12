#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hrm/dataset.hpp"
#include "hrm/ga.hpp"

namespace hrm::allocation {

/// Weights of beds (alpha), death rate (beta) and cost (gamma).
struct FitnessConstants {
    double alpha = 2.0;
    double beta = 1.0;
    double gamma = 1.0;

    void validate() const;
};

enum class FitnessKind { ff1, ff2 };

std::string_view to_string(FitnessKind k);
FitnessKind parse_fitness_kind(std::string_view s);

/// (alpha * beds) / (beta * death_rate) + 1 / (gamma * cost)
double ff2(const HospitalRecord& r, const FitnessConstants& c);

/// rating * ff2
double ff1(const HospitalRecord& r, const FitnessConstants& c);

double fitness(const HospitalRecord& r, FitnessKind kind, const FitnessConstants& c);

struct AllocationOptions {
    double bed_budget = 50.0;
    /// Per-hospital increment cap as a fraction of its baseline beds.
    double cap_fraction = 0.5;
    /// Weight of the linear over-budget penalty; defaults to ten times the
    /// largest per-hospital baseline fitness.
    std::optional<double> penalty_weight;
    /// New cost = cost * (1 + cost_coupling * increment / baseline_beds).
    double cost_coupling = 1.0;
    /// An increment above this many beds counts as a request.
    double decision_threshold = 0.5;

    void validate() const;
};

struct AllocationDecision {
    std::string facility_name;
    int rating = 1;
    double baseline_beds = 0.0;
    double death_rate = 0.0;
    double cost = 0.0;
    double increment = 0.0;       // raw GA increment
    double optimized_beds = 0.0;  // baseline plus increment when requested
    double ff1 = 0.0;             // baseline fitness values
    double ff2 = 0.0;
    double optimized_fitness = 0.0;  // chosen kind, at optimized beds and coupled cost
    std::optional<bool> decision_ff1;
    std::optional<bool> decision_ff2;
};

struct AllocationResult {
    FitnessKind kind = FitnessKind::ff1;
    std::vector<AllocationDecision> decisions;  // descending by baseline fitness
    double total_increment = 0.0;
    double penalty_weight = 0.0;
    ga::GaResult ga;
};

/// The record as it would look after adding `increment` beds.
HospitalRecord with_increment(const HospitalRecord& r, double increment, double cost_coupling = 1.0);

/// Objective maximized by the allocation GA for a vector of increments.
double allocation_objective(const std::vector<HospitalRecord>& records,
                            const Eigen::VectorXd& increments, FitnessKind kind,
                            const FitnessConstants& c, const AllocationOptions& options,
                            double penalty_weight);

/// Real-valued GA over per-hospital bed increments under a bed budget.
/// Throws DataError("zero_baseline_beds") naming every record without beds.
AllocationResult optimize_allocation(const std::vector<HospitalRecord>& records, FitnessKind kind,
                                     const FitnessConstants& c, const AllocationOptions& options,
                                     ga::GaConfig config = ga::GaConfig::allocation_defaults());

/// Runs both fitness functions and merges the decisions into one row per
/// hospital, ordered by `order_by`.
std::vector<AllocationDecision> allocate_both(const std::vector<HospitalRecord>& records,
                                              FitnessKind order_by, const FitnessConstants& c,
                                              const AllocationOptions& options,
                                              const ga::GaConfig& config = ga::GaConfig::allocation_defaults());

struct RankedHospital {
    std::string facility_name;
    double fitness = 0.0;
    std::size_t index = 0;  // position in the input
};

/// Descending by fitness; ties by facility name, then input order.
std::vector<RankedHospital> rank(const std::vector<HospitalRecord>& records, FitnessKind kind,
                                 const FitnessConstants& c);

/// Table-3 shaped CSV: facility_name, rating, beds, death_rate, cost,
/// decision_1, ff1, decision_2, ff2, optimized_beds.
void write_csv(std::ostream& out, const std::vector<AllocationDecision>& decisions);

}  // namespace hrm::allocation

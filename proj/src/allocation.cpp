#include "hrm/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hrm/csv.hpp"

namespace hrm::allocation {

void FitnessConstants::validate() const {
    if (!(alpha > 0.0 && beta > 0.0 && gamma > 0.0)) {
        throw DomainError("invalid_constants", "alpha, beta and gamma must be positive");
    }
}

std::string_view to_string(FitnessKind k) { return k == FitnessKind::ff1 ? "ff1" : "ff2"; }

FitnessKind parse_fitness_kind(std::string_view s) {
    if (s == "ff1" || s == "FF1") return FitnessKind::ff1;
    if (s == "ff2" || s == "FF2") return FitnessKind::ff2;
    throw DomainError("invalid_fitness", "fitness must be ff1 or ff2");
}

double ff2(const HospitalRecord& r, const FitnessConstants& c) {
    c.validate();
    if (!(r.death_rate > 0.0)) {
        throw DomainError("zero_death_rate", r.facility_name + ": death rate must be positive");
    }
    if (!(r.cost > 0.0)) {
        throw DomainError("zero_cost", r.facility_name + ": cost must be positive");
    }
    return (c.alpha * r.beds) / (c.beta * r.death_rate) + 1.0 / (c.gamma * r.cost);
}

double ff1(const HospitalRecord& r, const FitnessConstants& c) { return r.rating * ff2(r, c); }

double fitness(const HospitalRecord& r, FitnessKind kind, const FitnessConstants& c) {
    return kind == FitnessKind::ff1 ? ff1(r, c) : ff2(r, c);
}

void AllocationOptions::validate() const {
    if (!(bed_budget >= 0.0)) throw DomainError("invalid_budget", "bed budget must be nonnegative");
    if (!(cap_fraction >= 0.0)) throw DomainError("invalid_cap", "cap fraction must be nonnegative");
    if (penalty_weight && !(*penalty_weight > 0.0)) {
        throw DomainError("invalid_penalty", "penalty weight must be positive");
    }
    if (!(cost_coupling >= 0.0)) {
        throw DomainError("invalid_coupling", "cost coupling must be nonnegative");
    }
}

HospitalRecord with_increment(const HospitalRecord& r, double increment, double cost_coupling) {
    HospitalRecord out = r;
    out.beds = r.beds + increment;
    out.cost = r.cost * (1.0 + cost_coupling * increment / r.beds);
    return out;
}

double allocation_objective(const std::vector<HospitalRecord>& records,
                            const Eigen::VectorXd& increments, FitnessKind kind,
                            const FitnessConstants& c, const AllocationOptions& options,
                            double penalty_weight) {
    double total = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double inc = increments[static_cast<Eigen::Index>(i)];
        total += fitness(with_increment(records[i], inc, options.cost_coupling), kind, c);
    }
    const double excess = std::max(0.0, increments.sum() - options.bed_budget);
    return total - penalty_weight * excess;
}

namespace {

void check_records(const std::vector<HospitalRecord>& records) {
    if (records.empty()) throw DomainError("empty_dataset", "no hospital records to allocate");
    std::ostringstream bad;
    int count = 0;
    for (const auto& r : records) {
        if (!(r.beds > 0.0)) {
            bad << (count++ ? ", " : "") << r.facility_name;
        }
    }
    if (count > 0) {
        throw DataError("zero_baseline_beds",
                        "cost coupling is undefined without baseline beds: " + bad.str());
    }
}

std::vector<std::size_t> ranking_order(const std::vector<HospitalRecord>& records,
                                       const std::vector<double>& scores) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return records[a].facility_name < records[b].facility_name;
    });
    return order;
}

}  // namespace

std::vector<RankedHospital> rank(const std::vector<HospitalRecord>& records, FitnessKind kind,
                                 const FitnessConstants& c) {
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const auto& r : records) scores.push_back(fitness(r, kind, c));
    std::vector<RankedHospital> out;
    for (auto i : ranking_order(records, scores)) {
        out.push_back({records[i].facility_name, scores[i], i});
    }
    return out;
}

AllocationResult optimize_allocation(const std::vector<HospitalRecord>& records, FitnessKind kind,
                                     const FitnessConstants& c, const AllocationOptions& options,
                                     ga::GaConfig config) {
    c.validate();
    options.validate();
    check_records(records);

    std::vector<double> baseline;
    for (const auto& r : records) baseline.push_back(fitness(r, kind, c));
    const double lambda =
        options.penalty_weight.value_or(10.0 * *std::max_element(baseline.begin(), baseline.end()));

    config.encoding = ga::Encoding::real;
    config.bounds.clear();
    for (const auto& r : records) {
        config.bounds.push_back({0.0, std::min(options.cap_fraction * r.beds, options.bed_budget)});
    }

    auto objective = [&](const ga::Chromosome& ch) {
        return allocation_objective(records, ch.reals(), kind, c, options, lambda);
    };
    AllocationResult result;
    result.kind = kind;
    result.penalty_weight = lambda;
    result.ga = ga::run(config, objective, static_cast<int>(records.size()));

    const Eigen::VectorXd& inc = result.ga.best.reals();
    result.total_increment = inc.sum();
    for (auto i : ranking_order(records, baseline)) {
        const HospitalRecord& r = records[i];
        AllocationDecision d;
        d.facility_name = r.facility_name;
        d.rating = r.rating;
        d.baseline_beds = r.beds;
        d.death_rate = r.death_rate;
        d.cost = r.cost;
        d.increment = inc[static_cast<Eigen::Index>(i)];
        const bool request = d.increment > options.decision_threshold;
        d.optimized_beds = request ? r.beds + d.increment : r.beds;
        d.ff1 = ff1(r, c);
        d.ff2 = ff2(r, c);
        d.optimized_fitness =
            fitness(with_increment(r, request ? d.increment : 0.0, options.cost_coupling), kind, c);
        (kind == FitnessKind::ff1 ? d.decision_ff1 : d.decision_ff2) = request;
        result.decisions.push_back(std::move(d));
    }
    return result;
}

std::vector<AllocationDecision> allocate_both(const std::vector<HospitalRecord>& records,
                                              FitnessKind order_by, const FitnessConstants& c,
                                              const AllocationOptions& options,
                                              const ga::GaConfig& config) {
    const auto primary = optimize_allocation(records, order_by, c, options, config);
    const FitnessKind other_kind = order_by == FitnessKind::ff1 ? FitnessKind::ff2 : FitnessKind::ff1;
    const auto other = optimize_allocation(records, other_kind, c, options, config);

    std::vector<AllocationDecision> merged = primary.decisions;
    for (auto& d : merged) {
        const auto it = std::find_if(other.decisions.begin(), other.decisions.end(),
                                     [&](const AllocationDecision& o) { return o.facility_name == d.facility_name; });
        if (order_by == FitnessKind::ff1) {
            d.decision_ff2 = it->decision_ff2;
        } else {
            d.decision_ff1 = it->decision_ff1;
        }
    }
    return merged;
}

void write_csv(std::ostream& out, const std::vector<AllocationDecision>& decisions) {
    auto bit = [](const std::optional<bool>& b) { return b ? (*b ? "1" : "0") : ""; };
    out << "facility_name,rating,beds,death_rate,cost,decision_1,ff1,decision_2,ff2,optimized_beds\n";
    out << std::fixed;
    for (const auto& d : decisions) {
        out << csv::escape(d.facility_name) << ',' << d.rating << ',' << std::setprecision(1)
            << d.baseline_beds << ',' << d.death_rate << ',' << d.cost << ',' << bit(d.decision_ff1)
            << ',' << std::setprecision(4) << d.ff1 << ',' << bit(d.decision_ff2) << ',' << d.ff2
            << ',' << d.optimized_beds << '\n';
    }
    out << std::defaultfloat;
}

}  // namespace hrm::allocation

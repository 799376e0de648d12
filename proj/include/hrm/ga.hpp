#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hrm/error.hpp"

namespace hrm::ga {

enum class Encoding { binary, real, permutation };

std::string_view to_string(Encoding e);
Encoding parse_encoding(std::string_view s);

using BitString = std::vector<std::uint8_t>;
using RealVector = Eigen::VectorXd;
using Permutation = std::vector<int>;

/// Permutation mutation: swap two positions, or reverse the segment
/// between them (a 2-opt move on tours).
enum class PermutationMutation { swap, inversion };

std::string_view to_string(PermutationMutation m);
PermutationMutation parse_permutation_mutation(std::string_view s);

struct Bounds {
    double lo = 0.0;
    double hi = 1.0;
};

class Chromosome {
public:
    Chromosome() = default;
    explicit Chromosome(BitString bits) : genes_(std::move(bits)) {}
    explicit Chromosome(RealVector reals) : genes_(std::move(reals)) {}
    explicit Chromosome(Permutation order) : genes_(std::move(order)) {}

    Encoding encoding() const { return static_cast<Encoding>(genes_.index()); }
    int size() const;

    const BitString& bits() const { return std::get<BitString>(genes_); }
    const RealVector& reals() const { return std::get<RealVector>(genes_); }
    const Permutation& order() const { return std::get<Permutation>(genes_); }
    BitString& bits() { return std::get<BitString>(genes_); }
    RealVector& reals() { return std::get<RealVector>(genes_); }
    Permutation& order() { return std::get<Permutation>(genes_); }

    std::string to_string() const;

    friend bool operator==(const Chromosome& a, const Chromosome& b);

private:
    // Alternative order mirrors Encoding.
    std::variant<BitString, RealVector, Permutation> genes_;
};

/// Bounds for gene i: a single entry is broadcast to every gene.
Bounds bounds_for(std::span<const Bounds> bounds, int i);

/// True when the chromosome satisfies its encoding invariants: bits are 0/1,
/// reals lie within bounds, a permutation is a bijection on 0..n-1.
bool is_valid(const Chromosome& c, std::span<const Bounds> bounds = {});

struct GaConfig {
    Encoding encoding = Encoding::binary;
    int population_size = 1000;
    double mutation_prob = 0.5;   // per offspring
    double crossover_prob = 0.8;  // per parent pair
    int max_iterations = 1000;
    int stall_iterations = 250;  // generations without best-fitness improvement
    double elitism_fraction = 0.05;
    int tournament_size = 2;
    std::uint64_t seed = 1;
    std::vector<Bounds> bounds;  // real encoding only
    PermutationMutation permutation_mutation = PermutationMutation::swap;
    bool parallel_evaluation = false;

    /// Hyperparameters used for bed allocation.
    static GaConfig allocation_defaults();
    /// Hyperparameters used for tour search (inversion mutation).
    static GaConfig routing_defaults();

    /// Throws DomainError("invalid_ga_config") on violated invariants.
    void validate(int genome_len) const;
};

enum class Termination { max_iter, stall };

std::string_view to_string(Termination t);

struct GaResult {
    Chromosome best;
    double best_fitness = 0.0;
    std::vector<double> history;  // best fitness of generation 0..generations_run
    int generations_run = 0;
    Termination terminated_by = Termination::max_iter;
};

using Rng = std::mt19937_64;
using FitnessFn = std::function<double(const Chromosome&)>;

/// Observer called with every generation's population (including the
/// initial one). Used by tests to check encoding invariants.
using GenerationHook = std::function<void(int generation, std::span<const Chromosome>)>;

Chromosome random_chromosome(Encoding encoding, int genome_len, std::span<const Bounds> bounds,
                             Rng& rng);

/// Change exactly one gene: flip a bit, resample a real uniformly within its
/// bounds, or swap two positions of a permutation. With
/// PermutationMutation::inversion the segment between the two positions is
/// reversed instead.
Chromosome mutate(const Chromosome& c, Rng& rng, std::span<const Bounds> bounds = {},
                  PermutationMutation kind = PermutationMutation::swap);

/// Single-point crossover for binary/real, ordered crossover (OX) for
/// permutations. Throws DomainError("length_mismatch") on incompatible parents.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng);

/// Children swap tails from position `cut` on (0 <= cut <= n).
std::pair<Chromosome, Chromosome> single_point_crossover(const Chromosome& a, const Chromosome& b,
                                                         int cut);

/// OX: each child keeps its parent's slice [first, last] and fills the
/// remaining positions, starting after `last`, in the other parent's order.
std::pair<Chromosome, Chromosome> ordered_crossover(const Chromosome& a, const Chromosome& b,
                                                    int first, int last);

/// Maximizes `fitness`. Deterministic for a given config (including seed).
/// A NaN fitness aborts the run with DomainError("nan_fitness").
GaResult run(const GaConfig& config, const FitnessFn& fitness, int genome_len,
             const GenerationHook& on_generation = {});

}  // namespace hrm::ga

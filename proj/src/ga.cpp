#include "hrm/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace hrm::ga {

std::string_view to_string(Encoding e) {
    switch (e) {
        case Encoding::binary: return "binary";
        case Encoding::real: return "real";
        case Encoding::permutation: return "permutation";
    }
    return "?";
}

Encoding parse_encoding(std::string_view s) {
    if (s == "binary") return Encoding::binary;
    if (s == "real") return Encoding::real;
    if (s == "permutation") return Encoding::permutation;
    throw DomainError("invalid_ga_config", "unknown encoding '" + std::string(s) + "'");
}

std::string_view to_string(PermutationMutation m) {
    return m == PermutationMutation::swap ? "swap" : "inversion";
}

PermutationMutation parse_permutation_mutation(std::string_view s) {
    if (s == "swap") return PermutationMutation::swap;
    if (s == "inversion") return PermutationMutation::inversion;
    throw DomainError("invalid_ga_config", "permutation mutation must be swap or inversion");
}

std::string_view to_string(Termination t) { return t == Termination::max_iter ? "max_iter" : "stall"; }

int Chromosome::size() const {
    return std::visit([](const auto& g) { return static_cast<int>(g.size()); }, genes_);
}

std::string Chromosome::to_string() const {
    std::ostringstream out;
    out << ga::to_string(encoding()) << "[";
    std::visit(
        [&](const auto& g) {
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(g.size()); ++i) {
                if (i > 0) out << ",";
                if constexpr (std::is_same_v<std::decay_t<decltype(g)>, BitString>) {
                    out << static_cast<int>(g[static_cast<std::size_t>(i)]);
                } else if constexpr (std::is_same_v<std::decay_t<decltype(g)>, RealVector>) {
                    out << g[i];
                } else {
                    out << g[static_cast<std::size_t>(i)];
                }
            }
        },
        genes_);
    out << "]";
    return out.str();
}

bool operator==(const Chromosome& a, const Chromosome& b) {
    if (a.encoding() != b.encoding()) return false;
    switch (a.encoding()) {
        case Encoding::binary: return a.bits() == b.bits();
        case Encoding::real:
            return a.reals().size() == b.reals().size() && a.reals() == b.reals();
        case Encoding::permutation: return a.order() == b.order();
    }
    return false;
}

Bounds bounds_for(std::span<const Bounds> bounds, int i) {
    if (bounds.empty()) return {};
    if (bounds.size() == 1) return bounds.front();
    return bounds[static_cast<std::size_t>(i)];
}

bool is_valid(const Chromosome& c, std::span<const Bounds> bounds) {
    switch (c.encoding()) {
        case Encoding::binary:
            return std::all_of(c.bits().begin(), c.bits().end(),
                               [](std::uint8_t b) { return b == 0 || b == 1; });
        case Encoding::real:
            for (int i = 0; i < c.size(); ++i) {
                const Bounds b = bounds_for(bounds, i);
                const double v = c.reals()[i];
                if (!(v >= b.lo && v <= b.hi)) return false;
            }
            return true;
        case Encoding::permutation: {
            std::vector<bool> seen(c.order().size(), false);
            for (int g : c.order()) {
                if (g < 0 || g >= c.size() || seen[static_cast<std::size_t>(g)]) return false;
                seen[static_cast<std::size_t>(g)] = true;
            }
            return true;
        }
    }
    return false;
}

GaConfig GaConfig::allocation_defaults() {
    GaConfig c;
    c.encoding = Encoding::real;
    c.population_size = 1000;
    c.mutation_prob = 0.5;
    c.max_iterations = 1000;
    c.stall_iterations = 250;
    return c;
}

GaConfig GaConfig::routing_defaults() {
    GaConfig c;
    c.encoding = Encoding::permutation;
    c.population_size = 100;
    c.mutation_prob = 0.2;
    c.max_iterations = 5000;
    c.stall_iterations = 1000;
    c.permutation_mutation = PermutationMutation::inversion;
    return c;
}

void GaConfig::validate(int genome_len) const {
    auto fail = [](const std::string& what) { throw DomainError("invalid_ga_config", what); };
    if (population_size < 2) fail("population_size must be at least 2");
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) fail("mutation_prob must lie in [0, 1]");
    if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) fail("crossover_prob must lie in [0, 1]");
    if (!(elitism_fraction >= 0.0 && elitism_fraction < 1.0)) fail("elitism_fraction must lie in [0, 1)");
    if (max_iterations < 0) fail("max_iterations must be nonnegative");
    if (stall_iterations < 1 || stall_iterations > std::max(1, max_iterations)) {
        fail("stall_iterations must lie in [1, max_iterations]");
    }
    if (tournament_size < 1) fail("tournament_size must be at least 1");
    if (genome_len < 1) fail("genome length must be at least 1");
    if (encoding == Encoding::permutation && genome_len < 2) {
        fail("permutation genome needs at least 2 genes");
    }
    if (encoding == Encoding::real) {
        if (bounds.size() != 1 && static_cast<int>(bounds.size()) != genome_len) {
            fail("real encoding needs one bounds pair or one per gene");
        }
        for (const auto& b : bounds) {
            if (!(b.lo <= b.hi)) fail("bounds need lo <= hi");
        }
    }
}

Chromosome random_chromosome(Encoding encoding, int genome_len, std::span<const Bounds> bounds,
                             Rng& rng) {
    switch (encoding) {
        case Encoding::binary: {
            std::bernoulli_distribution coin(0.5);
            BitString bits(static_cast<std::size_t>(genome_len));
            for (auto& b : bits) b = coin(rng) ? 1 : 0;
            return Chromosome(std::move(bits));
        }
        case Encoding::real: {
            RealVector v(genome_len);
            for (int i = 0; i < genome_len; ++i) {
                const Bounds b = bounds_for(bounds, i);
                v[i] = std::uniform_real_distribution<double>(b.lo, b.hi)(rng);
            }
            return Chromosome(std::move(v));
        }
        case Encoding::permutation: {
            Permutation p(static_cast<std::size_t>(genome_len));
            std::iota(p.begin(), p.end(), 0);
            std::shuffle(p.begin(), p.end(), rng);
            return Chromosome(std::move(p));
        }
    }
    return {};
}

Chromosome mutate(const Chromosome& c, Rng& rng, std::span<const Bounds> bounds,
                  PermutationMutation kind) {
    Chromosome out = c;
    const int n = c.size();
    if (n == 0) return out;
    std::uniform_int_distribution<int> pick(0, n - 1);
    switch (c.encoding()) {
        case Encoding::binary: {
            auto& bit = out.bits()[static_cast<std::size_t>(pick(rng))];
            bit = bit ? 0 : 1;
            break;
        }
        case Encoding::real: {
            const int i = pick(rng);
            const Bounds b = bounds_for(bounds, i);
            out.reals()[i] = std::uniform_real_distribution<double>(b.lo, b.hi)(rng);
            break;
        }
        case Encoding::permutation: {
            if (n < 2) break;
            const int i = pick(rng);
            int j = std::uniform_int_distribution<int>(0, n - 2)(rng);
            if (j >= i) ++j;
            auto& o = out.order();
            if (kind == PermutationMutation::inversion) {
                std::reverse(o.begin() + std::min(i, j), o.begin() + std::max(i, j) + 1);
            } else {
                std::swap(o[static_cast<std::size_t>(i)], o[static_cast<std::size_t>(j)]);
            }
            break;
        }
    }
    return out;
}

namespace {

void check_compatible(const Chromosome& a, const Chromosome& b) {
    if (a.encoding() != b.encoding() || a.size() != b.size()) {
        throw DomainError("length_mismatch", "crossover parents differ in encoding or length");
    }
}

Permutation ox_child(const Permutation& keep, const Permutation& other, int first, int last) {
    const int n = static_cast<int>(keep.size());
    Permutation child(keep.size(), -1);
    std::vector<bool> used(keep.size(), false);
    for (int i = first; i <= last; ++i) {
        child[static_cast<std::size_t>(i)] = keep[static_cast<std::size_t>(i)];
        used[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])] = true;
    }
    int pos = (last + 1) % n;
    for (int k = 0; k < n; ++k) {
        const int gene = other[static_cast<std::size_t>((last + 1 + k) % n)];
        if (used[static_cast<std::size_t>(gene)]) continue;
        child[static_cast<std::size_t>(pos)] = gene;
        pos = (pos + 1) % n;
    }
    return child;
}

}  // namespace

std::pair<Chromosome, Chromosome> single_point_crossover(const Chromosome& a, const Chromosome& b,
                                                         int cut) {
    check_compatible(a, b);
    if (a.encoding() == Encoding::permutation) {
        throw DomainError("invalid_operator", "single-point crossover breaks permutations");
    }
    const int n = a.size();
    cut = std::clamp(cut, 0, n);
    Chromosome c1 = a;
    Chromosome c2 = b;
    if (a.encoding() == Encoding::binary) {
        for (int i = cut; i < n; ++i) {
            std::swap(c1.bits()[static_cast<std::size_t>(i)], c2.bits()[static_cast<std::size_t>(i)]);
        }
    } else {
        c1.reals().tail(n - cut) = b.reals().tail(n - cut);
        c2.reals().tail(n - cut) = a.reals().tail(n - cut);
    }
    return {std::move(c1), std::move(c2)};
}

std::pair<Chromosome, Chromosome> ordered_crossover(const Chromosome& a, const Chromosome& b,
                                                    int first, int last) {
    check_compatible(a, b);
    if (a.encoding() != Encoding::permutation) {
        throw DomainError("invalid_operator", "ordered crossover needs permutations");
    }
    const int n = a.size();
    if (first > last) std::swap(first, last);
    if (first < 0 || last >= n) throw DomainError("invalid_operator", "OX slice out of range");
    return {Chromosome(ox_child(a.order(), b.order(), first, last)),
            Chromosome(ox_child(b.order(), a.order(), first, last))};
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
    check_compatible(a, b);
    const int n = a.size();
    if (a.encoding() == Encoding::permutation) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        return ordered_crossover(a, b, pick(rng), pick(rng));
    }
    if (n < 2) return {a, b};
    return single_point_crossover(a, b, std::uniform_int_distribution<int>(1, n - 1)(rng));
}

namespace {

double checked(double f, const Chromosome& c) {
    if (std::isnan(f)) {
        throw DomainError("nan_fitness", "fitness returned NaN for " + c.to_string());
    }
    return f;
}

void evaluate(const FitnessFn& fitness, std::span<const Chromosome> population,
              std::vector<double>& scores, std::size_t from, bool parallel) {
    const std::size_t n = population.size();
    scores.resize(n);
    const unsigned workers = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
    if (workers <= 1 || n - from < 2 * workers) {
        for (std::size_t i = from; i < n; ++i) scores[i] = checked(fitness(population[i]), population[i]);
        return;
    }
    // Each slot is written by exactly one worker; results do not depend on
    // scheduling. The first NaN (lowest index) is reported.
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n - from + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t lo = from + w * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, w, lo, hi] {
                try {
                    for (std::size_t i = lo; i < hi; ++i) {
                        scores[i] = checked(fitness(population[i]), population[i]);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::size_t tournament(const std::vector<double>& scores, int k, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
    std::size_t best = pick(rng);
    for (int i = 1; i < k; ++i) {
        const std::size_t challenger = pick(rng);
        if (scores[challenger] > scores[best]) best = challenger;
    }
    return best;
}

}  // namespace

GaResult run(const GaConfig& config, const FitnessFn& fitness, int genome_len,
             const GenerationHook& on_generation) {
    config.validate(genome_len);
    Rng rng(config.seed);
    const std::span<const Bounds> bounds(config.bounds);
    const auto pop_size = static_cast<std::size_t>(config.population_size);
    const auto elite_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(config.elitism_fraction * static_cast<double>(pop_size))));

    std::vector<Chromosome> population;
    population.reserve(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) {
        population.push_back(random_chromosome(config.encoding, genome_len, bounds, rng));
    }
    std::vector<double> scores;
    evaluate(fitness, population, scores, 0, config.parallel_evaluation);
    if (on_generation) on_generation(0, population);

    auto best_index = [&] {
        return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    };

    GaResult result;
    std::size_t b = best_index();
    result.best = population[b];
    result.best_fitness = scores[b];
    result.history.push_back(result.best_fitness);

    int last_improvement = 0;
    std::vector<std::size_t> ranking(pop_size);
    std::bernoulli_distribution do_crossover(config.crossover_prob);
    std::bernoulli_distribution do_mutation(config.mutation_prob);

    for (int gen = 1; gen <= config.max_iterations; ++gen) {
        std::iota(ranking.begin(), ranking.end(), std::size_t{0});
        std::stable_sort(ranking.begin(), ranking.end(),
                         [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });

        std::vector<Chromosome> next;
        std::vector<double> next_scores;
        next.reserve(pop_size);
        for (std::size_t e = 0; e < elite_count; ++e) {
            next.push_back(population[ranking[e]]);
            next_scores.push_back(scores[ranking[e]]);
        }
        while (next.size() < pop_size) {
            const Chromosome& p1 = population[tournament(scores, config.tournament_size, rng)];
            const Chromosome& p2 = population[tournament(scores, config.tournament_size, rng)];
            auto [c1, c2] = do_crossover(rng) ? crossover(p1, p2, rng) : std::pair{p1, p2};
            if (do_mutation(rng)) c1 = mutate(c1, rng, bounds, config.permutation_mutation);
            if (do_mutation(rng)) c2 = mutate(c2, rng, bounds, config.permutation_mutation);
            next.push_back(std::move(c1));
            if (next.size() < pop_size) next.push_back(std::move(c2));
        }
        population = std::move(next);
        scores = std::move(next_scores);
        evaluate(fitness, population, scores, elite_count, config.parallel_evaluation);
        if (on_generation) on_generation(gen, population);

        b = best_index();
        if (scores[b] > result.best_fitness) {
            result.best = population[b];
            result.best_fitness = scores[b];
            last_improvement = gen;
        }
        result.history.push_back(result.best_fitness);
        result.generations_run = gen;
        if (gen - last_improvement >= config.stall_iterations) {
            result.terminated_by = Termination::stall;
            return result;
        }
    }
    result.terminated_by = Termination::max_iter;
    return result;
}

}  // namespace hrm::ga

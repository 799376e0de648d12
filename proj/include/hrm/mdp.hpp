#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hrm/error.hpp"

namespace hrm::mdp {

/// Action indices of the two-action forest model. Wait keeps resources
/// (reported as Idle); Cut gives them away (reported as Share).
enum ForestAction : int { wait = 0, cut = 1 };

enum class Recommendation { idle, share, ask };

std::string_view to_string(Recommendation r);

/// Finite MDP with transitions[a](from, to) and rewards(state, action).
template <typename Scalar = double>
struct MdpModel {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    std::vector<Matrix> transitions;
    Matrix rewards;

    Eigen::Index num_states() const { return rewards.rows(); }
    Eigen::Index num_actions() const { return rewards.cols(); }

    /// Throws DomainError("non_stochastic") if any row is not a probability
    /// distribution within `tolerance`, or if shapes disagree.
    void validate(Scalar tolerance = Scalar(1e-12)) const {
        const Eigen::Index S = num_states();
        if (S < 1 || static_cast<Eigen::Index>(transitions.size()) != num_actions()) {
            throw DomainError("invalid_model", "transition/reward shapes disagree");
        }
        for (std::size_t a = 0; a < transitions.size(); ++a) {
            const Matrix& P = transitions[a];
            if (P.rows() != S || P.cols() != S) {
                throw DomainError("invalid_model", "transition matrix must be S x S");
            }
            for (Eigen::Index s = 0; s < S; ++s) {
                const bool in_range = (P.row(s).array() >= Scalar(0)).all() &&
                                      (P.row(s).array() <= Scalar(1)).all();
                const Scalar sum = P.row(s).sum();
                if (!in_range || std::abs(sum - Scalar(1)) > tolerance) {
                    throw DomainError("non_stochastic",
                                      "transition row " + std::to_string(s) + " of action " +
                                          std::to_string(a) + " is not a distribution");
                }
            }
        }
    }
};

/// Forest-management MDP with S states (index 0 is the youngest stand).
/// Wait moves one state up with probability 1 - p (staying in the last
/// state) and resets to state 0 with probability p; Cut always resets.
/// Rewards: Wait pays r1 in the last state, Cut pays 1 in interior states
/// and r2 in the last state, everything else is 0.
template <typename Scalar = double>
MdpModel<Scalar> build_forest_mdp(int S = 3, Scalar r1 = 4, Scalar r2 = 2, Scalar p = Scalar(0.1)) {
    if (S < 2) throw DomainError("invalid_model", "forest MDP needs at least 2 states");
    if (!(p >= Scalar(0) && p <= Scalar(1))) {
        throw DomainError("invalid_probability", "reset probability must lie in [0, 1]");
    }
    using Matrix = typename MdpModel<Scalar>::Matrix;
    MdpModel<Scalar> m;
    Matrix waitP = Matrix::Zero(S, S);
    for (int s = 0; s < S; ++s) {
        waitP(s, 0) += p;
        waitP(s, std::min(s + 1, S - 1)) += Scalar(1) - p;
    }
    Matrix cutP = Matrix::Zero(S, S);
    cutP.col(0).setOnes();
    m.transitions = {waitP, cutP};

    m.rewards = Matrix::Zero(S, 2);
    m.rewards(S - 1, wait) = r1;
    m.rewards.col(cut).segment(1, S - 2).setOnes();
    m.rewards(S - 1, cut) = r2;
    return m;
}

template <typename Scalar = double>
struct PolicyResult {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Vector values;
    std::vector<int> policy;  // optimal action index per state
    std::vector<Recommendation> actions;
    Scalar discount = Scalar(0.5);
    int iterations = 0;
    Scalar bellman_residual = Scalar(0);
};

/// Q(s, a) = R(s, a) + discount * P_a(s, .) V
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
action_values(const MdpModel<Scalar>& m, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& V,
              Scalar discount) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Q = m.rewards;
    for (Eigen::Index a = 0; a < m.num_actions(); ++a) {
        Q.col(a).noalias() += discount * (m.transitions[static_cast<std::size_t>(a)] * V);
    }
    return Q;
}

/// Bellman optimality operator (TV)(s) = max_a Q(s, a).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bellman(const MdpModel<Scalar>& m,
                                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& V,
                                                 Scalar discount) {
    return action_values(m, V, discount).rowwise().maxCoeff();
}

/// Greedy action per state. Actions within `tie` of the best are treated as
/// equal and the lowest index (Wait for the forest model) wins.
template <typename Scalar>
std::vector<int> greedy_policy(const MdpModel<Scalar>& m,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& V, Scalar discount,
                               Scalar tie = Scalar(1e-10)) {
    const auto Q = action_values(m, V, discount);
    std::vector<int> policy(static_cast<std::size_t>(m.num_states()), 0);
    for (Eigen::Index s = 0; s < Q.rows(); ++s) {
        const Scalar best = Q.row(s).maxCoeff();
        const Scalar eps = tie * std::max(Scalar(1), std::abs(best));
        for (Eigen::Index a = 0; a < Q.cols(); ++a) {
            if (Q(s, a) >= best - eps) {
                policy[static_cast<std::size_t>(s)] = static_cast<int>(a);
                break;
            }
        }
    }
    return policy;
}

/// Exact value of a fixed policy: solves (I - discount * P_pi) V = R_pi.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> evaluate_policy(const MdpModel<Scalar>& m,
                                                         const std::vector<int>& policy,
                                                         Scalar discount) {
    using Matrix = typename MdpModel<Scalar>::Matrix;
    using Vector = typename MdpModel<Scalar>::Vector;
    const Eigen::Index S = m.num_states();
    Matrix P(S, S);
    Vector R(S);
    for (Eigen::Index s = 0; s < S; ++s) {
        const auto a = policy[static_cast<std::size_t>(s)];
        P.row(s) = m.transitions[static_cast<std::size_t>(a)].row(s);
        R[s] = m.rewards(s, a);
    }
    const Matrix A = Matrix::Identity(S, S) - discount * P;
    return A.partialPivLu().solve(R);
}

template <typename Scalar>
std::vector<Recommendation> recommendations(const std::vector<int>& policy,
                                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& V) {
    std::vector<Recommendation> out;
    out.reserve(policy.size());
    for (std::size_t s = 0; s < policy.size(); ++s) {
        if (V[static_cast<Eigen::Index>(s)] < Scalar(0)) {
            out.push_back(Recommendation::ask);
        } else {
            out.push_back(policy[s] == wait ? Recommendation::idle : Recommendation::share);
        }
    }
    return out;
}

/// Infinite-horizon discounted optimum by policy iteration with an exact
/// linear solve per evaluation step.
template <typename Scalar>
PolicyResult<Scalar> solve(const MdpModel<Scalar>& m, Scalar discount, int max_iterations = 1000) {
    if (!(discount > Scalar(0) && discount < Scalar(1))) {
        throw DomainError("invalid_discount", "discount must lie in (0, 1)");
    }
    m.validate();

    PolicyResult<Scalar> result;
    result.discount = discount;
    std::vector<int> policy(static_cast<std::size_t>(m.num_states()), 0);
    typename MdpModel<Scalar>::Vector V;
    for (int it = 1; it <= max_iterations; ++it) {
        V = evaluate_policy(m, policy, discount);
        result.iterations = it;
        // Switch only on strict improvement so the iteration cannot cycle
        // between tied actions.
        const auto Q = action_values(m, V, discount);
        bool changed = false;
        for (Eigen::Index s = 0; s < Q.rows(); ++s) {
            auto& a = policy[static_cast<std::size_t>(s)];
            Eigen::Index best = a;
            const Scalar eps = Scalar(1e-12) * std::max(Scalar(1), std::abs(Q(s, a)));
            for (Eigen::Index b = 0; b < Q.cols(); ++b) {
                if (Q(s, b) > Q(s, best) + eps) best = b;
            }
            if (best != a) {
                a = static_cast<int>(best);
                changed = true;
            }
        }
        if (!changed) break;
    }

    result.values = V;
    result.policy = greedy_policy(m, V, discount);
    result.actions = recommendations(result.policy, V);
    result.bellman_residual = (bellman(m, V, discount) - V).cwiseAbs().maxCoeff();
    return result;
}

/// Pandemic-severity scenario on the PSAF axes.
struct ScenarioInput {
    double hospitalization_ratio = 0.1;  // (0, 1]
    double clinical_severity = 1.0;      // [1, 7]
    double transmissibility = 1.0;       // [1, 5]

    void validate() const;
};

/// How a scenario becomes a forest MDP. Any field left empty falls back to
/// the scenario: p = hospitalization ratio, r1 = clinical severity,
/// r2 = transmissibility.
struct ScenarioMapping {
    int states = 3;
    double discount = 0.5;
    std::optional<double> reset_probability;
    std::optional<double> wait_reward;
    std::optional<double> cut_reward;
};

std::pair<MdpModel<double>, double> scenario_to_model(const ScenarioInput& s,
                                                      const ScenarioMapping& mapping = {});

PolicyResult<double> recommend(const ScenarioInput& s, const ScenarioMapping& mapping = {});

}  // namespace hrm::mdp

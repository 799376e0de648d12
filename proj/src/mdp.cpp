#include "hrm/mdp.hpp"

namespace hrm::mdp {

std::string_view to_string(Recommendation r) {
    switch (r) {
        case Recommendation::idle: return "Idle";
        case Recommendation::share: return "Share";
        case Recommendation::ask: return "Ask";
    }
    return "?";
}

void ScenarioInput::validate() const {
    if (!(hospitalization_ratio > 0.0 && hospitalization_ratio <= 1.0)) {
        throw DomainError("invalid_scenario", "hospitalization ratio must lie in (0, 1]");
    }
    if (!(clinical_severity >= 1.0 && clinical_severity <= 7.0)) {
        throw DomainError("invalid_scenario", "clinical severity must lie in [1, 7]");
    }
    if (!(transmissibility >= 1.0 && transmissibility <= 5.0)) {
        throw DomainError("invalid_scenario", "transmissibility must lie in [1, 5]");
    }
}

std::pair<MdpModel<double>, double> scenario_to_model(const ScenarioInput& s,
                                                      const ScenarioMapping& mapping) {
    s.validate();
    auto model = build_forest_mdp<double>(
        mapping.states, mapping.wait_reward.value_or(s.clinical_severity),
        mapping.cut_reward.value_or(s.transmissibility),
        mapping.reset_probability.value_or(s.hospitalization_ratio));
    return {std::move(model), mapping.discount};
}

PolicyResult<double> recommend(const ScenarioInput& s, const ScenarioMapping& mapping) {
    const auto [model, discount] = scenario_to_model(s, mapping);
    return solve(model, discount);
}

}  // namespace hrm::mdp

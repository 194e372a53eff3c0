#include "scenarios.hpp"

namespace ivmed {

namespace {

LearnerSpec lasso() {
    LearnerSpec s;
    s.kind = LearnerKind::LOGISTIC_L1_INTERACTIONS;
    return s;
}

LearnerSpec intercept() {
    LearnerSpec s;
    s.kind = LearnerKind::INTERCEPT_ONLY;
    return s;
}

ScenarioSpec base_correct(Setting setting) {
    ScenarioSpec s;
    s.setting = setting;
    s.name = "all_correct";
    s.learners["g"] = intercept();  // instrument is marginally randomized
    s.learners["q"] = lasso();
    if (setting == Setting::Single) {
        s.learners["r"] = lasso();
        s.learners["e"] = lasso();
        // the single-setting outcome law carries an essential exposure-by-
        // mediator interaction, so a main-effects fit is not a correct
        // specification; the interaction lasso is
        s.learners["mu"] = lasso();
    } else {
        s.learners["p"] = lasso();
        s.learners["c"] = lasso();
        s.learners["mu"] = lasso();
    }
    return s;
}

}  // namespace

std::vector<std::string> scenario_names(Setting setting) {
    if (setting == Setting::Single) return {"all_correct", "mu_wrong", "re_wrong"};
    return {"all_correct", "mu_wrong", "p_wrong", "c_wrong", "q_wrong"};
}

ScenarioSpec scenario_by_name(Setting setting, const std::string& name) {
    ScenarioSpec s = base_correct(setting);
    s.name = name;
    if (name == "all_correct") {
    } else if (name == "mu_wrong") {
        s.learners["mu"] = intercept();
    } else if (setting == Setting::Single && name == "re_wrong") {
        s.learners["r"] = intercept();
        s.learners["e"] = intercept();
    } else if (setting == Setting::Double && name == "p_wrong") {
        s.learners["p"] = intercept();
    } else if (setting == Setting::Double && name == "c_wrong") {
        s.learners["c"] = intercept();
    } else if (setting == Setting::Double && name == "q_wrong") {
        s.learners["q"] = intercept();
    } else {
        throw validation_error("UnknownScenario", "'" + name + "' for setting " +
                                                      setting_name(setting));
    }
    s.check();
    return s;
}

ScenarioSpec scenario_with_overrides(Setting setting,
                                     const std::map<std::string, std::string>& overrides) {
    ScenarioSpec s = base_correct(setting);
    s.name = "custom";
    for (const auto& [nuisance, kind] : overrides) {
        LearnerSpec spec;
        spec.kind = parse_learner_kind(kind);
        s.learners[nuisance] = spec;
    }
    s.check();
    return s;
}

}  // namespace ivmed

#pragma once

#include <map>
#include <string>
#include <vector>

#include "types.hpp"

namespace ivmed {

// Fixed learner registry for the simulation study scenarios.
// single: all_correct, mu_wrong, re_wrong
// double: all_correct, mu_wrong, p_wrong, c_wrong, q_wrong
ScenarioSpec scenario_by_name(Setting setting, const std::string& name);
std::vector<std::string> scenario_names(Setting setting);

// all_correct base with per-nuisance learner kind overrides, e.g. from
// "learner.mu = intercept_only" config keys.
ScenarioSpec scenario_with_overrides(Setting setting,
                                     const std::map<std::string, std::string>& overrides);

}  // namespace ivmed

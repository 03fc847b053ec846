#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace mfmdp {

// Built-in model names: machine_replacement, sir_malware, resource_competition,
// cube_root. Overrides replace default parameter values by key; unknown keys
// raise InvalidParameter. With revalidate set, the assembled model must pass
// the hard assumption checks or InvalidParameter is raised; construction
// without revalidation is available so a deliberately broken parameterization
// can still be inspected by validate_assumptions.
ModelSpec registry_get(const std::string& name,
                       const std::map<std::string, double>& overrides = {},
                       bool revalidate = true);

std::vector<std::string> registry_names();

// Measure-dependent decision rule: fractions -> per-state action weights.
using FeedbackRule = std::function<ControlVector(std::span<const double>)>;

// Named feedback rules. "priority" is defined for resource_competition: the
// exit gates of the high-priority states get full capacity while those states
// hold at least priority_threshold of the population.
FeedbackRule registry_feedback(const ModelSpec& model, const std::string& rule_name);

}  // namespace mfmdp

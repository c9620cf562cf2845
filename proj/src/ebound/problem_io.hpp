#pragma once

#include <string>

#include "ebound/system.hpp"

namespace ebound {

// JSON problem document: variables, dynamics, observable, optional
// integrand, t0, horizon, initial_set, omega_extra, optional symmetry.
// Parsing attaches an initial-set parameterization when the set has a
// recognizable shape (point, interval, sphere or quadratic level set).
ProblemSpec parseProblemJson(const std::string& text);
ProblemSpec loadProblemFile(const std::string& path);

std::string serializeProblemJson(const ProblemSpec& spec, int indent = 2);
void saveProblemFile(const ProblemSpec& spec, const std::string& path);

}  // namespace ebound

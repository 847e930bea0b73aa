#pragma once

// Independent oracles used to validate the library's estimators. These stay
// deliberately naive: numerical integration instead of special functions,
// full enumeration instead of counting tables, exhaustive scans instead of
// the production matching kernel.

#include <cstddef>
#include <span>
#include <vector>

#include "capstat/telemetry.hpp"

namespace oracle {

// P(T <= t) for Student's t via adaptive Simpson integration of the density
// (tangent substitution; no special functions beyond lgamma).
double t_cdf(double t, double nu);

// Exact one-sided Mann-Whitney tail by enumerating every assignment of group
// labels to the pooled sample.
double mwu_exact(std::span<const double> capped, std::span<const double> uncapped);

// Exhaustive nearest-neighbor matching estimate (Eq.-style signed average of
// matched differences), with pooled standardization and lowest-order tie
// breaks. Mirrors the production contract through an independent code path.
double matching_estimate(const std::vector<capstat::JobRecord>& records,
                         const capstat::Selector& outcome,
                         const std::vector<capstat::Selector>& covariates, int k);

}  // namespace oracle

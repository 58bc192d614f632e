#pragma once

#include <limits>
#include <vector>

#include "permclass/spec.hpp"

namespace permclass {

struct EvalOptions {
    double tol = 1e-13;
    long max_iter = 1'000'000;
    bool derivatives = true;
    double cap = 1e12;
};

struct Evaluation {
    double z = 0;
    std::vector<double> values;       // NaN outside the evaluated subset
    std::vector<double> derivatives;  // empty unless requested
    long iterations = 0;
    double final_step = 0;
};

// Fixed-point evaluation of the whole system at z >= 0, starting from zero.
// Derivatives come from one linear solve against the Jacobian resolvent.
// Throws Diverged past the value cap, IterationLimit when the step tolerance
// is not reached, DerivativeUnavailable when the resolvent is singular.
Evaluation evaluate(const TreeSpec& spec, double z, const EvalOptions& opts = {});

// Same, restricted to a dependency-closed subset of families.
Evaluation evaluate_subset(const TreeSpec& spec, const std::vector<int>& subset, double z,
                           const EvalOptions& opts = {});

enum class SccKind {
    Polynomial,  // finite family, entire series
    Inherited,   // singular only through its dependencies
    Pole,        // own singularity, system linear in its own variables
    Fold         // own singularity, square-root type
};

struct SccRadius {
    std::vector<int> members;
    double rho = std::numeric_limits<double>::infinity();
    SccKind kind = SccKind::Polynomial;
    double bracket_lo = 0;
    double bracket_hi = 0;
    bool polished = false;
    // Fold only: finite critical values, full-size vector, NaN off-members.
    std::vector<double> values_at_rho;
};

struct RadiusReport {
    double rho = std::numeric_limits<double>::infinity();
    std::vector<double> family_radius;
    std::vector<SccRadius> sccs;  // dependencies first
    double tol = 0;
};

// Dominant singularity of every family: per-SCC bisection with a spectral
// above/below test, then a root polish (secant on the Perron root for poles,
// a bordered Newton for folds). family_radius respects the dependency
// monotonicity rho_i <= rho_j for every edge j -> i by construction.
RadiusReport find_radius(const TreeSpec& spec, double tol = 1e-12);

// Least-squares fit of T_i(z) = a + b*sqrt(rho-z) + c*(rho-z) + ... on a
// geometric grid below rho, for the members of a fold SCC. Returns the pair
// (value at rho, sqrt coefficient) per family, NaN off-members. This is the
// slow cross-check for the fold Newton values.
struct SqrtFit {
    std::vector<double> value_at_rho;
    std::vector<double> sqrt_coefficient;  // T ~ value - coeff*sqrt(rho-z)
};
SqrtFit sqrt_fit(const TreeSpec& spec, const std::vector<int>& members, double rho);

}  // namespace permclass

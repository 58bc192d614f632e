#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "permclass/numeric.hpp"
#include "permclass/series.hpp"
#include "permclass/spec.hpp"
#include "permclass/tree.hpp"

namespace permclass {

struct CriticalStructure {
    double rho = 0;
    std::vector<int> critical;                    // ascending family ids
    bool ambiguous = false;                       // radii in the gray band just above threshold
    bool strongly_connected = false;              // critical graph is a single SCC
    bool branching = false;                       // a production carries >= 2 critical children
    std::vector<std::vector<int>> critical_sccs;  // topological order, dependencies first
};

CriticalStructure classify(const TreeSpec& spec, const RadiusReport& radius);

struct SpectralData {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd u, v;  // positive left/right eigenvectors, u^T v = 1, |v| = 1
    double eigenvalue = 0;
};

// Perron data by two-sided shifted power iteration. Demands an irreducible
// nonnegative matrix; throws IrreducibilityViolation otherwise, and
// SpectralFailure when the iteration fails to settle.
SpectralData perron(const Eigen::MatrixXd& m);

// M*[a][b]: partial derivative of family crit[a]'s production sum by the
// series of crit[b], everything else frozen at `values` (full-size vector).
Eigen::MatrixXd build_M_star(const TreeSpec& spec, const std::vector<int>& crit,
                             const std::vector<double>& values);

// The four companion matrices splitting dM*/dz by the companion's side and
// the sign of the root pattern at the (companion, child) position pair.
// Meaningful in the linear case, where every companion is subcritical.
struct DMatrices {
    Eigen::MatrixXd at[2][2];  // [Side][Sign]
    Eigen::MatrixXd sum() const { return at[0][0] + at[0][1] + at[1][0] + at[1][1]; }
};
DMatrices build_D_matrices(const TreeSpec& spec, const std::vector<int>& crit,
                           const std::vector<double>& values, const std::vector<double>& derivs);

// Pair tensors: for every unordered pair of critical child positions in a
// production of crit[i], the product of the remaining factors, keyed by the
// root pattern sign at that pair. E[i][j][j'] with (j, j') in position order.
struct ETensors {
    int dim = 0;
    std::vector<double> plus, minus;  // dim^3 row-major
    double ep(int i, int j, int jp) const { return plus[(i * dim + j) * dim + jp]; }
    double em(int i, int j, int jp) const { return minus[(i * dim + j) * dim + jp]; }
    // Symmetrized second derivative of the production sum.
    double h(int i, int j, int jp) const { return ep(i, j, jp) + em(i, j, jp) + ep(i, jp, j) + em(i, jp, j); }
};
ETensors build_E_tensors(const TreeSpec& spec, const std::vector<int>& crit,
                         const std::vector<double>& values);

struct LinearParameters {
    XQuadruple p;
    SpectralData spectral;
    std::vector<double> residue;  // full-size; simple-pole residue for members
    double denominator = 0;       // u^T (dM*/dz) v
};
// Corner weights and residues of a linear (simple pole) critical component.
// `values`/`derivs` are subcritical data at rho. Throws DegenerateSpectrum
// when the normalizing denominator vanishes.
LinearParameters linear_parameters(const TreeSpec& spec, const std::vector<int>& crit,
                                   const std::vector<double>& values, const std::vector<double>& derivs,
                                   double rho);

struct BranchingParameters {
    double p_plus = 0;
    SpectralData spectral;
    double Z = 0, zeta = 0, beta = 0;
    std::vector<double> sqrt_coef;  // full-size; T_i ~ T_i(rho) - coef * sqrt(rho - z)
};
// Sign bias and square-root constants of a branching critical component.
// `values` holds both the critical values at rho and the subcritical ones;
// `sub_derivs` the subcritical derivatives at rho.
BranchingParameters branching_parameters(const TreeSpec& spec, const std::vector<int>& crit,
                                         const std::vector<double>& values,
                                         const std::vector<double>& sub_derivs, double rho);

struct LimitDescriptor {
    enum class Kind { X, Brownian, Mixture, Split, Unsupported };
    Kind kind = Kind::X;
    XQuadruple x;                                                // X
    double p_plus = 0;                                           // Brownian
    std::vector<std::pair<double, LimitDescriptor>> components;  // Mixture
    Permutation split_root;                                      // Split: 12 or 21
    std::vector<LimitDescriptor> parts;                          // Split
    std::string reason;                                          // Unsupported

    static LimitDescriptor make_x(const XQuadruple& q);
    static LimitDescriptor make_brownian(double p);
    static LimitDescriptor make_mixture(std::vector<std::pair<double, LimitDescriptor>> comps);
    static LimitDescriptor make_split(Permutation root, std::vector<LimitDescriptor> parts);
    static LimitDescriptor make_unsupported(std::string reason);
};

bool approx_equal(const LimitDescriptor& a, const LimitDescriptor& b, double tol);
std::string descriptor_to_json(const LimitDescriptor& d);
LimitDescriptor descriptor_from_json(const std::string& text);

struct AsymptoticConstants {
    enum class Kind { None, Polar, Sqrt, DoublePole };
    Kind kind = Kind::None;
    double rho = 0;
    std::vector<double> coef;  // full-size; NaN where unknown
};

// coefficient ratio actual/predicted per family and order, for families whose
// constants are known. Predictions: Polar c*rho^-(n+1); Sqrt
// c*sqrt(rho)*rho^-n*n^-3/2/(2*sqrt(pi)); DoublePole c*(n+1)*rho^-(n+2).
std::map<int, std::map<int, double>> asymptotic_check(const TreeSpec& spec,
                                                      const AsymptoticConstants& constants,
                                                      const std::vector<TruncatedSeries>& series,
                                                      const std::vector<int>& orders);

struct AnalysisReport {
    // Everything below refers to the restriction of the input to the
    // dependency closure of the target family.
    std::vector<std::string> family_names;
    int target = 0;
    RadiusReport radius;
    CriticalStructure critical;
    LimitDescriptor descriptor;
    AsymptoticConstants constants;
    std::optional<SpectralData> spectral;  // of the component that sets the target's limit
    std::optional<LinearParameters> linear;
    std::optional<BranchingParameters> branching;
    // Values at the dominant point; NaN for families that diverge there.
    std::vector<double> values_at_rho;
    AperiodicityReport periodicity;  // of the target series
    std::vector<std::string> notes;
};

AnalysisReport analyze(const TreeSpec& spec, int target_family = 0);
LimitDescriptor resolve_limit(const TreeSpec& spec, int target_family = 0);

}  // namespace permclass

// Acceptance gate: nine criteria, one pass/fail line each. Exit code is
// nonzero when any criterion fails; details go to stdout under the line.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iterator>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "permclass/analyzer.hpp"
#include "permclass/errors.hpp"
#include "permclass/numeric.hpp"
#include "permclass/sampler.hpp"
#include "permclass/series.hpp"
#include "permclass/spec.hpp"
#include "permclass/stats.hpp"
#include "permclass/tree.hpp"

#include "helpers.hpp"

using namespace permclass;

namespace {

struct Gate {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes.push_back(what);
        }
    }

    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream ss;
            ss << what << ": got " << std::setprecision(16) << got << ", want " << want
               << " (tol " << tol << ")";
            ok = false;
            notes.push_back(ss.str());
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double spectral_residual(const SpectralData& s) {
    const double right = (s.matrix * s.v - s.eigenvalue * s.v).cwiseAbs().maxCoeff();
    const double left =
        (s.matrix.transpose() * s.u - s.eigenvalue * s.u).cwiseAbs().maxCoeff();
    return std::max(right, left);
}

// Second partial of family i's production sum by the pair (j, jp), by direct
// enumeration over ordered position pairs; independent of the analyzer.
double second_partial(const TreeSpec& spec, int i, int j, int jp,
                      const std::vector<double>& vals) {
    double acc = 0;
    for (const auto& p : spec.family(i).productions) {
        const auto& ch = p.children;
        for (size_t r = 0; r < ch.size(); ++r) {
            if (ch[r] != j) continue;
            for (size_t q = 0; q < ch.size(); ++q) {
                if (q == r || ch[q] != jp) continue;
                double term = 1;
                for (size_t t = 0; t < ch.size(); ++t)
                    if (t != r && t != q) term *= vals[ch[t]];
                acc += term;
            }
        }
    }
    return acc;
}

// 1: series coefficients against direct enumeration.
void exact_counting(Gate& g) {
    TreeSpec av = testutil::load_fixture("av132.json");
    const auto series = expand(av, 8);
    const auto brute = testutil::count_avoiders(parse_permutation("132"), 8);
    for (int n = 1; n <= 8; ++n)
        g.require(series[0].at(n) == brute[n],
                  "pattern-avoider count mismatch at n = " + std::to_string(n));

    TreeSpec sep = testutil::load_fixture("separable.json");
    const auto sseries = expand(sep, 7);
    const long long schroeder[] = {1, 2, 6, 22, 90, 394, 1806};
    for (int n = 1; n <= 7; ++n)
        g.require(sseries[0].at(n) == schroeder[n - 1],
                  "separable count mismatch at n = " + std::to_string(n));
}

// 2: dominant singularities with closed-form or algebraic references.
void singularity_location(Gate& g) {
    const auto t0 = std::chrono::steady_clock::now();
    const double r_av = find_radius(testutil::load_fixture("av132.json")).rho;
    const double r_x = find_radius(testutil::load_fixture("xclass.json")).rho;
    const double r_xt = find_radius(testutil::load_fixture("xtilde.json")).rho;
    const double elapsed = seconds_since(t0);

    g.near(r_av, 0.25, 1e-9, "singularity of the 132-avoiders");
    g.near(r_x, 1 - std::sqrt(2.0) / 2, 1e-9, "singularity of the x class");
    g.near(r_xt, 0.26272, 1e-5, "singularity of the tilted x class");
    g.near(r_xt * r_xt * r_xt - r_xt * r_xt + 4 * r_xt - 1, 0.0, 1e-9,
           "tilted singularity should satisfy its cubic");
    g.require(elapsed < 5.0, "radius location took " + std::to_string(elapsed) + "s");
}

// 3: corner weights of the polar limits.
void corner_weights(Gate& g) {
    LimitDescriptor x = resolve_limit(testutil::load_fixture("xclass.json"), 0);
    g.require(x.kind == LimitDescriptor::Kind::X, "x class limit kind");
    g.near(x.x.plus_left, 0.25, 1e-8, "x class plus/left");
    g.near(x.x.plus_right, 0.25, 1e-8, "x class plus/right");
    g.near(x.x.minus_left, 0.25, 1e-8, "x class minus/left");
    g.near(x.x.minus_right, 0.25, 1e-8, "x class minus/right");

    LimitDescriptor t = resolve_limit(testutil::load_fixture("xtilde.json"), 0);
    g.require(t.kind == LimitDescriptor::Kind::X, "tilted limit kind");
    g.near(t.x.plus_left, 0.200258808255625, 1e-8, "tilted plus/left");
    g.near(t.x.plus_right, 0.200258808255625, 1e-8, "tilted plus/right");
    g.near(t.x.minus_left, 0.431332891374616, 1e-8, "tilted minus/left");
    g.near(t.x.minus_right, 0.168149492114135, 1e-8, "tilted minus/right");

    LimitDescriptor v = resolve_limit(testutil::load_fixture("vclass.json"), 0);
    g.require(v.kind == LimitDescriptor::Kind::X, "v class limit kind");
    g.near(v.x.minus_left, 0.818632668576995, 1e-8, "v class minus/left");
    g.require(std::abs(v.x.plus_left) < 1e-10, "v class plus/left should vanish");
    g.require(std::abs(v.x.minus_right) < 1e-10, "v class minus/right should vanish");
    g.near(v.x.sum(), 1.0, 1e-10, "v class weights should sum to one");
}

// 4: sign biases of the branching limits.
void sign_biases(Gate& g) {
    LimitDescriptor av = resolve_limit(testutil::load_fixture("av132.json"), 0);
    g.require(av.kind == LimitDescriptor::Kind::Brownian, "132-avoider limit kind");
    g.require(std::abs(av.p_plus) < 1e-10, "132-avoider bias should vanish");

    LimitDescriptor br = resolve_limit(testutil::load_fixture("branching.json"), 0);
    g.require(br.kind == LimitDescriptor::Kind::Brownian, "branching fixture limit kind");
    g.near(br.p_plus, 0.474869237650240, 1e-8, "branching fixture bias");

    LimitDescriptor sep = resolve_limit(testutil::load_fixture("separable.json"), 0);
    g.require(sep.kind == LimitDescriptor::Kind::Brownian, "separable limit kind");
    g.near(sep.p_plus, 0.5, 1e-8, "separable bias");
}

// 5: internal consistency of the spectral data on every analytic fixture:
// unit Perron root, eigenvector residuals, normalized weights, and the
// assembled derivative structures against finite differences.
void internal_consistency(Gate& g) {
    const char* fixtures[] = {"separable.json", "av132.json", "xclass.json", "xtilde.json",
                              "vclass.json",    "layered.json", "branching.json"};
    for (const char* name : fixtures) {
        const std::string tag = std::string(name) + ": ";
        TreeSpec spec = testutil::load_fixture(name);
        AnalysisReport rep = analyze(spec, 0);
        g.require(static_cast<int>(rep.family_names.size()) == spec.size(),
                  tag + "target closure should cover the whole system");
        const double rho = rep.radius.rho;
        const std::vector<int>& comp = rep.critical.critical_sccs.at(0);

        std::vector<bool> is_crit(spec.size(), false);
        for (int i : rep.critical.critical) is_crit[i] = true;
        std::vector<int> subcrit;
        for (int i = 0; i < spec.size(); ++i)
            if (!is_crit[i]) subcrit.push_back(i);

        if (rep.critical.branching) {
            std::vector<double> sub_derivs(spec.size(), 0.0);
            if (!subcrit.empty()) sub_derivs = evaluate_subset(spec, subcrit, rho).derivatives;
            BranchingParameters bp =
                branching_parameters(spec, comp, rep.values_at_rho, sub_derivs, rho);
            g.near(bp.spectral.eigenvalue, 1.0, 1e-6, tag + "Perron root at the singularity");
            g.require(spectral_residual(bp.spectral) < 1e-8, tag + "eigenvector residual");
            g.require(bp.p_plus >= -1e-12 && bp.p_plus <= 1 + 1e-12,
                      tag + "bias should be a probability");
            g.require(bp.Z > 0, tag + "pair mass should be positive");

            // Pair tensors against central differences of the derivative matrix.
            const ETensors e = build_E_tensors(spec, comp, rep.values_at_rho);
            const double step = 1e-5;
            const int m = static_cast<int>(comp.size());
            for (int jp = 0; jp < m; ++jp) {
                std::vector<double> hi = rep.values_at_rho, lo = rep.values_at_rho;
                hi[comp[jp]] += step;
                lo[comp[jp]] -= step;
                const Eigen::MatrixXd mhi = build_M_star(spec, comp, hi);
                const Eigen::MatrixXd mlo = build_M_star(spec, comp, lo);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) {
                        const double fd = (mhi(i, j) - mlo(i, j)) / (2 * step);
                        g.near(e.h(i, j, jp), fd, 1e-8 * (1 + std::abs(fd)),
                               tag + "pair tensor entry (" + std::to_string(i) + "," +
                                   std::to_string(j) + "," + std::to_string(jp) + ")");
                    }
            }

            // And against exact second partials enumerated from the productions.
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int jp = 0; jp < m; ++jp) {
                        const double d2 =
                            second_partial(spec, comp[i], comp[j], comp[jp], rep.values_at_rho);
                        g.near(e.h(i, j, jp), d2, 1e-10 * (1 + std::abs(d2)),
                               tag + "pair tensor vs exact second partial (" +
                                   std::to_string(i) + "," + std::to_string(j) + "," +
                                   std::to_string(jp) + ")");
                    }
        } else {
            Evaluation ev = evaluate_subset(spec, subcrit, rho);
            LinearParameters lp = linear_parameters(spec, comp, ev.values, ev.derivatives, rho);
            g.near(lp.spectral.eigenvalue, 1.0, 1e-6, tag + "Perron root at the singularity");
            g.require(spectral_residual(lp.spectral) < 1e-8, tag + "eigenvector residual");
            g.near(lp.p.sum(), 1.0, 1e-10, tag + "corner weights should sum to one");
            for (double w : {lp.p.plus_left, lp.p.plus_right, lp.p.minus_left, lp.p.minus_right})
                g.require(w >= -1e-12, tag + "corner weights should be nonnegative");
            g.require(std::abs(lp.denominator) > 1e-12, tag + "denominator should not vanish");

            // Companion matrix sum against a central difference in z at rho - h.
            const double h = 1e-5;
            Evaluation mid = evaluate_subset(spec, subcrit, rho - h);
            Evaluation low = evaluate_subset(spec, subcrit, rho - 2 * h);
            const Eigen::MatrixXd dsum =
                build_D_matrices(spec, comp, mid.values, mid.derivatives).sum();
            const Eigen::MatrixXd fd = (build_M_star(spec, comp, ev.values) -
                                        build_M_star(spec, comp, low.values)) /
                                       (2 * h);
            const double err = (dsum - fd).cwiseAbs().maxCoeff();
            const double scale = 1 + dsum.cwiseAbs().maxCoeff();
            g.require(err <= 1e-5 * scale,
                      tag + "companion sum vs numeric derivative, err " + std::to_string(err));

            // Pair tensors vanish on a linear component; the exact second
            // partials from the productions must agree entry by entry.
            const ETensors e = build_E_tensors(spec, comp, ev.values);
            const int m = static_cast<int>(comp.size());
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    for (int jp = 0; jp < m; ++jp) {
                        const double d2 =
                            second_partial(spec, comp[i], comp[j], comp[jp], ev.values);
                        g.near(e.h(i, j, jp), d2, 1e-10 * (1 + std::abs(d2)),
                               tag + "pair tensor vs exact second partial (" +
                                   std::to_string(i) + "," + std::to_string(j) + "," +
                                   std::to_string(jp) + ")");
                    }
        }
    }
}

// 6: composite limits: the union's mixture and the compound's split,
// including the exact pattern law of the split by independent convolution.
void composite_limits(Gate& g) {
    LimitDescriptor u = resolve_limit(testutil::load_fixture("union.json"), 0);
    LimitDescriptor expect = LimitDescriptor::make_mixture(
        {{0.5, LimitDescriptor::make_brownian(1.0)}, {0.5, LimitDescriptor::make_brownian(0.0)}});
    LimitDescriptor flipped = LimitDescriptor::make_mixture(
        {{0.5, LimitDescriptor::make_brownian(0.0)}, {0.5, LimitDescriptor::make_brownian(1.0)}});
    g.require(approx_equal(u, expect, 1e-6), "union mixture weights and biases");
    g.require(approx_equal(u, flipped, 1e-6), "union mixture should be order-insensitive");

    AnalysisReport comp = analyze(testutil::load_fixture("compound.json"), 0);
    const LimitDescriptor& d = comp.descriptor;
    g.require(d.kind == LimitDescriptor::Kind::Split, "compound limit kind");
    if (d.kind != LimitDescriptor::Kind::Split) return;
    g.require(d.split_root == parse_permutation("12"), "compound split root");
    g.require(d.parts.size() == 2, "compound split arity");
    for (const auto& part : d.parts) {
        g.require(part.kind == LimitDescriptor::Kind::X, "compound split part kind");
        g.near(part.x.plus_left, 0.25, 1e-8, "compound part plus/left");
        g.near(part.x.sum(), 1.0, 1e-9, "compound part weights should sum to one");
    }

    // Exact split pattern law at k = 3 against a direct convolution over the
    // uniform composition of the points into the two parts.
    PatternDistribution law = descriptor_pattern_distribution(d, 3);
    g.require(law.exact, "split pattern law should be exact at k = 3");
    std::map<Permutation, double> manual;
    const Permutation root12 = parse_permutation("12");
    for (int a = 0; a <= 3; ++a) {
        const int b = 3 - a;
        const double w = 0.25;
        if (a == 0 || b == 0) {
            const auto& q = (a == 0 ? d.parts[1] : d.parts[0]).x;
            for (const auto& [p, pr] : caterpillar_perm_distribution(q, 3)) manual[p] += w * pr;
            continue;
        }
        for (const auto& [pa, qa] : caterpillar_perm_distribution(d.parts[0].x, a))
            for (const auto& [pb, qb] : caterpillar_perm_distribution(d.parts[1].x, b))
                manual[substitute(root12, {pa, pb})] += w * qa * qb;
    }
    g.require(total_variation(law.probs, manual) < 1e-10,
              "split pattern law should match the convolution");
}

// 7: asymptotic constants against exact coefficients at moderate orders.
void asymptotic_constants(Gate& g) {
    const auto t0 = std::chrono::steady_clock::now();

    TreeSpec av = testutil::load_fixture("av132.json");
    AnalysisReport arep = analyze(av, 0);
    g.require(arep.constants.kind == AsymptoticConstants::Kind::Sqrt,
              "132-avoider constants kind");
    const auto aratio = asymptotic_check(av, arep.constants, expand(av, 200), {200});
    g.near(aratio.at(0).at(200), 1.0, 0.05, "132-avoider coefficient ratio at n = 200");

    TreeSpec x = testutil::load_fixture("xclass.json");
    AnalysisReport xrep = analyze(x, 0);
    g.require(xrep.constants.kind == AsymptoticConstants::Kind::Polar, "x class constants kind");
    const auto xratio = asymptotic_check(x, xrep.constants, expand(x, 100), {100});
    g.near(xratio.at(0).at(100), 1.0, 0.01, "x class coefficient ratio at n = 100");

    const double elapsed = seconds_since(t0);
    g.require(elapsed < 10.0, "asymptotic check took " + std::to_string(elapsed) + "s");
}

// 8: the Boltzmann sampler reproduces the predicted pattern laws.
void sampler_statistics(Gate& g) {
    const auto t0 = std::chrono::steady_clock::now();

    VerificationReport vx =
        verify_sampler(testutil::load_fixture("xclass.json"), 0, 1000, 300, 3, 200, 0.05, 1);
    {
        std::ostringstream ss;
        ss << "x class sampler total variation " << vx.tv << " (threshold " << vx.threshold << ")";
        g.require(vx.pass, ss.str());
    }
    g.require(vx.exact_reference, "x class reference law should be exact");

    VerificationReport va =
        verify_sampler(testutil::load_fixture("av132.json"), 0, 1000, 300, 3, 200, 0.05, 2);
    {
        std::ostringstream ss;
        ss << "132-avoider sampler total variation " << va.tv << " (threshold " << va.threshold
           << ")";
        g.require(va.pass, ss.str());
    }

    const double elapsed = seconds_since(t0);
    g.require(elapsed < 120.0, "sampler verification took " + std::to_string(elapsed) + "s");
}

// 9: the tree encoding is a bijection and commutes with pattern restriction.
void tree_bijection(Gate& g) {
    Rng rng(2026);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
        Tree t = testutil::random_standard_tree(rng, 50);
        if (decompose(perm_of(t)) != t) ++bad;
    }
    g.require(bad == 0, std::to_string(bad) + " of 10000 trees failed the round trip");

    Rng prng(777);
    int bad_comm = 0;
    for (int i = 0; i < 10000; ++i) {
        const int n = 1 + static_cast<int>(prng.below(40));
        std::vector<int> vals(n);
        for (int j = 0; j < n; ++j) vals[j] = j + 1;
        for (int j = n - 1; j > 0; --j)
            std::swap(vals[j], vals[prng.below(j + 1)]);
        const Permutation sigma(vals);
        const auto sub = testutil::random_subset(prng, n);
        if (perm_of(induced_tree(decompose(sigma), sub)) != pattern_of(sigma, sub)) ++bad_comm;
    }
    g.require(bad_comm == 0,
              std::to_string(bad_comm) + " of 10000 restrictions failed to commute");
}

}  // namespace

int main() {
    struct Row {
        const char* title;
        void (*fn)(Gate&);
    };
    const Row rows[] = {
        {"exact counting", exact_counting},
        {"singularity location", singularity_location},
        {"corner weights", corner_weights},
        {"sign biases", sign_biases},
        {"internal consistency", internal_consistency},
        {"composite limits", composite_limits},
        {"asymptotic constants", asymptotic_constants},
        {"sampler statistics", sampler_statistics},
        {"tree bijection", tree_bijection},
    };

    int failures = 0;
    for (size_t i = 0; i < std::size(rows); ++i) {
        Gate gate;
        try {
            rows[i].fn(gate);
        } catch (const std::exception& e) {
            gate.ok = false;
            gate.notes.push_back(std::string("exception: ") + e.what());
        }
        std::cout << "criterion " << (i + 1) << " (" << rows[i].title
                  << "): " << (gate.ok ? "pass" : "FAIL") << "\n";
        for (const auto& note : gate.notes) std::cout << "    " << note << "\n";
        failures += gate.ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}

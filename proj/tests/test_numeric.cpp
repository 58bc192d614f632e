#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "permclass/errors.hpp"
#include "permclass/numeric.hpp"
#include "permclass/spec.hpp"

#include "helpers.hpp"

using namespace permclass;

namespace {

// Residual of the fixed-point equations at an evaluation, restricted to the
// families with finite values.
double system_residual(const TreeSpec& spec, const Evaluation& ev) {
    double worst = 0;
    for (int i = 0; i < spec.size(); ++i) {
        if (std::isnan(ev.values[i])) continue;
        double phi = spec.family(i).leaf ? ev.z : 0.0;
        for (const auto& p : spec.family(i).productions) {
            double term = 1.0;
            for (int c : p.children) term *= ev.values[c];
            phi += term;
        }
        worst = std::max(worst, std::abs(phi - ev.values[i]));
    }
    return worst;
}

const SccRadius& scc_with_member(const RadiusReport& rep, int family) {
    for (const auto& s : rep.sccs)
        for (int m : s.members)
            if (m == family) return s;
    throw std::runtime_error("missing component");
}

}  // namespace

TEST_CASE("evaluation matches the catalan closed form") {
    TreeSpec spec = testutil::load_fixture("av132.json");
    Evaluation ev = evaluate(spec, 0.2);
    // T0(z) = (1 - 2z - sqrt(1-4z)) / (2z)
    CHECK(ev.values[0] == doctest::Approx(0.38196601125010515).epsilon(1e-11));
    CHECK(ev.derivatives[0] == doctest::Approx(4.270509831248423).epsilon(1e-9));
    CHECK(ev.values[3] == doctest::Approx(0.25).epsilon(1e-11));    // z/(1-z)
    CHECK(ev.values[4] == doctest::Approx(0.2).epsilon(1e-12));     // bare leaf
    CHECK(system_residual(spec, ev) < 1e-10);

    CHECK_THROWS_AS(evaluate(spec, -0.1), Error);
    try {
        evaluate(spec, 0.3);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.code() == "Diverged");
    }
    EvalOptions tight;
    tight.max_iter = 50;
    try {
        evaluate(spec, 0.25, tight);
        FAIL("expected iteration limit");
    } catch (const Error& e) {
        CHECK(e.code() == "IterationLimit");
    }
}

TEST_CASE("subset evaluation") {
    TreeSpec spec = testutil::load_fixture("av132.json");
    Evaluation ev = evaluate_subset(spec, {3, 4}, 0.5);
    CHECK(ev.values[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev.derivatives[3] == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(std::isnan(ev.values[0]));

    try {
        evaluate_subset(spec, {0}, 0.1);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == "ClosureError");
    }
}

TEST_CASE("system residual stays small across fixtures") {
    for (const char* name : {"xclass.json", "xtilde.json", "vclass.json", "union.json",
                             "compound.json", "layered.json"}) {
        CAPTURE(name);
        TreeSpec spec = testutil::load_fixture(name);
        Evaluation ev = evaluate(spec, 0.1);
        CHECK(system_residual(spec, ev) < 1e-11);
    }
}

TEST_CASE("radius of the 132-avoiders") {
    TreeSpec spec = testutil::load_fixture("av132.json");
    RadiusReport rep = find_radius(spec);
    CHECK(rep.rho == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(rep.family_radius[0] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(rep.family_radius[3] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::isinf(rep.family_radius[4]));

    const SccRadius& core = scc_with_member(rep, 0);
    CHECK(core.members == std::vector<int>{0, 1, 2});
    CHECK(core.kind == SccKind::Fold);
    // Critical values (1, 3/4, 1/2) from the closed form.
    REQUIRE(core.values_at_rho.size() == 5);
    CHECK(core.values_at_rho[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(core.values_at_rho[1] == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(core.values_at_rho[2] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::isnan(core.values_at_rho[3]));

    CHECK(scc_with_member(rep, 4).kind == SccKind::Polynomial);
}

TEST_CASE("radius of the x class is 1 - sqrt(2)/2") {
    TreeSpec spec = testutil::load_fixture("xclass.json");
    RadiusReport rep = find_radius(spec);
    const double expect = 1.0 - std::sqrt(2.0) / 2.0;
    CHECK(rep.rho == doctest::Approx(expect).epsilon(1e-10));
    // The cycle T3,T4,T6,T7 carries the singularity; T2 and T5 are plain
    // geometric chains with radius 1; T1 is a single tree.
    CHECK(rep.family_radius[0] == doctest::Approx(expect).epsilon(1e-10));
    CHECK(rep.family_radius[3] == doctest::Approx(expect).epsilon(1e-10));
    CHECK(rep.family_radius[2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.family_radius[5] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::isinf(rep.family_radius[1]));

    const SccRadius& core = scc_with_member(rep, 3);
    CHECK(core.members == std::vector<int>{3, 4, 6, 7});
    CHECK(core.kind == SccKind::Pole);
}

TEST_CASE("radius of the tilted x class") {
    TreeSpec spec = testutil::load_fixture("xtilde.json");
    RadiusReport rep = find_radius(spec);
    const double rho = rep.rho;
    CHECK(rho == doctest::Approx(0.262722279299100740).epsilon(1e-9));
    // rho is the smallest real root of z^3 - z^2 + 4z - 1.
    CHECK(std::abs(rho * rho * rho - rho * rho + 4 * rho - 1) < 1e-9);
}

TEST_CASE("radius of the v class") {
    TreeSpec spec = testutil::load_fixture("vclass.json");
    RadiusReport rep = find_radius(spec);
    CHECK(rep.rho == doctest::Approx(0.337160300926562755).epsilon(1e-9));
}

TEST_CASE("fold values agree with the series fit") {
    TreeSpec spec = testutil::load_fixture("branching.json");
    RadiusReport rep = find_radius(spec);
    CHECK(rep.rho == doctest::Approx(0.165201311014963356).epsilon(1e-9));

    const SccRadius& core = scc_with_member(rep, 0);
    REQUIRE(core.kind == SccKind::Fold);
    REQUIRE(core.members == std::vector<int>{0, 1, 2});
    CHECK(core.values_at_rho[0] == doctest::Approx(0.392940994725819381).epsilon(1e-8));

    SqrtFit fit = sqrt_fit(spec, core.members, rep.rho);
    for (int m : core.members)
        CHECK(std::abs(fit.value_at_rho[m] - core.values_at_rho[m]) < 1e-6);
}

TEST_CASE("square root fit recovers the catalan expansion") {
    TreeSpec spec = testutil::load_fixture("av132.json");
    SqrtFit fit = sqrt_fit(spec, {0, 1, 2}, 0.25);
    // T0 = 1 - 4 sqrt(1/4 - z) + O(1/4 - z) near the fold.
    CHECK(fit.value_at_rho[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.sqrt_coefficient[0] == doctest::Approx(4.0).epsilon(1e-4));
    CHECK(std::isnan(fit.value_at_rho[3]));
}

TEST_CASE("radius report for mixtures") {
    TreeSpec spec = testutil::load_fixture("union.json");
    RadiusReport rep = find_radius(spec);
    CHECK(rep.rho == doctest::Approx(0.25).epsilon(1e-10));
    const int t11 = spec.index_of("T11");
    CHECK(rep.family_radius[t11] == doctest::Approx(0.5).epsilon(1e-9));

    // Both two-family folds sit at 1/4 with critical values (1, 1/2): each
    // system reduces to y = z (1 + y)^2.
    for (const char* fam : {"T2", "T5"}) {
        const int i = spec.index_of(fam);
        const SccRadius& s = scc_with_member(rep, i);
        CHECK(s.kind == SccKind::Fold);
        CHECK(s.rho == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(s.values_at_rho[i] == doctest::Approx(1.0).epsilon(1e-8));
    }
}

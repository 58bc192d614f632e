#include "permclass/numeric.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "permclass/errors.hpp"

namespace permclass {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double prod_all(const std::vector<double>& y, const std::vector<int>& ch) {
    double v = 1.0;
    for (int c : ch) v *= y[c];
    return v;
}

double prod_skip(const std::vector<double>& y, const std::vector<int>& ch, size_t skip) {
    double v = 1.0;
    for (size_t r = 0; r < ch.size(); ++r)
        if (r != skip) v *= y[ch[r]];
    return v;
}

double prod_skip2(const std::vector<double>& y, const std::vector<int>& ch, size_t s1, size_t s2) {
    double v = 1.0;
    for (size_t r = 0; r < ch.size(); ++r)
        if (r != s1 && r != s2) v *= y[ch[r]];
    return v;
}

double phi_family(const TreeSpec& spec, int i, double z, const std::vector<double>& y) {
    double v = spec.family(i).leaf ? z : 0.0;
    for (const auto& p : spec.family(i).productions) v += prod_all(y, p.children);
    return v;
}

struct FixedPointResult {
    std::vector<double> y;
    long iterations = 0;
    double final_step = 0;
    bool converged = false;
    bool capped = false;
};

// Plain iteration Y <- Phi(z, Y) from zero over a dependency-closed subset.
// The iterates increase monotonically, which the radius probes rely on.
FixedPointResult fixed_point(const TreeSpec& spec, const std::vector<int>& subset, double z,
                             double tol, long max_iter, double cap) {
    FixedPointResult res;
    res.y.assign(spec.size(), 0.0);
    std::vector<double> next(spec.size(), 0.0);
    for (long it = 1; it <= max_iter; ++it) {
        double step = 0.0;
        double top = 0.0;
        for (int i : subset) {
            next[i] = phi_family(spec, i, z, res.y);
            step = std::max(step, next[i] - res.y[i]);
            top = std::max(top, next[i]);
        }
        for (int i : subset) res.y[i] = next[i];
        res.iterations = it;
        res.final_step = step;
        if (top > cap || std::isinf(top) || std::isnan(top)) { res.capped = true; return res; }
        if (step < tol) { res.converged = true; return res; }
    }
    return res;
}

Eigen::MatrixXd jacobian_block(const TreeSpec& spec, const std::vector<int>& rows,
                               const std::vector<int>& cols, const std::vector<double>& y) {
    std::vector<int> col_of(spec.size(), -1);
    for (size_t j = 0; j < cols.size(); ++j) col_of[cols[j]] = static_cast<int>(j);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows.size(), cols.size());
    for (size_t a = 0; a < rows.size(); ++a) {
        for (const auto& p : spec.family(rows[a]).productions) {
            for (size_t r = 0; r < p.children.size(); ++r) {
                const int j = col_of[p.children[r]];
                if (j >= 0) m(a, j) += prod_skip(y, p.children, r);
            }
        }
    }
    return m;
}

// Lower bound on the Perron root of a nonnegative matrix via Collatz ratios
// along a shifted power iteration. Sound for "above" verdicts: the bound can
// only undershoot.
double perron_lower(const Eigen::MatrixXd& m, int iters) {
    const int n = static_cast<int>(m.rows());
    if (n == 0) return 0.0;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double lower = 0.0;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd y = m * x;
        double lo = kInf;
        for (int i = 0; i < n; ++i) lo = std::min(lo, x(i) > 0 ? y(i) / x(i) : 0.0);
        lower = lo;
        x = (y + x);  // shift by the identity to break periodic cycling
        const double nrm = x.maxCoeff();
        if (!(nrm > 0) || std::isinf(nrm) || std::isnan(nrm)) break;
        x /= nrm;
    }
    return lower;
}

// Two-sided Collatz bounds, iterated until they pinch. Requires the matrix to
// have a strongly connected support (true for the Jacobian block of a cyclic
// component evaluated at positive values).
double perron_value(const Eigen::MatrixXd& m, double tol = 1e-14, int max_iter = 200000) {
    const int n = static_cast<int>(m.rows());
    if (n == 1) return m(0, 0);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double est = 0.0;
    for (int k = 0; k < max_iter; ++k) {
        Eigen::VectorXd y = m * x;
        double lo = kInf, hi = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = y(i) / x(i);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        est = 0.5 * (lo + hi);
        if (hi - lo < tol * std::max(1.0, hi)) return est;
        x = y + x;
        x /= x.maxCoeff();
    }
    return est;
}

struct SccWork {
    std::vector<int> members;
    std::vector<int> closure;      // members plus everything below them
    std::vector<int> strict_deps;  // closure minus members
    bool self_branching = false;
};

SccWork make_work(const TreeSpec& spec, const std::vector<int>& members) {
    SccWork w;
    w.members = members;
    w.closure = dependency_closure(spec, members);
    std::vector<bool> is_member(spec.size(), false);
    for (int i : members) is_member[i] = true;
    for (int i : w.closure)
        if (!is_member[i]) w.strict_deps.push_back(i);
    for (int i : members) {
        for (const auto& p : spec.family(i).productions) {
            int own = 0;
            for (int c : p.children) own += is_member[c] ? 1 : 0;
            if (own >= 2) { w.self_branching = true; break; }
        }
        if (w.self_branching) break;
    }
    return w;
}

// Above/below probe used by the radius bisection. "Above" answers are proofs
// (monotone iterates keep the spectral bound below its fixed-point value);
// "below" is what remains when the budget runs out, which near the root is
// wrong by less than the current bracket width.
bool probe_above(const TreeSpec& spec, const SccWork& w, double z, long budget) {
    constexpr double kProbeCap = 1e120;
    if (!w.self_branching) {
        // Linear in its own variables: the Jacobian block does not involve
        // the member values, so only the dependencies need converging.
        auto deps = fixed_point(spec, w.strict_deps, z, 1e-14, budget, kProbeCap);
        if (deps.capped) return true;  // a dependency itself blows past its pole
        return perron_lower(jacobian_block(spec, w.members, w.members, deps.y), 400) > 1.0 + 1e-12;
    }
    std::vector<double> y(spec.size(), 0.0), next(spec.size(), 0.0);
    const long check_every = 64;
    for (long it = 1; it <= budget; ++it) {
        double step = 0.0, top = 0.0;
        for (int i : w.closure) {
            next[i] = phi_family(spec, i, z, y);
            step = std::max(step, next[i] - y[i]);
            top = std::max(top, next[i]);
        }
        for (int i : w.closure) y[i] = next[i];
        if (top > kProbeCap || std::isinf(top) || std::isnan(top)) return true;
        const bool settled = step < 1e-14 * (1.0 + top);
        if (settled || it % check_every == 0 || it == budget) {
            const double lb = perron_lower(jacobian_block(spec, w.members, w.members, y), 200);
            if (lb > 1.0 + 1e-12) return true;
            if (settled) return false;
        }
    }
    return false;
}

long probe_budget(double width) {
    if (width > 1e-3) return 40'000;
    if (width > 1e-7) return 200'000;
    return 800'000;
}

// Values and z-derivatives of the strict dependencies at z, needed by both
// polish steps. Dependencies are subcritical there, so the resolvent exists.
struct DepState {
    std::vector<double> y;   // full size, zeros off the closure
    std::vector<double> dy;  // same layout
};

DepState dep_state(const TreeSpec& spec, const std::vector<int>& deps, double z) {
    DepState st;
    auto fp = fixed_point(spec, deps, z, 1e-15, 2'000'000, 1e120);
    st.y = fp.y;
    st.dy.assign(spec.size(), 0.0);
    if (deps.empty()) return st;
    Eigen::MatrixXd m = jacobian_block(spec, deps, deps, st.y);
    Eigen::VectorXd u(deps.size());
    for (size_t a = 0; a < deps.size(); ++a) u(a) = spec.family(deps[a]).leaf ? 1.0 : 0.0;
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(deps.size(), deps.size()) - m;
    Eigen::VectorXd d = sys.partialPivLu().solve(u);
    for (size_t a = 0; a < deps.size(); ++a) st.dy[deps[a]] = d(a);
    return st;
}

// Bordered Newton for a square-root component: unknowns (z, Y_S, w) with
// Y = Phi, (Id - M)w = 0, sum(w) = 1. Quadratic once the bisection bracket
// is tight. Returns false when it wanders off the bracket.
bool fold_newton(const TreeSpec& spec, const SccWork& w, double lo, double hi, double& rho,
                 std::vector<double>& values) {
    const int m = static_cast<int>(w.members.size());
    std::vector<int> pos_of(spec.size(), -1);
    for (int a = 0; a < m; ++a) pos_of[w.members[a]] = a;

    double z = lo;
    auto warm = fixed_point(spec, w.closure, z, 1e-14, 300'000, 1e120);
    Eigen::VectorXd Y(m), W(m);
    for (int a = 0; a < m; ++a) Y(a) = warm.y[w.members[a]];
    {
        Eigen::MatrixXd mm = jacobian_block(spec, w.members, w.members, warm.y);
        Eigen::VectorXd x = Eigen::VectorXd::Ones(m);
        for (int k = 0; k < 2000; ++k) {
            x = mm * x + x;
            x /= x.maxCoeff();
        }
        W = x / x.sum();
    }

    const int dim = 2 * m + 1;
    Eigen::VectorXd F(dim);
    Eigen::MatrixXd J(dim, dim);
    std::vector<double> yfull(spec.size(), 0.0);

    for (int step = 0; step < 80; ++step) {
        DepState dep = dep_state(spec, w.strict_deps, z);
        yfull = dep.y;
        for (int a = 0; a < m; ++a) yfull[w.members[a]] = Y(a);

        J.setZero();
        F.setZero();
        for (int a = 0; a < m; ++a) {
            const int i = w.members[a];
            double phi = spec.family(i).leaf ? z : 0.0;
            double dphi_dz = spec.family(i).leaf ? 1.0 : 0.0;
            for (const auto& p : spec.family(i).productions) {
                phi += prod_all(yfull, p.children);
                for (size_t r = 0; r < p.children.size(); ++r) {
                    const int c = p.children[r];
                    if (pos_of[c] >= 0) {
                        const double pv = prod_skip(yfull, p.children, r);
                        J(a, 1 + pos_of[c]) -= pv;          // d(Y - Phi)/dY
                        J(m + a, 1 + m + pos_of[c]) -= pv;  // -M block of d((Id-M)w)/dw
                        // second derivatives feed the eigenvector rows
                        for (size_t q = 0; q < p.children.size(); ++q) {
                            if (q == r) continue;
                            const int c2 = p.children[q];
                            const double pv2 = prod_skip2(yfull, p.children, r, q);
                            if (pos_of[c2] >= 0) {
                                J(m + a, 1 + pos_of[c2]) -= W(pos_of[c]) * pv2;
                            } else {
                                J(m + a, 0) -= W(pos_of[c]) * pv2 * dep.dy[c2];
                            }
                        }
                        F(m + a) -= W(pos_of[c]) * pv;  // -(M w)_a accumulates
                    } else {
                        dphi_dz += prod_skip(yfull, p.children, r) * dep.dy[c];
                    }
                }
            }
            F(a) = Y(a) - phi;
            J(a, 0) = -dphi_dz;
            J(a, 1 + a) += 1.0;
            F(m + a) += W(a);  // (Id - M) w
            J(m + a, 1 + m + a) += 1.0;
        }
        F(dim - 1) = W.sum() - 1.0;
        for (int b = 0; b < m; ++b) J(dim - 1, 1 + m + b) = 1.0;

        Eigen::VectorXd delta = J.partialPivLu().solve(-F);
        if (!delta.allFinite()) return false;
        double scale = 1.0;
        const double span = std::max(hi - lo, 1e-12);
        if (std::abs(delta(0)) > 64 * span) scale = 64 * span / std::abs(delta(0));
        z += scale * delta(0);
        for (int a = 0; a < m; ++a) Y(a) += scale * delta(1 + a);
        for (int a = 0; a < m; ++a) W(a) += scale * delta(1 + m + a);
        if (z < lo - 1e-7 || z > hi + 1e-7) return false;
        if (F.lpNorm<Eigen::Infinity>() < 1e-13 * (1.0 + Y.lpNorm<Eigen::Infinity>()) &&
            std::abs(delta(0)) < 1e-15) {
            rho = z;
            values.assign(spec.size(), kNaN);
            for (int a = 0; a < m; ++a) values[w.members[a]] = Y(a);
            return true;
        }
    }
    return false;
}

}  // namespace

Evaluation evaluate_subset(const TreeSpec& spec, const std::vector<int>& subset, double z,
                           const EvalOptions& opts) {
    if (z < 0) throw validation_error("evaluation point must be nonnegative");
    std::vector<bool> in(spec.size(), false);
    for (int i : subset) in[i] = true;
    for (int i : subset)
        for (const auto& p : spec.family(i).productions)
            for (int c : p.children)
                if (!in[c]) throw closure_error("evaluation subset is not dependency closed");

    auto fp = fixed_point(spec, subset, z, opts.tol, opts.max_iter, opts.cap);
    if (fp.capped) throw diverged("system diverged at z = " + std::to_string(z));
    if (!fp.converged)
        throw Error("IterationLimit", "no convergence within the iteration budget at z = " + std::to_string(z));

    Evaluation ev;
    ev.z = z;
    ev.iterations = fp.iterations;
    ev.final_step = fp.final_step;
    ev.values.assign(spec.size(), kNaN);
    for (int i : subset) ev.values[i] = fp.y[i];
    if (opts.derivatives) {
        Eigen::MatrixXd m = jacobian_block(spec, subset, subset, fp.y);
        Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(subset.size(), subset.size()) - m;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
        if (!lu.isInvertible())
            throw derivative_unavailable("Jacobian resolvent is singular at z = " + std::to_string(z));
        Eigen::VectorXd u(subset.size());
        for (size_t a = 0; a < subset.size(); ++a) u(a) = spec.family(subset[a]).leaf ? 1.0 : 0.0;
        Eigen::VectorXd d = lu.solve(u);
        ev.derivatives.assign(spec.size(), kNaN);
        for (size_t a = 0; a < subset.size(); ++a) ev.derivatives[subset[a]] = d(a);
    }
    return ev;
}

Evaluation evaluate(const TreeSpec& spec, double z, const EvalOptions& opts) {
    std::vector<int> all(spec.size());
    for (int i = 0; i < spec.size(); ++i) all[i] = i;
    return evaluate_subset(spec, all, z, opts);
}

RadiusReport find_radius(const TreeSpec& spec, double tol) {
    const int n = spec.size();
    DependencyGraph g = dependency_graph(spec);
    RadiusReport rep;
    rep.tol = tol;
    rep.family_radius.assign(n, kInf);

    for (size_t k = 0; k < g.sccs.size(); ++k) {
        SccRadius sr;
        sr.members = g.sccs[k];
        if (!g.scc_cyclic[k]) {
            const int i = sr.members[0];
            if (!spec.infinite()[i]) {
                sr.kind = SccKind::Polynomial;
                sr.rho = kInf;
            } else {
                sr.kind = SccKind::Inherited;
                sr.rho = kInf;
                for (int c : g.deps[i]) sr.rho = std::min(sr.rho, rep.family_radius[c]);
            }
            sr.bracket_lo = sr.bracket_hi = sr.rho;
            rep.family_radius[i] = sr.rho;
            rep.sccs.push_back(std::move(sr));
            continue;
        }

        SccWork w = make_work(spec, sr.members);
        double hi0 = 1.0;
        for (int i : sr.members)
            for (int c : g.deps[i])
                if (g.scc_of[c] != static_cast<int>(k)) hi0 = std::min(hi0, rep.family_radius[c]);

        double lo = 0.0, hi = hi0;
        bool above_seen = false;
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if (probe_above(spec, w, mid, probe_budget(hi - lo))) {
                hi = mid;
                above_seen = true;
            } else {
                lo = mid;
            }
        }
        sr.bracket_lo = lo;
        sr.bracket_hi = hi;

        if (!above_seen) {
            // No singularity of its own below the inherited cap.
            sr.kind = SccKind::Inherited;
            sr.rho = hi0;
        } else if (!w.self_branching) {
            sr.kind = SccKind::Pole;
            sr.rho = 0.5 * (lo + hi);
            // Illinois iteration on Perron(M(z)) - 1 over a slightly widened
            // bracket; f is increasing and continuous there.
            auto f = [&](double z) {
                auto deps = fixed_point(spec, w.strict_deps, z, 1e-15, 2'000'000, 1e120);
                return perron_value(jacobian_block(spec, w.members, w.members, deps.y)) - 1.0;
            };
            double a = std::max(0.0, lo - 64 * tol), b = std::min(hi0, hi + 64 * tol);
            double fa = f(a), fb = f(b);
            if (fa < 0 && fb > 0) {
                double side = 0;
                for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
                    const double c = (a * fb - b * fa) / (fb - fa);
                    const double fc = f(c);
                    if (std::abs(fc) < 1e-15) { a = b = c; break; }
                    if (fc < 0) {
                        a = c; fa = fc;
                        if (side == -1) fb /= 2;
                        side = -1;
                    } else {
                        b = c; fb = fc;
                        if (side == 1) fa /= 2;
                        side = 1;
                    }
                }
                sr.rho = 0.5 * (a + b);
                sr.polished = true;
            }
        } else {
            sr.kind = SccKind::Fold;
            sr.rho = 0.5 * (lo + hi);
            double z_hat = 0;
            std::vector<double> vals;
            if (fold_newton(spec, w, lo, hi, z_hat, vals)) {
                sr.rho = z_hat;
                sr.values_at_rho = std::move(vals);
                sr.polished = true;
            } else {
                SqrtFit fit = sqrt_fit(spec, sr.members, sr.rho);
                sr.values_at_rho = std::move(fit.value_at_rho);
            }
        }
        for (int i : sr.members) rep.family_radius[i] = sr.rho;
        rep.sccs.push_back(std::move(sr));
    }

    rep.rho = kInf;
    for (double r : rep.family_radius) rep.rho = std::min(rep.rho, r);
    if (!(rep.rho <= 1.0 + 1e-9))
        throw radius_above_cap("computed radius exceeds the unit cap");
    return rep;
}

SqrtFit sqrt_fit(const TreeSpec& spec, const std::vector<int>& members, double rho) {
    SqrtFit fit;
    fit.value_at_rho.assign(spec.size(), kNaN);
    fit.sqrt_coefficient.assign(spec.size(), kNaN);
    std::vector<int> closure = dependency_closure(spec, members);

    constexpr int kPoints = 12;
    std::vector<double> hs(kPoints);
    // geometric grid from 1e-4 down to 1e-6, relative to rho
    for (int j = 0; j < kPoints; ++j) hs[j] = rho * 1e-4 * std::pow(1e-2, j / double(kPoints - 1));

    Eigen::MatrixXd A(kPoints, 5);
    std::vector<Eigen::VectorXd> rhs(members.size(), Eigen::VectorXd(kPoints));
    for (int j = 0; j < kPoints; ++j) {
        const double x = std::sqrt(hs[j]);
        for (int c = 0; c < 5; ++c) A(j, c) = std::pow(x, c);
        auto fp = fixed_point(spec, closure, rho - hs[j], 1e-15, 4'000'000, 1e120);
        for (size_t a = 0; a < members.size(); ++a) rhs[a](j) = fp.y[members[a]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    for (size_t a = 0; a < members.size(); ++a) {
        Eigen::VectorXd coef = qr.solve(rhs[a]);
        fit.value_at_rho[members[a]] = coef(0);
        fit.sqrt_coefficient[members[a]] = -coef(1);
    }
    return fit;
}

}  // namespace permclass

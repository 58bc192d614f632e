#include "permclass/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "permclass/errors.hpp"

namespace permclass {

namespace {

constexpr double kCriticalBand = 1e-9;  // relative margin defining the critical set
constexpr double kAmbiguousBand = 1e-6;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double prod_skip(const Production& p, const std::vector<double>& vals, int skip) {
    double acc = 1;
    for (int r = 0; r < static_cast<int>(p.children.size()); ++r)
        if (r != skip) acc *= vals[p.children[r]];
    return acc;
}

double prod_skip2(const Production& p, const std::vector<double>& vals, int s1, int s2) {
    double acc = 1;
    for (int r = 0; r < static_cast<int>(p.children.size()); ++r)
        if (r != s1 && r != s2) acc *= vals[p.children[r]];
    return acc;
}

// Root pattern at two 0-based positions a < b: 12 reads as Plus.
Sign pair_sign(const Permutation& root, int a, int b) {
    return root(a + 1) < root(b + 1) ? Sign::Plus : Sign::Minus;
}

}  // namespace

CriticalStructure classify(const TreeSpec& spec, const RadiusReport& radius) {
    const int n = spec.size();
    CriticalStructure cs;
    cs.rho = radius.rho;
    std::vector<bool> is_crit(n, false);
    for (int i = 0; i < n; ++i) {
        const double r = radius.family_radius[i];
        if (r <= cs.rho * (1 + kCriticalBand)) {
            is_crit[i] = true;
            cs.critical.push_back(i);
        } else if (r <= cs.rho * (1 + kAmbiguousBand)) {
            cs.ambiguous = true;
        }
    }

    // Components of the critical graph coincide with the components of the
    // full dependency graph that lie inside the critical set: a cycle pins the
    // radii of everything on it to a common value, so components are
    // criticality-homogeneous, and any path between critical families inside
    // one component stays critical.
    DependencyGraph g = dependency_graph(spec);
    for (const auto& comp : g.sccs) {
        bool all = true;
        for (int i : comp) all = all && is_crit[i];
        if (all) cs.critical_sccs.push_back(comp);
    }
    cs.strongly_connected = cs.critical_sccs.size() == 1;

    for (int i : cs.critical) {
        for (const auto& p : spec.family(i).productions) {
            int crit_children = 0;
            for (int c : p.children) crit_children += is_crit[c] ? 1 : 0;
            if (crit_children >= 2) cs.branching = true;
        }
    }
    return cs;
}

SpectralData perron(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 0 || m.cols() != n) throw spectral_failure("matrix must be square and nonempty");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!(m(i, j) >= 0)) throw spectral_failure("matrix entries must be nonnegative");

    if (n == 1) {
        if (m(0, 0) <= 0) throw irreducibility_violation("1x1 matrix needs a positive entry");
    } else {
        // Irreducibility: node 0 reaches and is reached by everything.
        auto reach = [&](bool transpose) {
            std::vector<bool> seen(n, false);
            std::vector<int> stack{0};
            seen[0] = true;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                for (int w = 0; w < n; ++w) {
                    double e = transpose ? m(w, u) : m(u, w);
                    if (e > 0 && !seen[w]) {
                        seen[w] = true;
                        stack.push_back(w);
                    }
                }
            }
            return seen;
        };
        for (bool t : {false, true})
            for (bool s : reach(t))
                if (!s) throw irreducibility_violation("matrix support is not strongly connected");
    }

    // Two-sided power iteration on m + Id; the shift makes an irreducible
    // matrix primitive, so convergence is geometric.
    Eigen::MatrixXd a = m + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    Eigen::VectorXd u = v;
    double lambda = 0, prev = std::numeric_limits<double>::infinity();
    bool done = false;
    for (long iter = 0; iter < 2'000'000; ++iter) {
        Eigen::VectorXd nv = a * v;
        nv /= nv.norm();
        Eigen::VectorXd nu = a.transpose() * u;
        nu /= nu.norm();
        const double step = std::max((nv - v).lpNorm<Eigen::Infinity>(), (nu - u).lpNorm<Eigen::Infinity>());
        v = nv;
        u = nu;
        const double uv = u.dot(v);
        lambda = u.dot(m * v) / uv;
        if (step < 1e-14 && std::abs(lambda - prev) <= 1e-13 * (1 + std::abs(lambda))) {
            done = true;
            break;
        }
        prev = lambda;
    }
    if (!done) throw spectral_failure("power iteration did not converge");
    if (v.minCoeff() <= 0 || u.minCoeff() <= 0)
        throw spectral_failure("eigenvector left the positive cone");
    const double res = std::max((m * v - lambda * v).lpNorm<Eigen::Infinity>(),
                                (m.transpose() * u - lambda * u).lpNorm<Eigen::Infinity>());
    if (res > 1e-8 * (1 + std::abs(lambda))) throw spectral_failure("eigenpair residual too large");

    SpectralData sd;
    sd.matrix = m;
    sd.eigenvalue = lambda;
    sd.v = v;  // unit norm
    sd.u = u / u.dot(v);
    return sd;
}

Eigen::MatrixXd build_M_star(const TreeSpec& spec, const std::vector<int>& crit,
                             const std::vector<double>& values) {
    const int m = static_cast<int>(crit.size());
    std::vector<int> pos(spec.size(), -1);
    for (int a = 0; a < m; ++a) pos[crit[a]] = a;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    for (int a = 0; a < m; ++a) {
        for (const auto& p : spec.family(crit[a]).productions) {
            for (int s = 0; s < static_cast<int>(p.children.size()); ++s) {
                const int b = pos[p.children[s]];
                if (b >= 0) out(a, b) += prod_skip(p, values, s);
            }
        }
    }
    return out;
}

DMatrices build_D_matrices(const TreeSpec& spec, const std::vector<int>& crit,
                           const std::vector<double>& values, const std::vector<double>& derivs) {
    const int m = static_cast<int>(crit.size());
    std::vector<int> pos(spec.size(), -1);
    for (int a = 0; a < m; ++a) pos[crit[a]] = a;
    DMatrices d;
    for (auto& row : d.at)
        for (auto& mat : row) mat = Eigen::MatrixXd::Zero(m, m);
    for (int a = 0; a < m; ++a) {
        for (const auto& p : spec.family(crit[a]).productions) {
            const int arity = static_cast<int>(p.children.size());
            for (int s = 0; s < arity; ++s) {
                const int b = pos[p.children[s]];
                if (b < 0) continue;
                for (int comp = 0; comp < arity; ++comp) {
                    if (comp == s) continue;
                    const Side side = comp < s ? Side::Left : Side::Right;
                    const Sign sign = pair_sign(p.root, std::min(comp, s), std::max(comp, s));
                    d.at[static_cast<int>(side)][static_cast<int>(sign)](a, b) +=
                        derivs[p.children[comp]] * prod_skip2(p, values, comp, s);
                }
            }
        }
    }
    return d;
}

ETensors build_E_tensors(const TreeSpec& spec, const std::vector<int>& crit,
                         const std::vector<double>& values) {
    const int m = static_cast<int>(crit.size());
    std::vector<int> pos(spec.size(), -1);
    for (int a = 0; a < m; ++a) pos[crit[a]] = a;
    ETensors e;
    e.dim = m;
    e.plus.assign(static_cast<size_t>(m) * m * m, 0.0);
    e.minus.assign(e.plus.size(), 0.0);
    for (int a = 0; a < m; ++a) {
        for (const auto& p : spec.family(crit[a]).productions) {
            const int arity = static_cast<int>(p.children.size());
            for (int s1 = 0; s1 < arity; ++s1) {
                const int j = pos[p.children[s1]];
                if (j < 0) continue;
                for (int s2 = s1 + 1; s2 < arity; ++s2) {
                    const int jp = pos[p.children[s2]];
                    if (jp < 0) continue;
                    const double term = prod_skip2(p, values, s1, s2);
                    auto& slot = pair_sign(p.root, s1, s2) == Sign::Plus ? e.plus : e.minus;
                    slot[(static_cast<size_t>(a) * m + j) * m + jp] += term;
                }
            }
        }
    }
    return e;
}

LinearParameters linear_parameters(const TreeSpec& spec, const std::vector<int>& crit,
                                   const std::vector<double>& values, const std::vector<double>& derivs,
                                   double rho) {
    LinearParameters lp;
    lp.spectral = perron(build_M_star(spec, crit, values));
    const DMatrices d = build_D_matrices(spec, crit, values, derivs);
    const Eigen::VectorXd& u = lp.spectral.u;
    const Eigen::VectorXd& v = lp.spectral.v;
    lp.denominator = u.dot(d.sum() * v);
    if (!(std::abs(lp.denominator) > 1e-14))
        throw degenerate_spectrum("vanishing pole normalization");
    lp.p.plus_left = u.dot(d.at[0][0] * v) / lp.denominator;
    lp.p.minus_left = u.dot(d.at[0][1] * v) / lp.denominator;
    lp.p.plus_right = u.dot(d.at[1][0] * v) / lp.denominator;
    lp.p.minus_right = u.dot(d.at[1][1] * v) / lp.denominator;

    // Inhomogeneous part: the leaf term plus every production free of
    // critical children.
    std::vector<int> pos(spec.size(), -1);
    const int m = static_cast<int>(crit.size());
    for (int a = 0; a < m; ++a) pos[crit[a]] = a;
    Eigen::VectorXd w(m);
    for (int a = 0; a < m; ++a) {
        double acc = spec.family(crit[a]).leaf ? rho : 0;
        for (const auto& p : spec.family(crit[a]).productions) {
            bool free = true;
            for (int c : p.children) free = free && pos[c] < 0;
            if (free) acc += prod_skip(p, values, -1);
        }
        w(a) = acc;
    }
    const double scale = u.dot(w) / lp.denominator;
    lp.residue.assign(spec.size(), kNaN);
    for (int a = 0; a < m; ++a) lp.residue[crit[a]] = scale * v(a);
    return lp;
}

BranchingParameters branching_parameters(const TreeSpec& spec, const std::vector<int>& crit,
                                         const std::vector<double>& values,
                                         const std::vector<double>& sub_derivs, double rho) {
    (void)rho;
    BranchingParameters bp;
    bp.spectral = perron(build_M_star(spec, crit, values));
    const ETensors e = build_E_tensors(spec, crit, values);
    const Eigen::VectorXd& u = bp.spectral.u;
    const Eigen::VectorXd& v = bp.spectral.v;
    const int m = static_cast<int>(crit.size());
    double sp = 0, sm = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int jp = 0; jp < m; ++jp) {
                sp += u(i) * e.ep(i, j, jp) * v(j) * v(jp);
                sm += u(i) * e.em(i, j, jp) * v(j) * v(jp);
            }
    bp.Z = sp + sm;
    if (!(bp.Z > 1e-300)) throw degenerate_spectrum("vanishing pair mass in a branching component");
    bp.p_plus = sp / bp.Z;
    bp.zeta = std::sqrt(bp.Z);

    std::vector<int> pos(spec.size(), -1);
    for (int a = 0; a < m; ++a) pos[crit[a]] = a;
    double beta2 = 0;
    for (int a = 0; a < m; ++a) {
        double ua = spec.family(crit[a]).leaf ? 1.0 : 0.0;
        for (const auto& p : spec.family(crit[a]).productions)
            for (int s = 0; s < static_cast<int>(p.children.size()); ++s)
                if (pos[p.children[s]] < 0) ua += sub_derivs[p.children[s]] * prod_skip(p, values, s);
        beta2 += u(a) * ua;
    }
    if (!(beta2 > 0)) throw degenerate_spectrum("nonpositive drift in a branching component");
    bp.beta = std::sqrt(beta2);
    bp.sqrt_coef.assign(spec.size(), kNaN);
    for (int a = 0; a < m; ++a) bp.sqrt_coef[crit[a]] = bp.beta * v(a) / bp.zeta;
    return bp;
}

LimitDescriptor LimitDescriptor::make_x(const XQuadruple& q) {
    LimitDescriptor d;
    d.kind = Kind::X;
    d.x = q;
    return d;
}
LimitDescriptor LimitDescriptor::make_brownian(double p) {
    LimitDescriptor d;
    d.kind = Kind::Brownian;
    d.p_plus = p;
    return d;
}
LimitDescriptor LimitDescriptor::make_mixture(std::vector<std::pair<double, LimitDescriptor>> comps) {
    LimitDescriptor d;
    d.kind = Kind::Mixture;
    d.components = std::move(comps);
    return d;
}
LimitDescriptor LimitDescriptor::make_split(Permutation root, std::vector<LimitDescriptor> parts) {
    LimitDescriptor d;
    d.kind = Kind::Split;
    d.split_root = std::move(root);
    d.parts = std::move(parts);
    return d;
}
LimitDescriptor LimitDescriptor::make_unsupported(std::string reason) {
    LimitDescriptor d;
    d.kind = Kind::Unsupported;
    d.reason = std::move(reason);
    return d;
}

bool approx_equal(const LimitDescriptor& a, const LimitDescriptor& b, double tol) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case LimitDescriptor::Kind::X:
            return std::abs(a.x.plus_left - b.x.plus_left) <= tol &&
                   std::abs(a.x.plus_right - b.x.plus_right) <= tol &&
                   std::abs(a.x.minus_left - b.x.minus_left) <= tol &&
                   std::abs(a.x.minus_right - b.x.minus_right) <= tol;
        case LimitDescriptor::Kind::Brownian:
            return std::abs(a.p_plus - b.p_plus) <= tol;
        case LimitDescriptor::Kind::Mixture: {
            if (a.components.size() != b.components.size()) return false;
            std::vector<bool> used(b.components.size(), false);
            for (const auto& [wa, da] : a.components) {
                bool found = false;
                for (size_t i = 0; i < b.components.size() && !found; ++i) {
                    if (used[i]) continue;
                    if (std::abs(b.components[i].first - wa) <= tol &&
                        approx_equal(da, b.components[i].second, tol)) {
                        used[i] = true;
                        found = true;
                    }
                }
                if (!found) return false;
            }
            return true;
        }
        case LimitDescriptor::Kind::Split: {
            if (!(a.split_root == b.split_root) || a.parts.size() != b.parts.size()) return false;
            for (size_t i = 0; i < a.parts.size(); ++i)
                if (!approx_equal(a.parts[i], b.parts[i], tol)) return false;
            return true;
        }
        case LimitDescriptor::Kind::Unsupported:
            return a.reason == b.reason;
    }
    return false;
}

namespace {

nlohmann::json descriptor_json(const LimitDescriptor& d) {
    nlohmann::json j;
    switch (d.kind) {
        case LimitDescriptor::Kind::X:
            j["kind"] = "x";
            j["p"] = {d.x.plus_left, d.x.plus_right, d.x.minus_left, d.x.minus_right};
            break;
        case LimitDescriptor::Kind::Brownian:
            j["kind"] = "brownian";
            j["p_plus"] = d.p_plus;
            break;
        case LimitDescriptor::Kind::Mixture: {
            j["kind"] = "mixture";
            j["components"] = nlohmann::json::array();
            for (const auto& [w, c] : d.components)
                j["components"].push_back({{"weight", w}, {"descriptor", descriptor_json(c)}});
            break;
        }
        case LimitDescriptor::Kind::Split: {
            j["kind"] = "split";
            j["root"] = format_permutation(d.split_root);
            j["parts"] = nlohmann::json::array();
            for (const auto& part : d.parts) j["parts"].push_back(descriptor_json(part));
            break;
        }
        case LimitDescriptor::Kind::Unsupported:
            j["kind"] = "unsupported";
            j["reason"] = d.reason;
            break;
    }
    return j;
}

LimitDescriptor descriptor_parse(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw parse_error("descriptor needs a string 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "x") {
        if (!j.contains("p") || !j["p"].is_array() || j["p"].size() != 4)
            throw parse_error("x descriptor needs a 4-entry 'p'");
        XQuadruple q;
        q.plus_left = j["p"][0].get<double>();
        q.plus_right = j["p"][1].get<double>();
        q.minus_left = j["p"][2].get<double>();
        q.minus_right = j["p"][3].get<double>();
        return LimitDescriptor::make_x(q);
    }
    if (kind == "brownian") {
        if (!j.contains("p_plus")) throw parse_error("brownian descriptor needs 'p_plus'");
        return LimitDescriptor::make_brownian(j["p_plus"].get<double>());
    }
    if (kind == "mixture") {
        if (!j.contains("components") || !j["components"].is_array())
            throw parse_error("mixture descriptor needs 'components'");
        std::vector<std::pair<double, LimitDescriptor>> comps;
        for (const auto& jc : j["components"]) {
            if (!jc.is_object() || !jc.contains("weight") || !jc.contains("descriptor"))
                throw parse_error("mixture component needs 'weight' and 'descriptor'");
            comps.emplace_back(jc["weight"].get<double>(), descriptor_parse(jc["descriptor"]));
        }
        return LimitDescriptor::make_mixture(std::move(comps));
    }
    if (kind == "split") {
        if (!j.contains("root") || !j.contains("parts") || !j["parts"].is_array())
            throw parse_error("split descriptor needs 'root' and 'parts'");
        std::vector<LimitDescriptor> parts;
        for (const auto& jp : j["parts"]) parts.push_back(descriptor_parse(jp));
        return LimitDescriptor::make_split(parse_permutation(j["root"].get<std::string>()),
                                           std::move(parts));
    }
    if (kind == "unsupported") {
        if (!j.contains("reason") || !j["reason"].is_string())
            throw parse_error("unsupported descriptor needs 'reason'");
        return LimitDescriptor::make_unsupported(j["reason"].get<std::string>());
    }
    throw parse_error("unknown descriptor kind: " + kind);
}

void flatten_into(double w, const LimitDescriptor& d,
                  std::vector<std::pair<double, LimitDescriptor>>& out) {
    if (d.kind == LimitDescriptor::Kind::Mixture) {
        for (const auto& [wi, di] : d.components) flatten_into(w * wi, di, out);
        return;
    }
    out.emplace_back(w, d);
}

// Normal form of a mixture: flatten nested mixtures, merge components equal
// within 1e-9, drop negligible weights, renormalize, unwrap singletons.
LimitDescriptor collapse_mixture(const std::vector<std::pair<double, LimitDescriptor>>& comps) {
    std::vector<std::pair<double, LimitDescriptor>> flat;
    for (const auto& [w, d] : comps) flatten_into(w, d, flat);
    std::vector<std::pair<double, LimitDescriptor>> merged;
    for (auto& [w, d] : flat) {
        bool hit = false;
        for (auto& [mw, md] : merged)
            if (approx_equal(md, d, 1e-9)) {
                mw += w;
                hit = true;
                break;
            }
        if (!hit) merged.emplace_back(w, std::move(d));
    }
    double total = 0;
    std::erase_if(merged, [](const auto& c) { return c.first < 1e-12; });
    for (const auto& [w, d] : merged) total += w;
    if (merged.empty() || !(total > 0))
        return LimitDescriptor::make_unsupported("degenerate_scc");
    for (auto& [w, d] : merged) w /= total;
    if (merged.size() == 1) return merged.front().second;
    return LimitDescriptor::make_mixture(std::move(merged));
}

}  // namespace

std::string descriptor_to_json(const LimitDescriptor& d) { return descriptor_json(d).dump(2); }

LimitDescriptor descriptor_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad descriptor document: ") + e.what());
    }
    return descriptor_parse(j);
}

std::map<int, std::map<int, double>> asymptotic_check(const TreeSpec& spec,
                                                      const AsymptoticConstants& constants,
                                                      const std::vector<TruncatedSeries>& series,
                                                      const std::vector<int>& orders) {
    std::map<int, std::map<int, double>> out;
    if (constants.kind == AsymptoticConstants::Kind::None) return out;
    const double rho = constants.rho;
    for (int f = 0; f < spec.size(); ++f) {
        if (f >= static_cast<int>(constants.coef.size()) || !std::isfinite(constants.coef[f])) continue;
        const double c = constants.coef[f];
        if (!(std::abs(c) > 0)) continue;
        for (int n : orders) {
            if (f >= static_cast<int>(series.size()) || n > series[f].order() || n < 1) continue;
            const double actual = series[f].at(n).convert_to<double>();
            double pred = 0;
            switch (constants.kind) {
                case AsymptoticConstants::Kind::Polar:
                    pred = c * std::pow(rho, -(n + 1));
                    break;
                case AsymptoticConstants::Kind::Sqrt:
                    pred = c * std::sqrt(rho) * std::pow(rho, -n) * std::pow(double(n), -1.5) /
                           (2 * std::sqrt(std::numbers::pi));
                    break;
                case AsymptoticConstants::Kind::DoublePole:
                    pred = c * (n + 1) * std::pow(rho, -(n + 2));
                    break;
                case AsymptoticConstants::Kind::None:
                    break;
            }
            if (pred != 0) out[f][n] = actual / pred;
        }
    }
    return out;
}

namespace {

enum class FamKind { None, Pole1, Sqrt, Pole2, Unsupported };

struct Resolution {
    std::vector<FamKind> kind;
    std::vector<double> coef;
    std::vector<LimitDescriptor> desc;
};

// Linear resolution through one critical component: solve against the
// component resolvent and push the singular weights of the external critical
// dependencies through it. Works identically for simple-pole and square-root
// dependencies; only the meaning of `coef` differs.
void resolvent_propagate(const TreeSpec& spec, const std::vector<int>& scc,
                         const std::vector<int>& ext, const std::vector<double>& values,
                         Resolution& res, FamKind out_kind, std::vector<std::string>& notes) {
    const int m = static_cast<int>(scc.size());
    std::vector<int> pos(spec.size(), -1);
    for (int a = 0; a < m; ++a) pos[scc[a]] = a;

    Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(m, m);
    for (int a = 0; a < m; ++a)
        for (const auto& p : spec.family(scc[a]).productions)
            for (int s = 0; s < static_cast<int>(p.children.size()); ++s)
                if (pos[p.children[s]] >= 0) ms(a, pos[p.children[s]]) += prod_skip(p, values, s);

    double radius_ms = 0;
    if (m > 1 || ms(0, 0) > 0) radius_ms = perron(ms).eigenvalue;
    if (radius_ms >= 1 - 1e-9) {
        for (int i : scc) {
            res.kind[i] = FamKind::Unsupported;
            res.desc[i] = LimitDescriptor::make_unsupported("degenerate_scc");
        }
        notes.push_back("component resolvent is singular at the dominant point");
        return;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - ms);

    std::vector<Eigen::VectorXd> w;
    for (int j : ext) {
        Eigen::VectorXd q = Eigen::VectorXd::Zero(m);
        for (int a = 0; a < m; ++a)
            for (const auto& p : spec.family(scc[a]).productions)
                for (int s = 0; s < static_cast<int>(p.children.size()); ++s)
                    if (p.children[s] == j) q(a) += res.coef[j] * prod_skip(p, values, s);
        w.push_back(lu.solve(q));
    }
    for (int a = 0; a < m; ++a) {
        double total = 0;
        for (const auto& col : w) total += col(a);
        if (!(total > 0)) {
            res.kind[scc[a]] = FamKind::Unsupported;
            res.desc[scc[a]] = LimitDescriptor::make_unsupported("degenerate_scc");
            continue;
        }
        std::vector<std::pair<double, LimitDescriptor>> comps;
        for (size_t k = 0; k < ext.size(); ++k)
            comps.emplace_back(w[k](a) / total, res.desc[ext[k]]);
        res.kind[scc[a]] = out_kind;
        res.coef[scc[a]] = total;
        res.desc[scc[a]] = collapse_mixture(comps);
    }
}

}  // namespace

AnalysisReport analyze(const TreeSpec& spec0, int target0) {
    if (target0 < 0 || target0 >= spec0.size())
        throw validation_error("target family index out of range");
    if (!spec0.infinite()[target0])
        throw validation_error("target family is finite; there is no limit shape to analyze");

    const std::vector<int> closure = dependency_closure(spec0, {target0});
    const TreeSpec spec = restrict(spec0, closure);
    AnalysisReport rep;
    rep.target = static_cast<int>(std::lower_bound(closure.begin(), closure.end(), target0) -
                                  closure.begin());
    for (const auto& f : spec.families()) rep.family_names.push_back(f.name);

    rep.radius = find_radius(spec);
    rep.critical = classify(spec, rep.radius);
    const double rho = rep.radius.rho;
    const int n = spec.size();
    if (rep.critical.ambiguous)
        rep.notes.push_back("families with radius inside the ambiguity band; criticality split is fragile");
    rep.notes.push_back(rep.critical.strongly_connected
                            ? "critical graph is strongly connected"
                            : "critical graph has " + std::to_string(rep.critical.critical_sccs.size()) +
                                  " components; resolved componentwise");

    std::vector<bool> is_crit(n, false);
    for (int i : rep.critical.critical) is_crit[i] = true;

    std::vector<double> values(n, kNaN), derivs(n, kNaN);
    std::vector<int> sub;
    for (int i = 0; i < n; ++i)
        if (!is_crit[i]) sub.push_back(i);
    if (!sub.empty()) {
        EvalOptions opts;
        opts.tol = 1e-14;
        const Evaluation ev = evaluate_subset(spec, sub, rho, opts);
        for (int i : sub) {
            values[i] = ev.values[i];
            derivs[i] = ev.derivatives[i];
        }
    }

    Resolution res;
    res.kind.assign(n, FamKind::None);
    res.coef.assign(n, kNaN);
    res.desc.assign(n, LimitDescriptor{});

    for (const auto& scc : rep.critical.critical_sccs) {
        std::vector<bool> in_scc(n, false);
        for (int i : scc) in_scc[i] = true;

        std::set<int> ext_set;
        bool self_branching = false;
        int max_deg = 0;
        for (int a : scc) {
            for (const auto& p : spec.family(a).productions) {
                int own = 0, deg = 0;
                for (int c : p.children) {
                    own += in_scc[c] ? 1 : 0;
                    deg += is_crit[c] ? 1 : 0;
                    if (is_crit[c] && !in_scc[c]) ext_set.insert(c);
                }
                self_branching = self_branching || own >= 2;
                max_deg = std::max(max_deg, deg);
            }
        }
        const std::vector<int> ext(ext_set.begin(), ext_set.end());

        auto mark_unsupported = [&](const std::string& reason) {
            for (int i : scc) {
                res.kind[i] = FamKind::Unsupported;
                res.desc[i] = LimitDescriptor::make_unsupported(reason);
            }
        };

        if (ext.empty()) {
            if (self_branching) {
                // Square-root component: finite critical values come from the
                // radius solve, with the series fit as fallback.
                const SccRadius* entry = nullptr;
                for (const auto& s : rep.radius.sccs)
                    if (s.members == scc) entry = &s;
                if (entry && entry->kind == SccKind::Fold && !entry->values_at_rho.empty()) {
                    for (int i : scc) values[i] = entry->values_at_rho[i];
                } else {
                    const SqrtFit fit = sqrt_fit(spec, scc, rho);
                    for (int i : scc) values[i] = fit.value_at_rho[i];
                    rep.notes.push_back("critical values of a branching component recovered by series fit");
                }
                const BranchingParameters bp = branching_parameters(spec, scc, values, derivs, rho);
                if (std::abs(bp.spectral.eigenvalue - 1) > 1e-6)
                    rep.notes.push_back("branching component eigenvalue drifts from 1 by " +
                                        std::to_string(std::abs(bp.spectral.eigenvalue - 1)));
                for (int i : scc) {
                    res.kind[i] = FamKind::Sqrt;
                    res.coef[i] = bp.sqrt_coef[i];
                    res.desc[i] = LimitDescriptor::make_brownian(bp.p_plus);
                }
                if (in_scc[rep.target]) {
                    rep.branching = bp;
                    rep.spectral = bp.spectral;
                }
            } else {
                // Simple-pole component: every companion of the critical child
                // is subcritical.
                const LinearParameters lp = linear_parameters(spec, scc, values, derivs, rho);
                if (std::abs(lp.spectral.eigenvalue - 1) > 1e-6)
                    rep.notes.push_back("linear component eigenvalue drifts from 1 by " +
                                        std::to_string(std::abs(lp.spectral.eigenvalue - 1)));
                for (int i : scc) {
                    res.kind[i] = FamKind::Pole1;
                    res.coef[i] = lp.residue[i];
                    res.desc[i] = LimitDescriptor::make_x(lp.p);
                }
                if (in_scc[rep.target]) {
                    rep.linear = lp;
                    rep.spectral = lp.spectral;
                }
            }
            continue;
        }

        bool any_unsupported = false, any_pole1 = false, any_sqrt = false, any_pole2 = false;
        std::string first_reason;
        for (int j : ext) {
            switch (res.kind[j]) {
                case FamKind::Pole1: any_pole1 = true; break;
                case FamKind::Sqrt: any_sqrt = true; break;
                case FamKind::Pole2: any_pole2 = true; break;
                case FamKind::Unsupported:
                    any_unsupported = true;
                    if (first_reason.empty()) first_reason = res.desc[j].reason;
                    break;
                case FamKind::None: any_unsupported = true; break;
            }
        }
        if (any_unsupported) {
            mark_unsupported(first_reason.empty() ? "degenerate_scc" : first_reason);
            continue;
        }
        if (any_pole1 && any_sqrt) {
            mark_unsupported("mixed_singularity_orders");
            continue;
        }
        if (any_pole2 && any_sqrt) {
            mark_unsupported("mixed_singularity_orders");
            continue;
        }
        if (any_pole2) {
            mark_unsupported("higher_order_pole_dependency");
            continue;
        }

        if (any_sqrt) {
            if (self_branching) {
                mark_unsupported("self_branching_with_critical_deps");
                continue;
            }
            // The component stays finite at the dominant point; solve its
            // values first (linear in its own variables), then push the
            // square-root weights through the resolvent.
            const int m = static_cast<int>(scc.size());
            std::vector<int> pos(n, -1);
            for (int a = 0; a < m; ++a) pos[scc[a]] = a;
            Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(m, m);
            Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
            for (int a = 0; a < m; ++a) {
                c(a) = spec.family(scc[a]).leaf ? rho : 0;
                for (const auto& p : spec.family(scc[a]).productions) {
                    int own_pos = -1;
                    for (int s = 0; s < static_cast<int>(p.children.size()); ++s)
                        if (pos[p.children[s]] >= 0) own_pos = s;
                    if (own_pos < 0)
                        c(a) += prod_skip(p, values, -1);
                    else
                        ms(a, pos[p.children[own_pos]]) += prod_skip(p, values, own_pos);
                }
            }
            double radius_ms = 0;
            if (m > 1 || ms(0, 0) > 0) radius_ms = perron(ms).eigenvalue;
            if (radius_ms >= 1 - 1e-9) {
                mark_unsupported("degenerate_scc");
                continue;
            }
            const Eigen::VectorXd y =
                Eigen::FullPivLU<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(m, m) - ms).solve(c);
            for (int a = 0; a < m; ++a) values[scc[a]] = y(a);
            resolvent_propagate(spec, scc, ext, values, res, FamKind::Sqrt, rep.notes);
            continue;
        }

        // All external dependencies carry simple poles.
        if (max_deg <= 1) {
            resolvent_propagate(spec, scc, ext, values, res, FamKind::Pole1, rep.notes);
            continue;
        }

        // A product of singular dependencies sharpens the pole. The supported
        // shape is one acyclic family whose unique top-degree production is a
        // sign root with two simple-pole children.
        const bool cyclic = [&] {
            for (int a : scc)
                for (const auto& p : spec.family(a).productions)
                    for (int ch : p.children)
                        if (in_scc[ch]) return true;
            return false;
        }();
        if (cyclic || scc.size() > 1) {
            mark_unsupported("unsupported_split_shape");
            continue;
        }
        const int fam = scc[0];
        std::vector<const Production*> top;
        for (const auto& p : spec.family(fam).productions) {
            int deg = 0;
            for (int ch : p.children) deg += is_crit[ch] ? 1 : 0;
            if (deg == max_deg) top.push_back(&p);
        }
        if (top.size() != 1) {
            mark_unsupported("nonmonomial_max_degree");
            continue;
        }
        const Production& p = *top.front();
        if (max_deg != 2 || p.root.size() != 2) {
            mark_unsupported("unsupported_split_shape");
            continue;
        }
        const int left = p.children[0], right = p.children[1];
        res.kind[fam] = FamKind::Pole2;
        res.coef[fam] = res.coef[left] * res.coef[right];
        res.desc[fam] =
            LimitDescriptor::make_split(p.root, {res.desc[left], res.desc[right]});
    }

    rep.descriptor = res.desc[rep.target];
    switch (res.kind[rep.target]) {
        case FamKind::Pole1: rep.constants.kind = AsymptoticConstants::Kind::Polar; break;
        case FamKind::Sqrt: rep.constants.kind = AsymptoticConstants::Kind::Sqrt; break;
        case FamKind::Pole2: rep.constants.kind = AsymptoticConstants::Kind::DoublePole; break;
        default: rep.constants.kind = AsymptoticConstants::Kind::None; break;
    }
    rep.constants.rho = rho;
    rep.constants.coef.assign(n, kNaN);
    for (int i = 0; i < n; ++i)
        if (res.kind[i] == res.kind[rep.target]) rep.constants.coef[i] = res.coef[i];

    rep.values_at_rho = values;
    rep.periodicity = aperiodicity(expand(spec, 64)[rep.target]);
    return rep;
}

LimitDescriptor resolve_limit(const TreeSpec& spec, int target_family) {
    return analyze(spec, target_family).descriptor;
}

}  // namespace permclass

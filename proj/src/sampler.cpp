#include "permclass/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "permclass/errors.hpp"
#include "permclass/numeric.hpp"

namespace permclass {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_size(const TreeSpec& spec, int target, double z) {
    const Evaluation ev = evaluate(spec, z);
    return z * ev.derivatives[target] / ev.values[target];
}

}  // namespace

BoltzmannControl tune_control(const TreeSpec& spec, int target, double size_goal) {
    if (target < 0 || target >= spec.size())
        throw validation_error("target family index out of range");
    if (!(size_goal >= 1)) throw validation_error("size goal must be at least 1");

    const std::vector<int> closure = dependency_closure(spec, {target});
    const TreeSpec rspec = restrict(spec, closure);
    const int rt = static_cast<int>(std::lower_bound(closure.begin(), closure.end(), target) -
                                    closure.begin());
    const AnalysisReport rep = analyze(spec, target);
    const double rho = rep.radius.rho;

    BoltzmannControl c;
    c.values.assign(spec.size(), kNaN);

    if (rep.constants.kind == AsymptoticConstants::Kind::Sqrt) {
        // Heavy-tailed size law: the sampler runs at the dominant point.
        c.singular = true;
        c.x = rho;
        c.expected_size = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < closure.size(); ++i) c.values[closure[i]] = rep.values_at_rho[i];
        for (int i : closure)
            if (!std::isfinite(c.values[i]))
                throw validation_error("family " + spec.family(i).name +
                                       " diverges at the sampling point");
        return c;
    }

    // March toward the radius until the mean size clears the goal, then
    // bisect. An evaluation that no longer converges is already far past any
    // practical goal, so it counts as an upper point.
    double lo = 0, hi = -1;
    for (int k = 1; k <= 60 && hi < 0; ++k) {
        const double x = rho * (1 - std::pow(0.5, k));
        try {
            if (mean_size(rspec, rt, x) >= size_goal)
                hi = x;
            else
                lo = x;
        } catch (const Error&) {
            hi = x;
        }
    }
    if (hi < 0) throw validation_error("mean size never reaches the goal below the radius");
    double best = -1;
    for (int it = 0; it < 100 && hi - lo > rho * 1e-12; ++it) {
        const double mid = (lo + hi) / 2;
        double e;
        try {
            e = mean_size(rspec, rt, mid);
        } catch (const Error&) {
            hi = mid;
            continue;
        }
        if (e >= size_goal) {
            hi = mid;
            best = mid;
            if (e <= size_goal * 1.001) break;
        } else {
            lo = mid;
            if (e >= size_goal * 0.999) { best = mid; break; }
        }
    }
    c.x = best > 0 ? best : lo;
    const Evaluation ev = evaluate(rspec, c.x);
    c.expected_size = c.x * ev.derivatives[rt] / ev.values[rt];
    for (size_t i = 0; i < closure.size(); ++i) c.values[closure[i]] = ev.values[i];
    return c;
}

Tree boltzmann_sample(const TreeSpec& spec, int target, const BoltzmannControl& control, int n,
                      Rng& rng, const SampleOptions& opts) {
    if (target < 0 || target >= spec.size())
        throw validation_error("target family index out of range");
    if (n < 1) throw validation_error("requested size must be positive");
    if (!(opts.window >= 0) || opts.window >= 1)
        throw validation_error("size window must lie in [0, 1)");
    if (opts.budget < 1) throw validation_error("attempt budget must be positive");
    if (!(control.x > 0)) throw validation_error("control point must be positive");

    struct Rule {
        bool valid = false;
        double leaf_w = 0;
        std::vector<double> weights;
        double total = 0;
    };
    std::vector<Rule> rules(spec.size());
    for (int i = 0; i < spec.size(); ++i) {
        if (!std::isfinite(control.values[i])) continue;
        Rule& r = rules[i];
        r.leaf_w = spec.family(i).leaf ? control.x : 0;
        r.total = r.leaf_w;
        for (const auto& p : spec.family(i).productions) {
            double w = 1;
            for (int ch : p.children) w *= control.values[ch];
            r.weights.push_back(w);
            r.total += w;
        }
        r.valid = std::isfinite(r.total) && r.total > 0;
    }
    if (!rules[target].valid)
        throw validation_error("control values do not cover the target family");

    const long hi_size = static_cast<long>(std::floor(n * (1 + opts.window) + 1e-9));
    const long lo_size = std::max<long>(1, static_cast<long>(std::ceil(n * (1 - opts.window) - 1e-9)));

    struct Frame {
        const Production* prod;
        std::vector<Tree> built;
    };

    auto attempt = [&]() -> std::optional<Tree> {
        long leaves = 0;
        std::vector<Frame> frames;
        int fam = target;
        for (;;) {
            const Rule& rule = rules[fam];
            if (!rule.valid) throw validation_error("family " + spec.family(fam).name +
                                                    " has no weight at the control point");
            double r = rng.uniform() * rule.total;
            if (r < rule.leaf_w) {
                if (++leaves > hi_size) return std::nullopt;
                Tree cur = Tree::leaf();
                for (;;) {
                    if (frames.empty()) return cur;
                    Frame& top = frames.back();
                    top.built.push_back(std::move(cur));
                    if (top.built.size() == top.prod->children.size()) {
                        cur = Tree(top.prod->root, std::move(top.built));
                        frames.pop_back();
                    } else {
                        fam = top.prod->children[top.built.size()];
                        break;
                    }
                }
            } else {
                r -= rule.leaf_w;
                size_t pi = 0;
                while (pi + 1 < rule.weights.size() && r >= rule.weights[pi]) r -= rule.weights[pi++];
                const Production& p = spec.family(fam).productions[pi];
                frames.push_back(Frame{&p, {}});
                fam = p.children[0];
            }
        }
    };

    for (long tries = 0; tries < opts.budget; ++tries) {
        std::optional<Tree> t = attempt();
        if (t && t->leaf_count() >= lo_size) return std::move(*t);
    }
    throw sampler_starved("no tree in the size window [" + std::to_string(lo_size) + ", " +
                          std::to_string(hi_size) + "] after " + std::to_string(opts.budget) +
                          " attempts");
}

std::vector<PermutonPoint> sample_x_permuton(const XQuadruple& p, int n, Rng& rng) {
    if (n < 0) throw validation_error("point count must be nonnegative");
    if (p.plus_left < 0 || p.plus_right < 0 || p.minus_left < 0 || p.minus_right < 0 ||
        std::abs(p.sum() - 1) > 1e-9)
        throw validation_error("corner weights must be a probability vector");

    const double a = p.plus_left + p.minus_left;
    const double b = p.plus_left + p.minus_right;
    // Corners in the canonical order (plus/left, plus/right, minus/left,
    // minus/right); segments run from the corner to the crossing (a, b).
    const std::array<std::array<double, 2>, 4> corner = {{{0, 0}, {1, 1}, {0, 1}, {1, 0}}};
    const std::array<double, 4> w = {p.plus_left, p.plus_right, p.minus_left, p.minus_right};

    std::vector<PermutonPoint> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        double r = rng.uniform();
        int c = 0;
        while (c < 3 && r >= w[c]) r -= w[c++];
        const double u = rng.uniform();
        pts.push_back({(1 - u) * corner[c][0] + u * a, (1 - u) * corner[c][1] + u * b});
    }
    return pts;
}

Permutation pattern_of_points(std::vector<PermutonPoint> pts) {
    const int k = static_cast<int>(pts.size());
    if (k == 0) throw validation_error("pattern of an empty point cloud");
    std::vector<int> byx(k), byy(k);
    for (int i = 0; i < k; ++i) byx[i] = byy[i] = i;
    std::sort(byx.begin(), byx.end(), [&](int i, int j) {
        return pts[i].x != pts[j].x ? pts[i].x < pts[j].x : pts[i].y < pts[j].y;
    });
    std::sort(byy.begin(), byy.end(), [&](int i, int j) {
        return pts[i].y != pts[j].y ? pts[i].y < pts[j].y : pts[i].x < pts[j].x;
    });
    std::vector<int> rank(k);
    for (int r = 0; r < k; ++r) rank[byy[r]] = r + 1;
    std::vector<int> one_line(k);
    for (int j = 0; j < k; ++j) one_line[j] = rank[byx[j]];
    return Permutation(std::move(one_line));
}

Permutation sample_brownian_pattern(double p_plus, int k, Rng& rng) {
    if (!(p_plus >= 0 && p_plus <= 1)) throw validation_error("sign bias must lie in [0, 1]");
    if (k < 1) throw validation_error("pattern size must be positive");
    if (k == 1) return Permutation({1});

    // Remy growth: a uniform node (the edge above it) is split by a fresh
    // internal node, and the new leaf lands on a uniform side.
    std::vector<std::array<int, 2>> ch{{-1, -1}};
    std::vector<int> parent{-1};
    int root = 0;
    for (int j = 2; j <= k; ++j) {
        const int v = static_cast<int>(rng.below(ch.size()));
        const int side = static_cast<int>(rng.next() & 1);
        const int internal = static_cast<int>(ch.size());
        ch.push_back({-1, -1});
        parent.push_back(parent[v]);
        const int fresh = static_cast<int>(ch.size());
        ch.push_back({-1, -1});
        parent.push_back(internal);
        if (parent[internal] >= 0) {
            auto& slots = ch[parent[internal]];
            slots[slots[0] == v ? 0 : 1] = internal;
        } else {
            root = internal;
        }
        parent[v] = internal;
        ch[internal][side] = fresh;
        ch[internal][1 - side] = v;
    }

    const Permutation plus({1, 2}), minus({2, 1});
    std::vector<Permutation> label(ch.size());
    for (size_t v = 0; v < ch.size(); ++v)
        if (ch[v][0] >= 0) label[v] = rng.uniform() < p_plus ? plus : minus;

    std::vector<int> order, stack{root};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        order.push_back(v);
        if (ch[v][0] >= 0) {
            stack.push_back(ch[v][0]);
            stack.push_back(ch[v][1]);
        }
    }
    std::vector<Tree> built(ch.size());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        if (ch[v][0] >= 0) built[v] = Tree(label[v], {built[ch[v][0]], built[ch[v][1]]});
    }
    return perm_of(built[root]);
}

Permutation sample_pattern(const LimitDescriptor& d, int k, Rng& rng) {
    if (k < 1) throw validation_error("pattern size must be positive");
    switch (d.kind) {
        case LimitDescriptor::Kind::X:
            return pattern_of_points(sample_x_permuton(d.x, k, rng));
        case LimitDescriptor::Kind::Brownian:
            return sample_brownian_pattern(d.p_plus, k, rng);
        case LimitDescriptor::Kind::Mixture: {
            if (d.components.empty()) throw validation_error("mixture without components");
            double r = rng.uniform();
            size_t c = 0;
            while (c + 1 < d.components.size() && r >= d.components[c].first)
                r -= d.components[c++].first;
            return sample_pattern(d.components[c].second, k, rng);
        }
        case LimitDescriptor::Kind::Split: {
            const int r = static_cast<int>(d.parts.size());
            if (r < 1 || d.split_root.size() != r)
                throw validation_error("split arity does not match its root");
            // Block fractions are uniform on the simplex: r - 1 sorted cuts.
            std::vector<double> cuts(r - 1);
            for (auto& c : cuts) c = rng.uniform();
            std::sort(cuts.begin(), cuts.end());
            std::vector<int> count(r, 0);
            for (int i = 0; i < k; ++i) {
                const double u = rng.uniform();
                const int block = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), u) -
                                                   cuts.begin());
                ++count[block];
            }
            std::vector<int> live;  // 1-based root positions of nonempty blocks
            std::vector<Permutation> blocks;
            for (int i = 0; i < r; ++i) {
                if (count[i] == 0) continue;
                live.push_back(i + 1);
                blocks.push_back(sample_pattern(d.parts[i], count[i], rng));
            }
            return substitute(pattern_of(d.split_root, live), blocks);
        }
        case LimitDescriptor::Kind::Unsupported:
            throw validation_error("an unsupported limit has no sampling law");
    }
    throw validation_error("unreachable descriptor kind");
}

}  // namespace permclass

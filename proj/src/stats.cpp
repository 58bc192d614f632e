#include "permclass/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "permclass/errors.hpp"
#include "permclass/sampler.hpp"
#include "permclass/tree.hpp"

namespace permclass {

namespace {

PatternDistribution inexact() {
    PatternDistribution pd;
    pd.exact = false;
    return pd;
}

// Weak compositions of k into r parts, in lexicographic order.
void compositions(int k, int r, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (r == 1) {
        cur.push_back(k);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int first = 0; first <= k; ++first) {
        cur.push_back(first);
        compositions(k - first, r - 1, cur, out);
        cur.pop_back();
    }
}

}  // namespace

PatternDistribution descriptor_pattern_distribution(const LimitDescriptor& d, int k) {
    if (k < 1) throw validation_error("pattern size must be positive");
    switch (d.kind) {
        case LimitDescriptor::Kind::X: {
            if (k > 6) return inexact();
            PatternDistribution pd;
            pd.probs = caterpillar_perm_distribution(d.x, k);
            return pd;
        }
        case LimitDescriptor::Kind::Brownian: {
            if (k > 5) return inexact();
            PatternDistribution pd;
            pd.probs = binary_perm_distribution(d.p_plus, k);
            return pd;
        }
        case LimitDescriptor::Kind::Mixture: {
            PatternDistribution pd;
            for (const auto& [w, comp] : d.components) {
                const PatternDistribution sub = descriptor_pattern_distribution(comp, k);
                if (!sub.exact) return inexact();
                for (const auto& [perm, p] : sub.probs) pd.probs[perm] += w * p;
            }
            return pd;
        }
        case LimitDescriptor::Kind::Split: {
            const int r = static_cast<int>(d.parts.size());
            if (r < 1 || d.split_root.size() != r)
                throw validation_error("split arity does not match its root");
            if (r > 3 || k > 5) return inexact();

            // Part laws for every block size that can occur.
            std::vector<std::vector<PatternDistribution>> table(r);
            for (int i = 0; i < r; ++i) {
                table[i].resize(k + 1);
                for (int l = 1; l <= k; ++l) {
                    table[i][l] = descriptor_pattern_distribution(d.parts[i], l);
                    if (!table[i][l].exact) return inexact();
                }
            }

            std::vector<std::vector<int>> comps;
            std::vector<int> cur;
            compositions(k, r, cur, comps);
            const double unit = 1.0 / static_cast<double>(comps.size());

            PatternDistribution pd;
            for (const auto& comp : comps) {
                std::vector<int> live;
                for (int i = 0; i < r; ++i)
                    if (comp[i] > 0) live.push_back(i);
                std::vector<int> live_pos;
                for (int i : live) live_pos.push_back(i + 1);
                const Permutation rootp = pattern_of(d.split_root, live_pos);

                std::vector<Permutation> blocks(live.size());
                auto walk = [&](auto&& self, size_t idx, double acc) -> void {
                    if (idx == live.size()) {
                        pd.probs[substitute(rootp, blocks)] += unit * acc;
                        return;
                    }
                    for (const auto& [perm, p] : table[live[idx]][comp[live[idx]]].probs) {
                        blocks[idx] = perm;
                        self(self, idx + 1, acc * p);
                    }
                };
                walk(walk, 0, 1.0);
            }
            return pd;
        }
        case LimitDescriptor::Kind::Unsupported:
            throw validation_error("an unsupported limit has no pattern law");
    }
    throw validation_error("unreachable descriptor kind");
}

std::map<Permutation, double> monte_carlo_pattern_distribution(const LimitDescriptor& d, int k,
                                                               long samples, Rng& rng) {
    if (samples < 1) throw validation_error("sample count must be positive");
    std::map<Permutation, long> counts;
    for (long i = 0; i < samples; ++i) ++counts[sample_pattern(d, k, rng)];
    std::map<Permutation, double> out;
    for (const auto& [perm, c] : counts) out[perm] = double(c) / double(samples);
    return out;
}

std::map<Permutation, double> empirical_pattern_histogram(const std::vector<Permutation>& sample,
                                                          int k, int draws_per_perm, Rng& rng) {
    if (k < 1) throw validation_error("pattern size must be positive");
    if (draws_per_perm < 1) throw validation_error("draw count must be positive");
    if (sample.empty()) throw validation_error("empty sample");

    std::map<Permutation, long> counts;
    std::vector<int> pos(k);
    for (const auto& sigma : sample) {
        const int n = sigma.size();
        if (n < k)
            throw validation_error("sampled permutation smaller than the pattern size");
        for (int d = 0; d < draws_per_perm; ++d) {
            // Distinct positions by rejection; k is tiny next to n.
            for (;;) {
                for (int i = 0; i < k; ++i) pos[i] = 1 + static_cast<int>(rng.below(n));
                std::sort(pos.begin(), pos.end());
                if (std::adjacent_find(pos.begin(), pos.end()) == pos.end()) break;
            }
            ++counts[pattern_of(sigma, pos)];
        }
    }
    const double total = double(sample.size()) * draws_per_perm;
    std::map<Permutation, double> out;
    for (const auto& [perm, c] : counts) out[perm] = double(c) / total;
    return out;
}

double total_variation(const std::map<Permutation, double>& a,
                       const std::map<Permutation, double>& b) {
    double acc = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            acc += std::abs(ia->second);
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            acc += std::abs(ib->second);
            ++ib;
        } else {
            acc += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return acc / 2;
}

double chi_square_pvalue(const std::map<Permutation, long>& observed,
                         const std::map<Permutation, double>& expected, long total) {
    if (total < 1) throw validation_error("total count must be positive");
    for (const auto& [perm, c] : observed) {
        if (c == 0) continue;
        auto it = expected.find(perm);
        if (it == expected.end() || it->second <= 0) return 0.0;
    }
    double chi2 = 0;
    int cells = 0;
    for (const auto& [perm, p] : expected) {
        if (p <= 0) continue;
        ++cells;
        const auto it = observed.find(perm);
        const double obs = it == observed.end() ? 0.0 : double(it->second);
        const double exp = double(total) * p;
        chi2 += (obs - exp) * (obs - exp) / exp;
    }
    if (cells <= 1) return 1.0;
    return boost::math::gamma_q((cells - 1) / 2.0, chi2 / 2.0);
}

double ks_uniform_pvalue(std::vector<double> xs) {
    const int n = static_cast<int>(xs.size());
    if (n == 0) throw validation_error("empty sample");
    for (double x : xs)
        if (!(x >= 0 && x <= 1)) throw validation_error("sample values must lie in [0, 1]");
    std::sort(xs.begin(), xs.end());
    double d = 0;
    for (int i = 0; i < n; ++i) {
        d = std::max(d, (i + 1.0) / n - xs[i]);
        d = std::max(d, xs[i] - double(i) / n);
    }
    const double t = (std::sqrt(double(n)) + 0.12 + 0.11 / std::sqrt(double(n))) * d;
    double p = 0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * t * t);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

VerificationReport verify_sampler(const TreeSpec& spec, int target, int n, int count, int k,
                                  int draws, double threshold, std::uint64_t seed) {
    if (count < 1 || draws < 1) throw validation_error("counts must be positive");
    if (!(threshold > 0)) throw validation_error("threshold must be positive");

    const AnalysisReport rep = analyze(spec, target);
    VerificationReport vr;
    vr.k = k;
    vr.threshold = threshold;
    vr.descriptor = rep.descriptor;

    const BoltzmannControl ctl = tune_control(spec, target, n);
    Rng root(seed);
    Rng gen = root.fork(1);
    Rng pat = root.fork(2);
    Rng mc = root.fork(3);

    std::vector<Permutation> perms;
    perms.reserve(count);
    for (int i = 0; i < count; ++i)
        perms.push_back(perm_of(boltzmann_sample(spec, target, ctl, n, gen)));
    vr.sampled = count;

    const auto empirical = empirical_pattern_histogram(perms, k, draws, pat);
    vr.pattern_draws = static_cast<long>(count) * draws;

    const PatternDistribution ref = descriptor_pattern_distribution(rep.descriptor, k);
    vr.exact_reference = ref.exact;
    const auto& reference =
        ref.exact ? ref.probs : monte_carlo_pattern_distribution(rep.descriptor, k, 1'000'000, mc);
    vr.tv = total_variation(empirical, reference);
    vr.pass = vr.tv < threshold;
    return vr;
}

}  // namespace permclass

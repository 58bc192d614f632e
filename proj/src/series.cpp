#include "permclass/series.hpp"

#include <numeric>

#include "permclass/errors.hpp"

namespace permclass {

std::vector<TruncatedSeries> expand(const TreeSpec& spec, int N) {
    if (N < 1) throw validation_error("expansion order must be at least 1");
    const int n = spec.size();

    // Stage tables: production p with children k_1..k_d keeps the partial
    // products P_t = Y_{k_1}...Y_{k_{t+1}} for t = 1..d-1. Degree m of P_t
    // only involves degrees < m of the factors (valuations are >= 1), so one
    // sweep per degree closes the system without any fixed-point iteration.
    struct Stage { std::vector<BigInt> coeff; int left_stage; int right_family; };
    std::vector<std::vector<BigInt>> y(n, std::vector<BigInt>(N + 1));
    std::vector<Stage> stages;
    // Per family: list of final stage ids contributing to its series.
    std::vector<std::vector<int>> finals(n);
    // Map from (production, t) to stage id; left_stage = -1-k means "factor is
    // family k directly" (the t = 1 stage multiplies two bare families).
    for (int i = 0; i < n; ++i) {
        for (const auto& p : spec.family(i).productions) {
            const int d = static_cast<int>(p.children.size());
            int prev = -1 - p.children[0];
            for (int t = 1; t < d; ++t) {
                stages.push_back({std::vector<BigInt>(N + 1), prev, p.children[t]});
                prev = static_cast<int>(stages.size()) - 1;
            }
            finals[i].push_back(prev);
        }
    }

    for (int m = 1; m <= N; ++m) {
        // Convolve each stage at degree m from strictly smaller degrees.
        for (auto& st : stages) {
            BigInt acc = 0;
            const std::vector<BigInt>& right = y[st.right_family];
            if (st.left_stage < 0) {
                const std::vector<BigInt>& left = y[-1 - st.left_stage];
                for (int a = 1; a < m; ++a)
                    if (!left[a].is_zero() && !right[m - a].is_zero()) acc += left[a] * right[m - a];
            } else {
                const std::vector<BigInt>& left = stages[st.left_stage].coeff;
                for (int a = 2; a < m; ++a)
                    if (!left[a].is_zero() && !right[m - a].is_zero()) acc += left[a] * right[m - a];
            }
            st.coeff[m] = std::move(acc);
        }
        for (int i = 0; i < n; ++i) {
            BigInt acc = (m == 1 && spec.family(i).leaf) ? 1 : 0;
            for (int sid : finals[i]) acc += stages[sid].coeff[m];
            y[i][m] = std::move(acc);
        }
    }

    std::vector<TruncatedSeries> out(n);
    for (int i = 0; i < n; ++i) out[i].coeff = std::move(y[i]);
    return out;
}

AperiodicityReport aperiodicity(const TruncatedSeries& series) {
    if (series.order() < 64) throw validation_error("periodicity check needs at least 64 coefficients");
    AperiodicityReport rep;
    int prev = -1;
    int g = 0;
    int support = 0;
    for (int m = 1; m <= series.order(); ++m) {
        if (series.at(m).is_zero()) continue;
        ++support;
        if (prev >= 0) g = std::gcd(g, m - prev);
        prev = m;
    }
    if (support < 2) {
        rep.verdict = Periodicity::Inconclusive;
        return rep;
    }
    rep.period = g;
    rep.verdict = g == 1 ? Periodicity::Aperiodic : Periodicity::PossiblyPeriodic;
    return rep;
}

}  // namespace permclass

#pragma once

#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "permclass/spec.hpp"

namespace permclass {

using BigInt = boost::multiprecision::cpp_int;

// Coefficients [z^0 .. z^N] of a generating series; coefficient 0 is always 0
// here because every tree has at least one leaf.
struct TruncatedSeries {
    std::vector<BigInt> coeff;

    int order() const { return static_cast<int>(coeff.size()) - 1; }
    const BigInt& at(int n) const { return coeff[n]; }
};

// Exact expansion of the family series up to and including z^N, one series
// per family, by degree-synchronous iteration of the system. Cost is
// O(total production arity * N^2) big-integer multiplications.
std::vector<TruncatedSeries> expand(const TreeSpec& spec, int N);

enum class Periodicity { Aperiodic, PossiblyPeriodic, Inconclusive };

struct AperiodicityReport {
    Periodicity verdict = Periodicity::Inconclusive;
    int period = 1;  // gcd of support gaps when PossiblyPeriodic
};

// Heuristic periodicity check on the support of a series expanded to at least
// 64 terms: gcd of the gaps between consecutive nonzero coefficients. A gcd
// of 1 proves aperiodicity; a gcd d > 1 over a window can only ever say
// "possibly periodic with period d"; fewer than two support points is
// inconclusive.
AperiodicityReport aperiodicity(const TruncatedSeries& series);

}  // namespace permclass

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "permclass/analyzer.hpp"
#include "permclass/rng.hpp"
#include "permclass/spec.hpp"

namespace permclass {

struct PatternDistribution {
    std::map<Permutation, double> probs;
    bool exact = true;  // false: enumeration is out of reach, use Monte Carlo
};

// Law of the k-point pattern under the limit the descriptor denotes. Exact
// enumeration is available for X up to k = 6, Brownian up to k = 5, splits
// with at most 3 parts up to k = 5, and mixtures of exact components; beyond
// that the returned distribution is empty and flagged inexact.
PatternDistribution descriptor_pattern_distribution(const LimitDescriptor& d, int k);

// Monte Carlo stand-in for the exact law.
std::map<Permutation, double> monte_carlo_pattern_distribution(const LimitDescriptor& d, int k,
                                                               long samples, Rng& rng);

// Empirical k-point pattern frequencies: for each permutation, draws random
// k-subsets of positions and tallies the induced patterns.
std::map<Permutation, double> empirical_pattern_histogram(const std::vector<Permutation>& sample,
                                                          int k, int draws_per_perm, Rng& rng);

double total_variation(const std::map<Permutation, double>& a,
                       const std::map<Permutation, double>& b);

// Pearson chi-square upper tail against the expected law; categories with
// zero expected mass but positive counts force a zero p-value.
double chi_square_pvalue(const std::map<Permutation, long>& observed,
                         const std::map<Permutation, double>& expected, long total);

// Kolmogorov-Smirnov test of uniformity on [0, 1] (asymptotic tail).
double ks_uniform_pvalue(std::vector<double> xs);

struct VerificationReport {
    int k = 0;
    int sampled = 0;          // permutations drawn
    long pattern_draws = 0;   // total k-subset draws
    bool exact_reference = true;
    double tv = 0;
    double threshold = 0;
    bool pass = false;
    LimitDescriptor descriptor;
};

// End-to-end check of the Boltzmann sampler against the predicted limit:
// draws `count` permutations of size about n from the target family, tallies
// k-point patterns with `draws` subsets each, and compares in total variation
// against the descriptor's pattern law.
VerificationReport verify_sampler(const TreeSpec& spec, int target, int n, int count, int k,
                                  int draws, double threshold, std::uint64_t seed);

}  // namespace permclass

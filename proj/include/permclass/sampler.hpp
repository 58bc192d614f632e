#pragma once

#include <vector>

#include "permclass/analyzer.hpp"
#include "permclass/rng.hpp"
#include "permclass/spec.hpp"
#include "permclass/tree.hpp"

namespace permclass {

struct BoltzmannControl {
    double x = 0;
    bool singular = false;       // tuned at the dominant point (square-root targets)
    double expected_size = 0;    // mean size at x; meaningless when singular
    std::vector<double> values;  // T_i(x), NaN outside the target's closure
};

// Control point for Boltzmann sampling of the target family. Square-root
// targets sample at the dominant point, where the size law has a heavy tail
// covering every window; otherwise the mean size is matched to size_goal by
// bisection below the radius.
BoltzmannControl tune_control(const TreeSpec& spec, int target, double size_goal);

struct SampleOptions {
    double window = 0.1;        // accept sizes within n*(1 +- window)
    long budget = 1'000'000;    // attempts before SamplerStarved
};

// One tree from the Boltzmann law at control.x conditioned on the size
// window around n. Attempts abort as soon as they overshoot the window, so a
// single call costs O(budget * n) in the worst case. Throws SamplerStarved
// when the budget runs out.
Tree boltzmann_sample(const TreeSpec& spec, int target, const BoltzmannControl& control, int n,
                      Rng& rng, const SampleOptions& opts = {});

struct PermutonPoint {
    double x = 0, y = 0;
};

// n independent points of the X permuton with the given corner weights: pick
// a corner, then interpolate a uniform fraction of the way to the crossing
// point (a, b) with a = mass of the left corners, b = mass of the bottom ones.
std::vector<PermutonPoint> sample_x_permuton(const XQuadruple& p, int n, Rng& rng);

// Pattern of a point cloud: order by x, then rank the y values.
Permutation pattern_of_points(std::vector<PermutonPoint> pts);

// Uniform binary tree shape with k leaves (Remy growth), signs i.i.d. plus
// with probability p_plus; returns perm() of the signed tree. This is the
// k-point pattern law of the biased Brownian limit.
Permutation sample_brownian_pattern(double p_plus, int k, Rng& rng);

// One k-point pattern drawn from the limit the descriptor denotes.
Permutation sample_pattern(const LimitDescriptor& d, int k, Rng& rng);

}  // namespace permclass

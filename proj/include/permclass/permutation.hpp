#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace permclass {

// A permutation of {1..n} in one-line notation. Positions and values are both
// 1-based throughout; vals_[i-1] is the value at position i. Size 0 is allowed
// only as the default-constructed sentinel so the type works in containers.
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<int> one_line);

    static Permutation identity(int n);

    int size() const { return static_cast<int>(vals_.size()); }
    bool empty() const { return vals_.empty(); }

    // Value at a 1-based position.
    int operator()(int pos) const { return vals_[pos - 1]; }

    const std::vector<int>& values() const { return vals_; }

    Permutation inverse() const;
    Permutation reverse() const;
    Permutation complement() const;

    friend bool operator==(const Permutation&, const Permutation&) = default;
    friend std::strong_ordering operator<=>(const Permutation& a, const Permutation& b) {
        if (a.size() != b.size()) return a.size() <=> b.size();
        return a.vals_ <=> b.vals_;
    }

private:
    std::vector<int> vals_;
};

// Pattern of sigma at a set of positions, given sorted ascending and 1-based.
// Throws InvalidPositions on duplicates, out-of-range or unsorted input.
Permutation pattern_of(const Permutation& sigma, const std::vector<int>& positions);

// Classical containment: does sigma contain pi as a pattern? Backtracking over
// positions with a monotone feasibility cut; fine for the sizes used here.
bool contains(const Permutation& sigma, const Permutation& pi);

// A permutation is simple when its only intervals (blocks of contiguous
// positions mapping onto contiguous values) are the singletons and the whole
// thing. Sizes 1 and 2 count as simple; there are none of size 3.
bool is_simple(const Permutation& sigma);

// Inflation theta[blocks[0], ..., blocks[d-1]]; every block must be nonempty
// and blocks.size() must equal theta.size(). Throws ArityError otherwise.
Permutation substitute(const Permutation& theta, const std::vector<Permutation>& blocks);

// Text forms: a digit string for n <= 9 ("2413"), space-separated values
// otherwise ("11 2 9 ..."). parse accepts either, and rejects anything that is
// not a permutation of 1..n.
Permutation parse_permutation(std::string_view text);
std::string format_permutation(const Permutation& sigma);

}  // namespace permclass

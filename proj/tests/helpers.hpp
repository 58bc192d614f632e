#pragma once

// Shared test utilities: fixture loading, brute-force oracles, and random
// tree generation.  The oracles here are deliberately naive; tests compare
// the library's optimized implementations against them on small inputs.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "permclass/permutation.hpp"
#include "permclass/rng.hpp"
#include "permclass/spec.hpp"
#include "permclass/tree.hpp"

namespace testutil {

inline std::string fixture_path(const std::string& name) {
    return std::string(FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing fixture: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline permclass::TreeSpec load_fixture(const std::string& name) {
    return permclass::TreeSpec::from_json_text(read_file(fixture_path(name)));
}

// Rank-based pattern oracle: the pattern of values at the given positions,
// computed by counting smaller entries instead of sorting.
inline permclass::Permutation
naive_pattern(const permclass::Permutation& p, const std::vector<int>& positions) {
    std::vector<int> picked;
    picked.reserve(positions.size());
    for (int pos : positions) picked.push_back(p(pos));
    std::vector<int> out(picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i) {
        int rank = 1;
        for (std::size_t j = 0; j < picked.size(); ++j)
            if (picked[j] < picked[i]) ++rank;
        out[i] = rank;
    }
    return permclass::Permutation(out);
}

// Containment oracle: try every position subset of matching size.
inline bool naive_contains(const permclass::Permutation& haystack,
                           const permclass::Permutation& needle) {
    const int n = haystack.size(), k = needle.size();
    if (k > n) return false;
    std::vector<int> idx(k);
    // Walks k-subsets of {1,..,n} in lexicographic order.
    for (int i = 0; i < k; ++i) idx[i] = i + 1;
    while (true) {
        if (naive_pattern(haystack, idx) == needle) return true;
        int i = k;
        while (i > 0 && idx[i - 1] == n - k + i) --i;
        if (i == 0) return false;
        ++idx[i - 1];
        for (int j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// Simplicity oracle: a proper interval is a contiguous window whose values
// form a contiguous range.
inline bool naive_is_simple(const permclass::Permutation& p) {
    const int n = p.size();
    if (n <= 2) return n > 0;
    for (int lo = 1; lo <= n; ++lo) {
        int mn = p(lo), mx = p(lo);
        for (int hi = lo + 1; hi <= n; ++hi) {
            mn = std::min(mn, p(hi));
            mx = std::max(mx, p(hi));
            int len = hi - lo + 1;
            if (len == n) continue;
            if (mx - mn + 1 == len) return false;
        }
    }
    return true;
}

// Counts permutations of each size up to nmax avoiding the given pattern,
// by direct enumeration.  Only usable for small nmax.
inline std::vector<long long>
count_avoiders(const permclass::Permutation& pattern, int nmax) {
    std::vector<long long> counts(nmax + 1, 0);
    counts[0] = 1;
    for (int n = 1; n <= nmax; ++n) {
        std::vector<int> vals(n);
        for (int i = 0; i < n; ++i) vals[i] = i + 1;
        long long c = 0;
        do {
            permclass::Permutation p(vals);
            if (!naive_contains(p, pattern)) ++c;
        } while (std::next_permutation(vals.begin(), vals.end()));
        counts[n] = c;
    }
    return counts;
}

// Random standard tree with at most max_leaves leaves.  Sign nodes respect
// the first-child restriction; simple labels are drawn from the size-4
// simples or rejection-sampled at sizes 5 and 6.
inline permclass::Tree random_standard_tree(permclass::Rng& rng, int max_leaves) {
    using permclass::Permutation;
    using permclass::Tree;

    struct Gen {
        permclass::Rng& rng;
        int budget;

        Permutation random_simple() {
            std::uint64_t pick = rng.below(4);
            if (pick == 0) return permclass::parse_permutation("2413");
            if (pick == 1) return permclass::parse_permutation("3142");
            int n = pick == 2 ? 5 : 6;
            std::vector<int> vals(n);
            for (int i = 0; i < n; ++i) vals[i] = i + 1;
            while (true) {
                for (int i = n - 1; i > 0; --i)
                    std::swap(vals[i], vals[rng.below(i + 1)]);
                Permutation p(vals);
                if (naive_is_simple(p)) return p;
            }
        }

        // forbid: +1 under a plus parent's first slot, -1 under a minus
        // parent's first slot, 0 anywhere else.
        Tree gen(int forbid) {
            if (budget <= 1 || rng.below(100) < 35) {
                if (budget > 0) --budget;
                return Tree::leaf();
            }
            std::uint64_t kind = rng.below(3);
            if (kind < 2) {
                bool plus = kind == 0;
                if ((forbid == 1 && plus) || (forbid == -1 && !plus)) plus = !plus;
                Tree left = gen(plus ? 1 : -1);
                Tree right = gen(0);
                Permutation label = permclass::parse_permutation(plus ? "12" : "21");
                std::vector<Tree> kids;
                kids.push_back(std::move(left));
                kids.push_back(std::move(right));
                return Tree(label, std::move(kids));
            }
            Permutation label = random_simple();
            std::vector<Tree> children;
            children.reserve(label.size());
            for (int i = 0; i < label.size(); ++i) children.push_back(gen(0));
            return Tree(label, std::move(children));
        }
    };

    Gen g{rng, max_leaves};
    return g.gen(0);
}

// Uniformly random nonempty subset of {1,..,n}, sorted.
inline std::vector<int> random_subset(permclass::Rng& rng, int n) {
    std::vector<int> out;
    while (out.empty()) {
        out.clear();
        for (int i = 1; i <= n; ++i)
            if (rng.next() & 1) out.push_back(i);
    }
    return out;
}

}  // namespace testutil

#include "permclass/permutation.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "permclass/errors.hpp"

namespace permclass {

Permutation::Permutation(std::vector<int> one_line) : vals_(std::move(one_line)) {
    const int n = static_cast<int>(vals_.size());
    std::vector<char> seen(static_cast<size_t>(n) + 1, 0);
    for (int v : vals_) {
        if (v < 1 || v > n) throw invalid_permutation("value out of range in one-line notation");
        if (seen[v]) throw invalid_permutation("repeated value in one-line notation");
        seen[v] = 1;
    }
}

Permutation Permutation::identity(int n) {
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 1);
    return Permutation(std::move(v));
}

Permutation Permutation::inverse() const {
    std::vector<int> inv(vals_.size());
    for (int i = 0; i < size(); ++i) inv[vals_[i] - 1] = i + 1;
    return Permutation(std::move(inv));
}

Permutation Permutation::reverse() const {
    std::vector<int> rev(vals_.rbegin(), vals_.rend());
    return Permutation(std::move(rev));
}

Permutation Permutation::complement() const {
    std::vector<int> c(vals_.size());
    const int n = size();
    for (int i = 0; i < n; ++i) c[i] = n + 1 - vals_[i];
    return Permutation(std::move(c));
}

Permutation pattern_of(const Permutation& sigma, const std::vector<int>& positions) {
    const int n = sigma.size();
    const int k = static_cast<int>(positions.size());
    if (k == 0) throw invalid_positions("empty position set");
    for (int i = 0; i < k; ++i) {
        if (positions[i] < 1 || positions[i] > n) throw invalid_positions("position out of range");
        if (i > 0 && positions[i] <= positions[i - 1])
            throw invalid_positions("positions must be strictly increasing");
    }
    // Rank the selected values among themselves.
    std::vector<int> picked(k);
    for (int i = 0; i < k; ++i) picked[i] = sigma(positions[i]);
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return picked[a] < picked[b]; });
    std::vector<int> out(k);
    for (int r = 0; r < k; ++r) out[order[r]] = r + 1;
    return Permutation(std::move(out));
}

namespace {

// Occurrence search: place pi's positions left to right in sigma, keeping for
// each prefix the tightest value constraints. The value constraint for the
// next pick is determined by the already placed entries adjacent to pi's next
// value in rank order.
bool occurs_from(const Permutation& sigma, const Permutation& pi, std::vector<int>& chosen, int depth) {
    const int k = pi.size();
    const int n = sigma.size();
    if (depth == k) return true;
    int start = depth == 0 ? 1 : chosen[depth - 1] + 1;
    // Remaining picks need k-depth-1 further positions after this one.
    for (int pos = start; pos + (k - depth - 1) <= n; ++pos) {
        bool ok = true;
        for (int j = 0; j < depth; ++j) {
            const bool want_less = pi(j + 1) > pi(depth + 1);
            const bool is_less = sigma(pos) < sigma(chosen[j]);
            if (want_less != is_less) { ok = false; break; }
        }
        if (!ok) continue;
        chosen[depth] = pos;
        if (occurs_from(sigma, pi, chosen, depth + 1)) return true;
    }
    return false;
}

}  // namespace

bool contains(const Permutation& sigma, const Permutation& pi) {
    if (pi.size() > sigma.size()) return false;
    if (pi.size() == 0) return true;
    std::vector<int> chosen(pi.size());
    return occurs_from(sigma, pi, chosen, 0);
}

bool is_simple(const Permutation& sigma) {
    const int n = sigma.size();
    if (n <= 2) return true;
    // Interval test on every window [i, j): the window is an interval iff
    // max-min equals its length minus one. Running min/max keeps this O(n^2).
    for (int i = 1; i <= n; ++i) {
        int lo = sigma(i), hi = sigma(i);
        for (int j = i + 1; j <= n; ++j) {
            lo = std::min(lo, sigma(j));
            hi = std::max(hi, sigma(j));
            const int len = j - i + 1;
            if (len == n) continue;
            if (hi - lo == len - 1) return false;
        }
    }
    return true;
}

Permutation substitute(const Permutation& theta, const std::vector<Permutation>& blocks) {
    const int d = theta.size();
    if (static_cast<int>(blocks.size()) != d)
        throw arity_error("substitution needs exactly one block per entry of the skeleton");
    int total = 0;
    for (const auto& b : blocks) {
        if (b.size() == 0) throw arity_error("substitution blocks must be nonempty");
        total += b.size();
    }
    // Value offset of block i: total size of blocks whose skeleton value is smaller.
    std::vector<int> offset(d, 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (theta(j + 1) < theta(i + 1)) offset[i] += blocks[j].size();
    std::vector<int> out;
    out.reserve(total);
    for (int i = 0; i < d; ++i)
        for (int v : blocks[i].values()) out.push_back(v + offset[i]);
    return Permutation(std::move(out));
}

Permutation parse_permutation(std::string_view text) {
    std::vector<int> vals;
    if (text.find(' ') == std::string_view::npos) {
        if (text.empty()) throw parse_error("empty permutation literal");
        for (char c : text) {
            if (c < '1' || c > '9') throw parse_error("digit-string permutations use digits 1-9 only");
            vals.push_back(c - '0');
        }
    } else {
        std::istringstream in{std::string(text)};
        std::string tok;
        while (in >> tok) {
            int v = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || p != tok.data() + tok.size())
                throw parse_error("bad integer in permutation literal: " + tok);
            vals.push_back(v);
        }
        if (vals.empty()) throw parse_error("empty permutation literal");
    }
    try {
        return Permutation(std::move(vals));
    } catch (const Error& e) {
        throw parse_error(std::string("not a permutation: ") + e.what());
    }
}

std::string format_permutation(const Permutation& sigma) {
    std::string out;
    if (sigma.size() <= 9) {
        for (int v : sigma.values()) out += static_cast<char>('0' + v);
    } else {
        for (int i = 0; i < sigma.size(); ++i) {
            if (i) out += ' ';
            out += std::to_string(sigma.values()[i]);
        }
    }
    return out;
}

}  // namespace permclass

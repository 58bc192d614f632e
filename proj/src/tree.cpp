#include "permclass/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_map>

#include "permclass/errors.hpp"

namespace permclass {

Tree::Tree(Permutation label, std::vector<Tree> children)
    : label_(std::move(label)), children_(std::move(children)) {
    if (children_.empty()) throw arity_error("internal node needs children; use Tree::leaf()");
    if (static_cast<int>(children_.size()) < 2) throw arity_error("internal node needs at least two children");
    if (label_.size() != static_cast<int>(children_.size()))
        throw arity_error("label size must equal the number of children");
}

int Tree::leaf_count() const {
    int count = 0;
    std::vector<const Tree*> stack{this};
    while (!stack.empty()) {
        const Tree* n = stack.back();
        stack.pop_back();
        if (n->is_leaf()) { ++count; continue; }
        for (const auto& c : n->children()) stack.push_back(&c);
    }
    return count;
}

Permutation perm_of(const Tree& t) {
    if (t.is_leaf()) return Permutation::identity(1);
    // Pass 1: subtree sizes, children before parents.
    std::vector<const Tree*> order;
    std::vector<const Tree*> stack{&t};
    while (!stack.empty()) {
        const Tree* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& c : n->children()) stack.push_back(&c);
    }
    std::unordered_map<const Tree*, int> size;
    size.reserve(order.size() * 2);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Tree* n = *it;
        if (n->is_leaf()) { size[n] = 1; continue; }
        int s = 0;
        for (const auto& c : n->children()) s += size[&c];
        size[n] = s;
    }
    // Pass 2: leaves left to right; each leaf's value is its block base + 1,
    // where a child's base adds the sizes of siblings with smaller label value.
    std::vector<int> out;
    out.reserve(size[&t]);
    struct Item { const Tree* node; int base; };
    std::vector<Item> walk{{&t, 0}};
    while (!walk.empty()) {
        auto [n, base] = walk.back();
        walk.pop_back();
        if (n->is_leaf()) { out.push_back(base + 1); continue; }
        const Permutation& th = n->label();
        const int d = n->arity();
        for (int i = d - 1; i >= 0; --i) {
            int off = base;
            for (int j = 0; j < d; ++j)
                if (th(j + 1) < th(i + 1)) off += size[&n->children()[j]];
            walk.push_back({&n->children()[i], off});
        }
    }
    return Permutation(std::move(out));
}

namespace {

const Permutation kPlus{std::vector<int>{1, 2}};
const Permutation kMinus{std::vector<int>{2, 1}};

bool standard_rec(const Tree& t) {
    if (t.is_leaf()) return true;
    const Permutation& lbl = t.label();
    if (lbl.size() == 2) {
        if (lbl != kPlus && lbl != kMinus) return false;
        const Tree& first = t.children()[0];
        if (!first.is_leaf() && first.label() == lbl) return false;
    } else {
        if (lbl.size() < 4 || !is_simple(lbl)) return false;
    }
    for (const auto& c : t.children())
        if (!standard_rec(c)) return false;
    return true;
}

std::vector<int> window_pattern(const std::vector<int>& vals, int start, int len) {
    std::vector<int> w(vals.begin() + start, vals.begin() + start + len);
    int lo = *std::min_element(w.begin(), w.end());
    for (int& v : w) v -= lo - 1;
    return w;
}

Tree decompose_rec(const std::vector<int>& vals) {
    const int n = static_cast<int>(vals.size());
    if (n == 1) return Tree::leaf();

    // Direct sum: shortest proper prefix occupying values {1..j}. The prefix
    // is then sum-indecomposable, which is exactly the standardness condition
    // on the first child.
    int mx = 0;
    for (int j = 1; j < n; ++j) {
        mx = std::max(mx, vals[j - 1]);
        if (mx == j) {
            std::vector<Tree> kids;
            kids.push_back(decompose_rec(window_pattern(vals, 0, j)));
            kids.push_back(decompose_rec(window_pattern(vals, j, n - j)));
            return Tree(kPlus, std::move(kids));
        }
    }
    // Skew sum: shortest proper prefix occupying values {n-j+1..n}.
    int mn = n + 1;
    for (int j = 1; j < n; ++j) {
        mn = std::min(mn, vals[j - 1]);
        if (mn == n - j + 1) {
            std::vector<Tree> kids;
            kids.push_back(decompose_rec(window_pattern(vals, 0, j)));
            kids.push_back(decompose_rec(window_pattern(vals, j, n - j)));
            return Tree(kMinus, std::move(kids));
        }
    }

    // Neither sum nor skew decomposable: the maximal proper intervals are
    // pairwise disjoint, partition the positions, and the quotient is simple.
    // Greedy longest window from the left finds that partition.
    std::vector<std::pair<int, int>> blocks;  // (start, len)
    int i = 0;
    while (i < n) {
        int best = 1;
        int lo = vals[i], hi = vals[i];
        for (int j = i + 1; j < n; ++j) {
            lo = std::min(lo, vals[j]);
            hi = std::max(hi, vals[j]);
            const int len = j - i + 1;
            if (len == n) break;
            if (hi - lo == len - 1) best = len;
        }
        blocks.emplace_back(i, best);
        i += best;
    }
    const int d = static_cast<int>(blocks.size());
    std::vector<int> lows(d);
    for (int b = 0; b < d; ++b) {
        auto [s, len] = blocks[b];
        lows[b] = *std::min_element(vals.begin() + s, vals.begin() + s + len);
    }
    std::vector<int> quot(d);
    for (int b = 0; b < d; ++b) {
        int rank = 1;
        for (int c = 0; c < d; ++c)
            if (lows[c] < lows[b]) ++rank;
        quot[b] = rank;
    }
    Permutation theta{quot};
    if (theta.size() < 4 || !is_simple(theta))
        throw Error("InternalError", "substitution quotient is not simple");
    std::vector<Tree> kids;
    kids.reserve(d);
    for (auto [s, len] : blocks) kids.push_back(decompose_rec(window_pattern(vals, s, len)));
    return Tree(std::move(theta), std::move(kids));
}

}  // namespace

bool is_standard(const Tree& t) { return standard_rec(t); }

Tree decompose(const Permutation& sigma) {
    if (sigma.empty()) throw invalid_permutation("cannot decompose the empty permutation");
    return decompose_rec(sigma.values());
}

namespace {

Tree induced_rec(const Tree& t, const std::vector<int>& leaves) {
    if (t.is_leaf()) return Tree::leaf();
    std::vector<int> kept_child;           // 1-based child positions that keep a leaf
    std::vector<std::vector<int>> parts;   // leaf indices re-based per kept child
    int cum = 0;
    size_t at = 0;
    for (int c = 0; c < t.arity(); ++c) {
        const int s = t.children()[c].leaf_count();
        std::vector<int> part;
        while (at < leaves.size() && leaves[at] <= cum + s) {
            part.push_back(leaves[at] - cum);
            ++at;
        }
        if (!part.empty()) {
            kept_child.push_back(c + 1);
            parts.push_back(std::move(part));
        }
        cum += s;
    }
    if (kept_child.size() == 1) return induced_rec(t.children()[kept_child[0] - 1], parts[0]);
    Permutation lbl = pattern_of(t.label(), kept_child);
    std::vector<Tree> kids;
    kids.reserve(parts.size());
    for (size_t j = 0; j < parts.size(); ++j)
        kids.push_back(induced_rec(t.children()[kept_child[j] - 1], parts[j]));
    return Tree(std::move(lbl), std::move(kids));
}

}  // namespace

Tree induced_tree(const Tree& t, const std::vector<int>& leaves) {
    const int total = t.leaf_count();
    if (leaves.empty()) throw invalid_positions("empty leaf subset");
    for (size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i] < 1 || leaves[i] > total) throw invalid_positions("leaf index out of range");
        if (i > 0 && leaves[i] <= leaves[i - 1]) throw invalid_positions("leaf indices must be strictly increasing");
    }
    return induced_rec(t, leaves);
}

namespace {

void format_tree_rec(const Tree& t, std::string& out) {
    if (t.is_leaf()) { out += "•"; return; }
    out += format_permutation(t.label());
    out += '(';
    for (int i = 0; i < t.arity(); ++i) {
        if (i) out += ',';
        format_tree_rec(t.children()[i], out);
    }
    out += ')';
}

}  // namespace

std::string format_tree(const Tree& t) {
    std::string out;
    format_tree_rec(t, out);
    return out;
}

namespace {

struct TreeParser {
    std::string_view text;
    size_t pos = 0;

    void skip_ws() { while (pos < text.size() && text[pos] == ' ') ++pos; }

    bool eat_leaf() {
        if (pos < text.size() && text[pos] == '.') { ++pos; return true; }
        if (text.substr(pos, 3) == "•") { pos += 3; return true; }
        return false;
    }

    Tree parse_node() {
        skip_ws();
        if (eat_leaf()) return Tree::leaf();
        const size_t open = text.find('(', pos);
        if (open == std::string_view::npos || open == pos)
            throw parse_error("expected a leaf or a labelled node at offset " + std::to_string(pos));
        std::string_view label_text = text.substr(pos, open - pos);
        while (!label_text.empty() && label_text.back() == ' ') label_text.remove_suffix(1);
        Permutation label = parse_permutation(label_text);
        pos = open + 1;
        std::vector<Tree> kids;
        while (true) {
            kids.push_back(parse_node());
            skip_ws();
            if (pos >= text.size()) throw parse_error("unterminated child list");
            if (text[pos] == ',') { ++pos; continue; }
            if (text[pos] == ')') { ++pos; break; }
            throw parse_error("expected ',' or ')' at offset " + std::to_string(pos));
        }
        return Tree(std::move(label), std::move(kids));
    }
};

}  // namespace

Tree parse_tree(std::string_view text) {
    TreeParser p{text};
    Tree t = p.parse_node();
    p.skip_ws();
    if (p.pos != text.size()) throw parse_error("trailing input after tree");
    return t;
}

Tree reduce_caterpillar(const std::vector<CodeLetter>& word) {
    const int k = static_cast<int>(word.size());
    if (k == 0) throw validation_error("caterpillar code word must be nonempty");
    // The head is erased and v_k contracts away, so letter k contributes only
    // its leaf; build bottom-up from there.
    Tree current = Tree::leaf();
    for (int r = k - 1; r >= 1; --r) {
        const Permutation& lbl = word[r - 1].sign == Sign::Plus ? kPlus : kMinus;
        std::vector<Tree> kids;
        if (word[r - 1].side == Side::Left) {
            kids.push_back(Tree::leaf());
            kids.push_back(std::move(current));
        } else {
            kids.push_back(std::move(current));
            kids.push_back(Tree::leaf());
        }
        current = Tree(lbl, std::move(kids));
    }
    return current;
}

std::map<Permutation, double> caterpillar_perm_distribution(const XQuadruple& p, int k) {
    if (k < 1 || k > 8) throw validation_error("caterpillar distribution supports 1 <= k <= 8");
    if (std::abs(p.sum() - 1.0) > 1e-6) throw validation_error("corner weights must sum to 1");
    std::map<Permutation, double> dist;
    std::vector<CodeLetter> word(k);
    const int total = 1 << (2 * k);
    for (int code = 0; code < total; ++code) {
        double w = 1.0;
        int c = code;
        for (int r = 0; r < k; ++r, c >>= 2) {
            word[r].side = (c & 1) ? Side::Right : Side::Left;
            word[r].sign = (c & 2) ? Sign::Minus : Sign::Plus;
            w *= p.weight(word[r].side, word[r].sign);
            if (w == 0.0) break;
        }
        if (w == 0.0) continue;
        dist[perm_of(reduce_caterpillar(word))] += w;
    }
    return dist;
}

std::map<Permutation, double> binary_perm_distribution(double p_plus, int k) {
    if (k < 1 || k > 7) throw validation_error("binary distribution supports 1 <= k <= 7");
    if (p_plus < 0.0 || p_plus > 1.0) throw validation_error("p_plus must lie in [0,1]");
    // catalan[m] = number of binary shapes with m+1 leaves
    std::vector<double> catalan(k, 0.0);
    catalan[0] = 1;
    for (int m = 1; m < k; ++m)
        for (int a = 0; a < m; ++a) catalan[m] += catalan[a] * catalan[m - 1 - a];

    // Enumerate signed trees with their sign-product weight; shape weight is
    // uniform so each signed tree carries p^{#plus} (1-p)^{#minus} / catalan.
    std::function<std::vector<std::pair<Tree, double>>(int)> gen = [&](int leaves) {
        std::vector<std::pair<Tree, double>> out;
        if (leaves == 1) {
            out.emplace_back(Tree::leaf(), 1.0);
            return out;
        }
        for (int l = 1; l < leaves; ++l) {
            auto ls = gen(l);
            auto rs = gen(leaves - l);
            for (const auto& [lt, lw] : ls)
                for (const auto& [rt, rw] : rs) {
                    if (p_plus > 0.0)
                        out.emplace_back(Tree(kPlus, {lt, rt}), lw * rw * p_plus);
                    if (p_plus < 1.0)
                        out.emplace_back(Tree(kMinus, {lt, rt}), lw * rw * (1.0 - p_plus));
                }
        }
        return out;
    };
    std::map<Permutation, double> dist;
    for (const auto& [t, w] : gen(k)) dist[perm_of(t)] += w / catalan[k - 1];
    return dist;
}

}  // namespace permclass

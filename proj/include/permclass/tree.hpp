#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "permclass/permutation.hpp"

namespace permclass {

// Substitution tree: leaves carry no label, an internal node carries a
// permutation label whose size equals its arity. Value semantics; children
// are ordered by position.
class Tree {
public:
    Tree() = default;  // leaf
    Tree(Permutation label, std::vector<Tree> children);

    static Tree leaf() { return Tree(); }

    bool is_leaf() const { return children_.empty(); }
    const Permutation& label() const { return label_; }
    const std::vector<Tree>& children() const { return children_; }
    int arity() const { return static_cast<int>(children_.size()); }
    int leaf_count() const;

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    Permutation label_;
    std::vector<Tree> children_;
};

// perm() of a substitution tree: repeated inflation of the labels. Iterative,
// so arbitrarily deep trees are fine.
Permutation perm_of(const Tree& t);

// Standard form: sign nodes are binary with labels 12 or 21 and the first
// child of a sign node never carries the same sign; other labels are simple of
// size >= 4. Every permutation has exactly one standard tree.
bool is_standard(const Tree& t);
Tree decompose(const Permutation& sigma);

// Tree induced on a sorted 1-based subset of leaves: children with no
// surviving leaf disappear, unary chains contract, labels restrict to the
// pattern at the surviving child positions. Throws InvalidPositions on a bad
// subset.
Tree induced_tree(const Tree& t, const std::vector<int>& leaves);

// Text form used by the CLI: "•" for a leaf, "label(child,...)" otherwise,
// labels in the same notation as permutations.
std::string format_tree(const Tree& t);
Tree parse_tree(std::string_view text);

enum class Side { Left = 0, Right = 1 };
enum class Sign { Plus = 0, Minus = 1 };

struct CodeLetter {
    Side side;
    Sign sign;
    friend bool operator==(const CodeLetter&, const CodeLetter&) = default;
};

// Corner weights of the X distribution, in the canonical order
// (plus/left, plus/right, minus/left, minus/right).
struct XQuadruple {
    double plus_left = 0;
    double plus_right = 0;
    double minus_left = 0;
    double minus_right = 0;

    double sum() const { return plus_left + plus_right + minus_left + minus_right; }
    double weight(Side e, Sign s) const {
        if (s == Sign::Plus) return e == Side::Left ? plus_left : plus_right;
        return e == Side::Left ? minus_left : minus_right;
    }
};

// Caterpillar with code word (side_r, sign_r)_{r=1..k}: internal spine node
// v_r has sign sign_r, one leaf hanging on side side_r, and the spine
// continuing on the other side; past v_k the spine ends in a head leaf.
// reduce_caterpillar erases the head and contracts the now-unary v_k, leaving
// a signed binary tree with k leaves (a single leaf when k = 1).
Tree reduce_caterpillar(const std::vector<CodeLetter>& word);

// Law of perm(reduce(caterpillar)) when the k letters are i.i.d. with the
// given corner weights. Exact enumeration; k is capped at 8.
std::map<Permutation, double> caterpillar_perm_distribution(const XQuadruple& p, int k);

// Law of perm() of a uniform binary shape with k leaves whose sign nodes are
// i.i.d. plus with probability p_plus. Exact enumeration; k is capped at 7.
std::map<Permutation, double> binary_perm_distribution(double p_plus, int k);

}  // namespace permclass

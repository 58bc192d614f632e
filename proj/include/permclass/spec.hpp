#pragma once

#include <string>
#include <vector>

#include "permclass/permutation.hpp"

namespace permclass {

// One production: an internal root label together with the family index of
// each child, in position order. Roots are 12, 21, or simple of size >= 4,
// and the child count always equals the root size.
struct Production {
    Permutation root;
    std::vector<int> children;

    friend bool operator==(const Production&, const Production&) = default;
};

struct Family {
    std::string name;
    bool leaf = false;  // whether the family contains the single-leaf tree
    std::vector<Production> productions;
};

// A tree-specification: finitely many families, each the disjoint union of an
// optional leaf and finitely many production terms. Instances are validated
// on construction: names unique, arities consistent, roots admissible, every
// family generates at least one tree, no duplicate production within a
// family, at least one family has a leaf term, and at least one family is
// infinite.
class TreeSpec {
public:
    explicit TreeSpec(std::vector<Family> families);

    int size() const { return static_cast<int>(families_.size()); }
    const Family& family(int i) const { return families_[i]; }
    const std::vector<Family>& families() const { return families_; }
    int index_of(const std::string& name) const;  // -1 when absent

    // Smallest tree size generated by each family (the series valuation).
    const std::vector<int>& min_sizes() const { return min_size_; }
    // Whether each family generates infinitely many trees.
    const std::vector<bool>& infinite() const { return infinite_; }

    static TreeSpec from_json_text(const std::string& text);
    std::string to_json_text() const;

private:
    std::vector<Family> families_;
    std::vector<int> min_size_;
    std::vector<bool> infinite_;
};

// Dependency graph on families: an edge j -> i whenever family j appears as a
// child in some production of family i. Strongly connected components are
// numbered in topological order, dependencies first.
struct DependencyGraph {
    std::vector<std::vector<int>> deps;      // deps[i] = sorted unique children familes of i
    std::vector<std::vector<int>> rdeps;     // reverse edges
    std::vector<int> scc_of;                 // family -> component id
    std::vector<std::vector<int>> sccs;      // component id -> member families
    std::vector<bool> scc_cyclic;            // has an internal edge (size > 1 or a self-loop)
    std::vector<std::vector<int>> scc_deps;  // component DAG, dependencies of each component
};

DependencyGraph dependency_graph(const TreeSpec& spec);

// Families reachable from (and including) the given seeds through production
// children; sorted ascending.
std::vector<int> dependency_closure(const TreeSpec& spec, const std::vector<int>& seeds);

// Restriction to a dependency-closed subset of families, preserving order.
// Throws ClosureError when the subset references a family outside itself.
TreeSpec restrict(const TreeSpec& spec, const std::vector<int>& keep);

}  // namespace permclass

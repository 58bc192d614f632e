#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "permclass/errors.hpp"
#include "permclass/permutation.hpp"
#include "permclass/rng.hpp"
#include "permclass/tree.hpp"

#include "helpers.hpp"

using namespace permclass;

namespace {

Tree plus_node(Tree a, Tree b) {
    std::vector<Tree> kids;
    kids.push_back(std::move(a));
    kids.push_back(std::move(b));
    return Tree(parse_permutation("12"), std::move(kids));
}

Tree minus_node(Tree a, Tree b) {
    std::vector<Tree> kids;
    kids.push_back(std::move(a));
    kids.push_back(std::move(b));
    return Tree(parse_permutation("21"), std::move(kids));
}

}  // namespace

TEST_CASE("construction guards") {
    CHECK_THROWS_AS(Tree(parse_permutation("1"), {Tree::leaf()}), Error);
    CHECK_THROWS_AS(Tree(parse_permutation("12"), {Tree::leaf()}), Error);
    CHECK_NOTHROW(plus_node(Tree::leaf(), Tree::leaf()));
}

TEST_CASE("perm of small trees") {
    CHECK(perm_of(Tree::leaf()) == Permutation({1}));
    CHECK(perm_of(plus_node(Tree::leaf(), Tree::leaf())) == parse_permutation("12"));
    CHECK(perm_of(minus_node(Tree::leaf(), Tree::leaf())) == parse_permutation("21"));
    // 21(12(•,•),•): the 12 block sits above the singleton.
    CHECK(perm_of(minus_node(plus_node(Tree::leaf(), Tree::leaf()), Tree::leaf())) ==
          parse_permutation("231"));

    // 2413[1, 12, 1, 1]: the second slot holds the top block {4,5}.
    Tree simple(parse_permutation("2413"),
                {Tree::leaf(), plus_node(Tree::leaf(), Tree::leaf()), Tree::leaf(), Tree::leaf()});
    CHECK(perm_of(simple) == parse_permutation("24513"));
}

TEST_CASE("standard form") {
    Tree comb = plus_node(Tree::leaf(), plus_node(Tree::leaf(), Tree::leaf()));
    CHECK(is_standard(comb));
    CHECK(decompose(parse_permutation("123")) == comb);

    // First child of a sign node never repeats the sign.
    Tree bad = plus_node(plus_node(Tree::leaf(), Tree::leaf()), Tree::leaf());
    CHECK_FALSE(is_standard(bad));
    CHECK(is_standard(minus_node(plus_node(Tree::leaf(), Tree::leaf()), Tree::leaf())));

    // Non-simple or undersized internal labels are rejected.
    Tree tri(parse_permutation("123"), {Tree::leaf(), Tree::leaf(), Tree::leaf()});
    CHECK_FALSE(is_standard(tri));
    Tree flat(parse_permutation("1234"),
              {Tree::leaf(), Tree::leaf(), Tree::leaf(), Tree::leaf()});
    CHECK_FALSE(is_standard(flat));

    CHECK(decompose(parse_permutation("2413")) ==
          Tree(parse_permutation("2413"),
               {Tree::leaf(), Tree::leaf(), Tree::leaf(), Tree::leaf()}));
    CHECK_THROWS_AS(decompose(Permutation()), Error);
}

TEST_CASE("decompose and perm are mutually inverse on random trees") {
    Rng rng(7781);
    for (int trial = 0; trial < 500; ++trial) {
        Tree t = testutil::random_standard_tree(rng, 20);
        REQUIRE(is_standard(t));
        Permutation sigma = perm_of(t);
        CHECK(decompose(sigma) == t);
    }
    // And starting from the permutation side.
    for (int trial = 0; trial < 500; ++trial) {
        int n = 1 + int(rng.below(9));
        std::vector<int> vals(n);
        for (int i = 0; i < n; ++i) vals[i] = i + 1;
        for (int i = n - 1; i > 0; --i) std::swap(vals[i], vals[rng.below(i + 1)]);
        Permutation p(vals);
        Tree t = decompose(p);
        CHECK(is_standard(t));
        CHECK(perm_of(t) == p);
    }
}

TEST_CASE("induced trees") {
    Tree t = decompose(parse_permutation("362514"));
    // 362514 is simple, so the induced tree on leaves 1,2,5,6 keeps the root
    // with its label restricted to the surviving children.
    Tree sub = induced_tree(t, {1, 2, 5, 6});
    CHECK(sub == Tree(parse_permutation("2413"),
                      {Tree::leaf(), Tree::leaf(), Tree::leaf(), Tree::leaf()}));

    // A single surviving leaf contracts all the way down.
    CHECK(induced_tree(t, {3}) == Tree::leaf());

    CHECK_THROWS_AS(induced_tree(t, {}), Error);
    CHECK_THROWS_AS(induced_tree(t, {0, 2}), Error);
    CHECK_THROWS_AS(induced_tree(t, {2, 2}), Error);
    CHECK_THROWS_AS(induced_tree(t, {7}), Error);
}

TEST_CASE("induced tree commutes with pattern extraction") {
    Rng rng(31881);
    for (int trial = 0; trial < 400; ++trial) {
        Tree t = testutil::random_standard_tree(rng, 16);
        int n = t.leaf_count();
        auto subset = testutil::random_subset(rng, n);
        CHECK(perm_of(induced_tree(t, subset)) == pattern_of(perm_of(t), subset));
    }
}

TEST_CASE("tree text round trips") {
    Tree t = decompose(parse_permutation("362514"));
    CHECK(format_tree(t) == "362514(•,•,•,•,•,•)");
    CHECK(parse_tree(format_tree(t)) == t);
    CHECK(parse_tree("12(.,.)") == plus_node(Tree::leaf(), Tree::leaf()));
    CHECK(parse_tree("12(., 21(., .))") ==
          plus_node(Tree::leaf(), minus_node(Tree::leaf(), Tree::leaf())));
    CHECK(format_tree(Tree::leaf()) == "•");

    CHECK_THROWS_AS(parse_tree(""), Error);
    CHECK_THROWS_AS(parse_tree("12(•,•"), Error);
    CHECK_THROWS_AS(parse_tree("•x"), Error);
    CHECK_THROWS_AS(parse_tree("12(•)"), Error);
}

TEST_CASE("caterpillar reduction") {
    std::vector<CodeLetter> w2{{Side::Left, Sign::Plus}, {Side::Left, Sign::Plus}};
    CHECK(perm_of(reduce_caterpillar(w2)) == parse_permutation("12"));
    std::vector<CodeLetter> w3{{Side::Left, Sign::Plus},
                               {Side::Left, Sign::Plus},
                               {Side::Left, Sign::Plus}};
    CHECK(perm_of(reduce_caterpillar(w3)) == parse_permutation("123"));
    // Letter k only contributes its leaf, so its side and sign are inert.
    std::vector<CodeLetter> w3b{{Side::Left, Sign::Plus},
                                {Side::Left, Sign::Plus},
                                {Side::Right, Sign::Minus}};
    CHECK(reduce_caterpillar(w3) == reduce_caterpillar(w3b));
    // k = 1 reduces to a bare leaf.
    CHECK(reduce_caterpillar({{Side::Right, Sign::Minus}}) == Tree::leaf());
    CHECK_THROWS_AS(reduce_caterpillar({}), Error);
}

TEST_CASE("caterpillar perm distribution") {
    XQuadruple uniform{0.25, 0.25, 0.25, 0.25};
    for (int k = 1; k <= 5; ++k) {
        auto dist = caterpillar_perm_distribution(uniform, k);
        double total = 0;
        for (const auto& [perm, w] : dist) {
            CHECK(perm.size() == k);
            total += w;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
        // Swapping the sign corners complements the permutation, and the
        // uniform quadruple is invariant under that swap.
        for (const auto& [perm, w] : dist) {
            REQUIRE(dist.count(perm.complement()) == 1);
            CHECK(std::abs(dist.at(perm.complement()) - w) < 1e-12);
        }
    }
    // Only the first letter matters at k = 2.
    auto d2 = caterpillar_perm_distribution(XQuadruple{0.3, 0.4, 0.2, 0.1}, 2);
    CHECK(std::abs(d2.at(parse_permutation("12")) - 0.7) < 1e-12);
    CHECK(std::abs(d2.at(parse_permutation("21")) - 0.3) < 1e-12);
    // A degenerate corner pins the whole word.
    auto d4 = caterpillar_perm_distribution(XQuadruple{1, 0, 0, 0}, 4);
    CHECK(d4.size() == 1);
    CHECK(std::abs(d4.at(parse_permutation("1234")) - 1.0) < 1e-12);
    auto d3 = caterpillar_perm_distribution(XQuadruple{0, 0, 1, 0}, 3);
    CHECK(d3.size() == 1);
    CHECK(std::abs(d3.at(parse_permutation("321")) - 1.0) < 1e-12);

    CHECK_THROWS_AS(caterpillar_perm_distribution(uniform, 0), Error);
    CHECK_THROWS_AS(caterpillar_perm_distribution(uniform, 9), Error);
    CHECK_THROWS_AS(caterpillar_perm_distribution(XQuadruple{0.5, 0, 0, 0}, 3), Error);
}

TEST_CASE("binary perm distribution") {
    // k = 3, generic p: two shapes, four sign choices each.
    double p = 0.3;
    auto dist = binary_perm_distribution(p, 3);
    double q = 1 - p;
    CHECK(std::abs(dist.at(parse_permutation("123")) - p * p) < 1e-12);
    CHECK(std::abs(dist.at(parse_permutation("321")) - q * q) < 1e-12);
    CHECK(std::abs(dist.at(parse_permutation("132")) - 0.5 * p * q) < 1e-12);
    CHECK(std::abs(dist.at(parse_permutation("213")) - 0.5 * p * q) < 1e-12);
    CHECK(std::abs(dist.at(parse_permutation("231")) - 0.5 * p * q) < 1e-12);
    CHECK(std::abs(dist.at(parse_permutation("312")) - 0.5 * p * q) < 1e-12);

    auto all_plus = binary_perm_distribution(1.0, 4);
    CHECK(all_plus.size() == 1);
    CHECK(std::abs(all_plus.at(parse_permutation("1234")) - 1.0) < 1e-12);
    auto all_minus = binary_perm_distribution(0.0, 3);
    CHECK(all_minus.size() == 1);
    CHECK(std::abs(all_minus.at(parse_permutation("321")) - 1.0) < 1e-12);

    for (int k = 1; k <= 6; ++k) {
        auto d = binary_perm_distribution(0.37, k);
        double total = 0;
        for (const auto& [perm, w] : d) total += w;
        CHECK(std::abs(total - 1.0) < 1e-12);
    }

    CHECK_THROWS_AS(binary_perm_distribution(0.5, 8), Error);
    CHECK_THROWS_AS(binary_perm_distribution(-0.1, 3), Error);
}

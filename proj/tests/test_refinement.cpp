#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "tsafem/refinement.hpp"
#include "tsafem/testing/oracles.hpp"
#include "tsafem/verify.hpp"

using namespace tsafem;

TEST(Radius, TwoDimensionalCases)
{
    const ParamDomain<2> dom({1, 1}, {3, 3});
    EXPECT_EQ(radius(dom, 0), (std::array<Dyadic, 2>{Dyadic(3, 1), Dyadic(5, 1)}));
    EXPECT_EQ(radius(dom, 1), (std::array<Dyadic, 2>{Dyadic(5, 2), Dyadic(3, 1)}));
}

TEST(Radius, ThreeDimensionalLevelZero)
{
    const ParamDomain<3> dom({1, 1, 1}, {3, 3, 3});
    EXPECT_EQ(radius(dom, 0), (std::array<Dyadic, 3>{Dyadic(9, 1), Dyadic(9, 1), Dyadic(9, 1)}));
}

TEST(Radius, MatchesCaseTable)
{
    for (int k = 0; k < 16; ++k) {
        EXPECT_EQ(radius(ParamDomain<2>({1, 1}, {7, 3}), k), oracle::neighbor_radius(ParamDomain<2>({1, 1}, {7, 3}), k));
        EXPECT_EQ(radius(ParamDomain<3>({1, 1, 1}, {5, 3, 7}), k),
                  oracle::neighbor_radius(ParamDomain<3>({1, 1, 1}, {5, 3, 7}), k));
    }
}

TEST(Neighbors, SingleElementSeesItself)
{
    const TMesh<2> m(ParamDomain<2>({1, 1}, {3, 3}));
    EXPECT_EQ(neighbors(m, m.elements()[0]), std::vector<ElementId>{m.elements()[0]});
}

TEST(Neighbors, UniformLevelFourMatchesBruteForce)
{
    const auto m = uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4);
    for (ElementId t : m.elements())
        EXPECT_EQ(neighbors(m, t), oracle::naive_neighbors(m, t));
    // Open box (0, 3/4) x (-1/4, 1) around [1/4, 1/2]^2: 3 columns, 4 rows inside the domain.
    const ElementId center = m.locate(std::array<double, 2>{0.3, 0.3});
    EXPECT_EQ(neighbors(m, center).size(), 12u);
}

TEST(Neighbors, OpenBoxAndMidpointFormsAgree)
{
    std::mt19937_64 rng(3);
    for (int s = 0; s < 4; ++s) {
        const auto m = oracle::random_refined_mesh(ParamDomain<2>({2, 2}, {3, 5}), 7, rng);
        for (ElementId t : m.elements())
            EXPECT_EQ(neighbors(m, t), neighbors_by_midpoint(m, t));
    }
}

TEST(BadNeighbors, EmptyOnUniformMesh)
{
    const auto m = uniform_mesh(ParamDomain<2>({2, 1}, {3, 3}), 3);
    for (ElementId t : m.elements())
        EXPECT_TRUE(bad_neighbors(m, t).empty());
}

TEST(Refine, SingleMarkOnUniformMesh)
{
    const auto m = uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 2);
    const ElementId t = m.elements()[1];
    const auto r = refine(m, {t});
    EXPECT_EQ(r.size(), m.size() + 1);
    EXPECT_FALSE(r.is_element(t));
}

TEST(Refine, MatchesNaiveClosure)
{
    std::mt19937_64 rng(17);
    const auto f = verify::refine_fuzz(ParamDomain<2>({2, 2}, {3, 3}), 20, 5, rng);
    EXPECT_EQ(f.oracle_mismatches, 0);
    EXPECT_EQ(f.inadmissible, 0);
    EXPECT_EQ(f.growth_failures, 0);
    EXPECT_EQ(f.succession_failures, 0);
}

TEST(Refine, ThreeDimensionalMatchesNaiveClosure)
{
    std::mt19937_64 rng(19);
    const auto f = verify::refine_fuzz(ParamDomain<3>({1, 1, 1}, {3, 3, 3}), 5, 4, rng, 0.1);
    EXPECT_EQ(f.oracle_mismatches, 0);
    EXPECT_EQ(f.inadmissible, 0);
}

TEST(Refine, CornerMarkingGradesTowardCorner)
{
    TMesh<2> m(ParamDomain<2>({1, 1}, {3, 3}));
    for (int s = 0; s < 20; ++s)
        m = refine(m, {m.locate(std::array<double, 2>{1e-9, 1e-9})});
    EXPECT_EQ(m.level(m.locate(std::array<double, 2>{1e-9, 1e-9})), 20);
    EXPECT_TRUE(check_admissibility(m).admissible);
    EXPECT_LE(verify::corner_closure_ratio(ParamDomain<2>({1, 1}, {3, 3}), 20), 20.0);
}

TEST(Overlay, WithItselfAndWithInitialMesh)
{
    std::mt19937_64 rng(23);
    const ParamDomain<2> dom({1, 1}, {3, 3});
    const auto m = oracle::random_refined_mesh(dom, 6, rng);
    EXPECT_EQ(overlay(m, m).sorted_boxes(), m.sorted_boxes());
    EXPECT_EQ(overlay(TMesh<2>(dom), m).sorted_boxes(), m.sorted_boxes());
    EXPECT_EQ(overlay(m, TMesh<2>(dom)).sorted_boxes(), m.sorted_boxes());
}

TEST(Overlay, OppositeCornersHaveSlack)
{
    const ParamDomain<2> dom({1, 1}, {3, 3});
    TMesh<2> a(dom), b(dom);
    for (int s = 0; s < 6; ++s) {
        a = refine(a, {a.locate(std::array<double, 2>{0.01, 0.01})});
        b = refine(b, {b.locate(std::array<double, 2>{0.99, 0.99})});
    }
    const auto o = overlay(a, b);
    EXPECT_LT(o.size(), a.size() + b.size() - 1);
    EXPECT_TRUE(check_admissibility(o).admissible);
    EXPECT_EQ(o.sorted_boxes(), oracle::overlay_boxes(a, b));
}

TEST(Overlay, RandomPairs)
{
    std::mt19937_64 rng(29);
    const auto f = verify::overlay_fuzz(ParamDomain<2>({2, 1}, {3, 3}), 15, rng);
    EXPECT_EQ(f.oracle_mismatches, 0);
    EXPECT_EQ(f.inadmissible, 0);
    EXPECT_EQ(f.count_violations, 0);
}

TEST(Overlay, RejectsDifferentDomains)
{
    EXPECT_THROW((void)overlay(TMesh<2>(ParamDomain<2>({1, 1}, {3, 3})), TMesh<2>(ParamDomain<2>({2, 1}, {3, 3}))),
                 std::invalid_argument);
}

TEST(Admissibility, UniformMeshPasses)
{
    EXPECT_TRUE(check_admissibility(uniform_mesh(ParamDomain<2>({2, 2}, {3, 3}), 4)).admissible);
}

TEST(Admissibility, RawLevelJumpFails)
{
    TMesh<2> raw(ParamDomain<2>({2, 1}, {3, 3}));
    const ElementId coarse = raw.locate(std::array<double, 2>{1.5, 0.5});
    raw = raw.bisected({raw.locate(std::array<double, 2>{0.5, 0.5})});
    raw = raw.bisected({raw.locate(std::array<double, 2>{0.75, 0.5})});
    const auto rep = check_admissibility(raw);
    ASSERT_FALSE(rep.admissible);
    ASSERT_FALSE(rep.level_jumps.empty());
    bool reported = false;
    for (const auto& [a, b] : rep.level_jumps)
        reported = reported || a == coarse || b == coarse;
    EXPECT_TRUE(reported);
}

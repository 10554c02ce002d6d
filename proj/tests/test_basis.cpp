#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "tsafem/basis.hpp"
#include "tsafem/bspline.hpp"
#include "tsafem/testing/oracles.hpp"
#include "tsafem/verify.hpp"

using namespace tsafem;

namespace {

std::shared_ptr<const TMesh<2>> share(TMesh<2> m) { return std::make_shared<const TMesh<2>>(std::move(m)); }

}  // namespace

TEST(BSpline, CubicAtCentreOfUniformKnots)
{
    const std::vector<double> x{0, 1, 2, 3, 4};
    EXPECT_NEAR(bspline_1d(x, 2.0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(oracle::divided_difference_bspline(x, 2.0), 2.0 / 3.0, 1e-13);
}

TEST(BSpline, ClampedLeftEndIsOne)
{
    const std::vector<double> x{0, 0, 0, 0, 1};
    EXPECT_DOUBLE_EQ(bspline_1d(x, 0.0), 1.0);
    for (double t : {0.1, 0.5, 0.9})
        EXPECT_NEAR(bspline_1d(x, t), std::pow(1 - t, 3), 1e-14);
}

TEST(BSpline, VanishesOutsideSupport)
{
    const std::vector<double> x{0.5, 1, 1, 2, 3.5};
    for (double t : {-1.0, 0.0, 0.5, 3.5, 4.0})
        EXPECT_EQ(bspline_1d(x, t), 0.0);
    for (double t : {0.6, 1.0, 2.2, 3.4})
        EXPECT_GT(bspline_1d(x, t), 0.0);
}

TEST(BSpline, DerivativesMatchDividedDifferences)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const int p = 3 + 2 * (k % 2);
        std::vector<double> x{0.0};
        for (int i = 0; i < p + 1; ++i)
            x.push_back(x.back() + (u(rng) < 0.25 ? 0.0 : 0.25 * std::floor(1 + 3 * u(rng))));
        const double t = x.front() + u(rng) * (x.back() - x.front());
        for (int d = 0; d <= 2; ++d)
            EXPECT_NEAR(bspline_1d(x, t, d), oracle::divided_difference_bspline(x, t, d),
                        1e-9 * std::max(1.0, std::abs(oracle::divided_difference_bspline(x, t, d))));
    }
}

TEST(LocalKnots, GoldenMesh)
{
    const ExtendedMesh<2> ext(share(verify::golden_knot_mesh()));
    for (const auto& g : verify::golden_knot_table()) {
        const DyadicPoint<2> z{Dyadic(static_cast<std::int64_t>(2 * g.node[0]), 1),
                               Dyadic(static_cast<std::int64_t>(2 * g.node[1]), 1)};
        const auto kv = local_knot_vectors(ext, z);
        std::vector<double> got;
        for (const auto& v : kv[static_cast<std::size_t>(g.direction)])
            got.push_back(v.to_double());
        EXPECT_EQ(got, g.knots) << "node (" << g.node[0] << ", " << g.node[1] << ") direction " << g.direction;
    }
    EXPECT_EQ(verify::golden_knot_mismatches().first, 0);
}

TEST(LocalKnots, MatchSkeletonScan)
{
    std::mt19937_64 rng(8);
    for (int s = 0; s < 4; ++s) {
        const auto m = oracle::random_refined_mesh(ParamDomain<2>({2, 1}, {5, 3}), 6, rng);
        const TSplineBasis<2> b(share(m));
        for (const auto& a : b.anchors())
            for (int i = 0; i < 2; ++i)
                EXPECT_EQ(oracle::local_knots(b.extended(), a.node, i), a.knots[static_cast<std::size_t>(i)]);
    }
}

TEST(Basis, InitialUnitSquare)
{
    const TSplineBasis<2> b(share(TMesh<2>(ParamDomain<2>({1, 1}, {3, 3}))));
    EXPECT_EQ(b.size(), 16u);
    ASSERT_EQ(b.dof_count(), 4u);
    for (int a : b.interior())
        for (int i = 0; i < 2; ++i)
            EXPECT_TRUE(b.anchor(a).node[i] == Dyadic(0) || b.anchor(a).node[i] == Dyadic(1));
}

TEST(Basis, UniformDimensionMatchesTensorSplines)
{
    const TSplineBasis<2> b(share(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 2)));
    // 2 x 2 cells of cubic splines with open knots: (2 + 3)^2 functions, (2 + 3 - 2)^2 vanish on the boundary.
    EXPECT_EQ(b.size(), 25u);
    EXPECT_EQ(b.dof_count(), 9u);
}

TEST(Basis, RejectsInadmissibleMesh)
{
    TMesh<2> raw(ParamDomain<2>({2, 1}, {3, 3}));
    raw = raw.bisected({raw.locate(std::array<double, 2>{0.5, 0.5})});
    raw = raw.bisected({raw.locate(std::array<double, 2>{0.75, 0.5})});
    EXPECT_THROW(TSplineBasis<2>{share(raw)}, std::invalid_argument);
}

TEST(Basis, PartitionOfUnity)
{
    std::mt19937_64 rng(42);
    for (std::array<int, 2> p : {std::array<int, 2>{3, 3}, std::array<int, 2>{5, 3}}) {
        const TSplineBasis<2> b(share(oracle::random_refined_mesh(ParamDomain<2>({2, 1}, p), 6, rng)));
        double grad = 0.0;
        EXPECT_LT(verify::partition_of_unity_error(b, 300, rng, &grad), 1e-10);
        EXPECT_LT(grad, 1e-8);
    }
}

TEST(Basis, BoundaryBehaviour)
{
    std::mt19937_64 rng(4);
    const TSplineBasis<2> b(share(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng)));
    const auto [interior_max, boundary_min] = verify::boundary_behaviour(b);
    EXPECT_LE(interior_max, 1e-12);
    EXPECT_GT(boundary_min, 1e-3);
}

TEST(Basis, DualCompatibleOnAdmissibleMeshes)
{
    std::mt19937_64 rng(6);
    for (int s = 0; s < 4; ++s) {
        const TSplineBasis<2> b(share(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 5}), 7, rng)));
        const auto rep = dual_compatibility_report(b);
        EXPECT_TRUE(rep.compatible);
        EXPECT_GT(rep.pairs_checked, 0u);
    }
}

TEST(Basis, SplinesAreTwiceContinuous)
{
    std::mt19937_64 rng(9);
    const TSplineBasis<2> b(share(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng)));
    EXPECT_LT(verify::smoothness_defect(b, rng), 1e-9);
}

TEST(Basis, SpacesAreNested)
{
    std::mt19937_64 rng(13);
    const auto coarse = oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4, rng);
    const auto fine = refine(coarse, oracle::random_marks(coarse, rng, 0.3));
    EXPECT_LT(oracle::nestedness_residual(TSplineBasis<2>(share(coarse)), TSplineBasis<2>(share(fine))), 1e-8);
}

TEST(Basis, EvaluationGradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(21);
    const TSplineBasis<2> b(share(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 5, rng)));
    const std::array<double, 2> t{0.3141, 0.6713};
    const double h = 1e-6;
    for (const auto& v : eval_basis(b, t)) {
        const double fx = (eval_anchor(b, v.anchor, {t[0] + h, t[1]}).value - eval_anchor(b, v.anchor, {t[0] - h, t[1]}).value) / (2 * h);
        const double fy = (eval_anchor(b, v.anchor, {t[0], t[1] + h}).value - eval_anchor(b, v.anchor, {t[0], t[1] - h}).value) / (2 * h);
        EXPECT_NEAR(v.grad[0], fx, 1e-6 * std::max(1.0, std::abs(fx)));
        EXPECT_NEAR(v.grad[1], fy, 1e-6 * std::max(1.0, std::abs(fy)));
    }
}

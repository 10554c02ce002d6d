#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "tsafem/fem.hpp"
#include "tsafem/geometry.hpp"
#include "tsafem/testing/oracles.hpp"
#include "tsafem/verify.hpp"

using namespace tsafem;

namespace {

std::shared_ptr<const TSplineBasis<2>> basis_of(TMesh<2> m)
{
    return std::make_shared<const TSplineBasis<2>>(std::make_shared<const TMesh<2>>(std::move(m)));
}

void expect_jacobian_matches_differences(const GeometryMap& g, const Vec2& t)
{
    const double h = 1e-6;
    const Mat2 j = g.jacobian(t);
    const auto hs = g.hessian(t);
    for (int i = 0; i < 2; ++i) {
        Vec2 tp = t, tm = t;
        tp[static_cast<std::size_t>(i)] += h;
        tm[static_cast<std::size_t>(i)] -= h;
        const Vec2 xp = g.map_point(tp), xm = g.map_point(tm);
        const Mat2 jp = g.jacobian(tp), jm = g.jacobian(tm);
        for (int k = 0; k < 2; ++k) {
            const double fd = (xp[static_cast<std::size_t>(k)] - xm[static_cast<std::size_t>(k)]) / (2 * h);
            EXPECT_NEAR(j[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)], fd, 1e-6 * std::max(1.0, std::abs(fd)));
            for (int l = 0; l < 2; ++l) {
                const double fd2 = (jp[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] -
                                    jm[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]) / (2 * h);
                EXPECT_NEAR(hs[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)][static_cast<std::size_t>(i)], fd2,
                            1e-6 * std::max(1.0, std::abs(fd2)));
            }
        }
    }
}

}  // namespace

TEST(Geometry, IdentityMap)
{
    const IdentityMap g;
    const Vec2 t{0.3, 0.8};
    EXPECT_EQ(g.map_point(t), t);
    EXPECT_EQ(g.jacobian(t), (Mat2{{{1, 0}, {0, 1}}}));
    for (const auto& h : g.hessian(t))
        EXPECT_EQ(h, Mat2{});
}

TEST(Geometry, AffineMapHasConstantJacobian)
{
    const auto g = make_geometry("affine", {2, 1, 0, 1, 0.5, -1}, {1, 1});
    EXPECT_EQ(g->jacobian({0.1, 0.2}), g->jacobian({0.9, 0.4}));
    EXPECT_EQ(g->map_point({1, 1}), (Vec2{3.5, 0}));
    EXPECT_THROW(make_geometry("affine", {1, 0, 0, -1, 0, 0}, {1, 1}), std::invalid_argument);
}

TEST(Geometry, AnnulusDerivativesMatchDifferences)
{
    const auto g = make_geometry("annulus", {1, 2}, {1, 1});
    for (const Vec2 t : {Vec2{0.2, 0.3}, Vec2{0.9, 0.7}}) {
        expect_jacobian_matches_differences(*g, t);
        EXPECT_GT(det(g->jacobian(t)), 0.0);
    }
    const auto x = g->map_point({1, 1});
    EXPECT_NEAR(x[0], 0.0, 1e-15);
    EXPECT_NEAR(x[1], 2.0, 1e-15);
}

TEST(Geometry, BilinearDerivativesMatchDifferences)
{
    const auto g = make_geometry("bilinear", {0, 0, 2, 0.2, 2.2, 1.5, -0.1, 1}, {2, 1});
    expect_jacobian_matches_differences(*g, {0.4, 0.6});
    expect_jacobian_matches_differences(*g, {1.7, 0.1});
}

TEST(Geometry, UnknownNameAndWrongParameterCount)
{
    EXPECT_THROW(make_geometry("torus", {}, {1, 1}), std::invalid_argument);
    EXPECT_THROW(make_geometry("annulus", {1}, {1, 1}), std::invalid_argument);
}

TEST(PhysicalVolume, BoxAreaAndAffineScaling)
{
    DyadicBox<2> b;
    b.level = 3;
    b.lower = {Dyadic(1, 2), Dyadic(0)};
    b.upper = {Dyadic(1, 1), Dyadic(1, 1)};
    EXPECT_NEAR(physical_volume(IdentityMap(), b), 1.0 / 8.0, 1e-15);
    const AffineMap twice(Mat2{{{2, 0}, {0, 1}}}, Vec2{0, 0});
    EXPECT_NEAR(physical_volume(twice, b), 2.0 / 8.0, 1e-15);
}

TEST(PhysicalVolume, AnnulusSumsToQuarterRing)
{
    const auto g = make_geometry("annulus", {1, 2}, {2, 1});
    const auto m = uniform_mesh(ParamDomain<2>({2, 1}, {3, 3}), 3);
    double v = 0.0;
    for (ElementId e : m.elements())
        v += physical_volume(*g, m.box(e));
    EXPECT_NEAR(v, std::numbers::pi / 4 * 3, 1e-12);
}

TEST(Assemble, DisjointSupportsGiveZeroEntry)
{
    const auto b = basis_of(uniform_mesh(ParamDomain<2>({4, 1}, {3, 3}), 0));
    const auto sys = assemble(*b, IdentityMap(), presets::sine());
    int first = -1, last = -1;
    for (int a : b->interior()) {
        const auto s = b->anchor(a).support();
        if (s.upper[0] <= Dyadic(2))
            first = first < 0 ? a : first;
        if (s.lower[0] >= Dyadic(2))
            last = a;
    }
    ASSERT_GE(first, 0);
    ASSERT_GE(last, 0);
    EXPECT_EQ(sys.K.coeff(b->dof(first), b->dof(last)), 0.0);
}

TEST(Assemble, SymmetricWithoutConvection)
{
    std::mt19937_64 rng(7);
    const auto b = basis_of(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng));
    const auto g = make_geometry("annulus", {1, 2}, {1, 1});
    const auto sys = assemble(*b, *g, presets::sine());
    const SparseMatrix KT = sys.K.transpose();
    EXPECT_LT(SparseMatrix(sys.K - KT).coeffs().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Assemble, ConvectionBreaksSymmetry)
{
    const auto b = basis_of(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4));
    const auto sys = assemble(*b, IdentityMap(), presets::convection_diffusion());
    const SparseMatrix KT = sys.K.transpose();
    EXPECT_GT(SparseMatrix(sys.K - KT).coeffs().cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Solve, ZeroLoadGivesZeroSolution)
{
    const auto b = basis_of(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4));
    PDEData zero;
    const auto sol = solve(b, IdentityMap(), zero);
    EXPECT_EQ(sol.coeffs.size(), static_cast<Eigen::Index>(b->dof_count()));
    EXPECT_EQ(sol.coeffs.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(h1_error(sol, IdentityMap(), [](const Vec2&) { return 0.0; }, [](const Vec2&) { return Vec2{0, 0}; }), 0.0);
}

TEST(Solve, ReproducesSplineSolutions)
{
    std::mt19937_64 rng(31);
    const auto rep = verify::exact_representation(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng), rng);
    EXPECT_LT(rep.h1_error, 1e-8);
    EXPECT_GT(rep.u_norm, 1e-2);
}

TEST(Solve, NonsymmetricProblemConverges)
{
    const auto pde = presets::convection_diffusion();
    double prev = 1e300;
    for (int k = 2; k <= 6; k += 2) {
        const auto sol = solve(basis_of(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), k)), IdentityMap(), pde);
        const double e = h1_error(sol, IdentityMap(), pde.u, pde.grad_u);
        EXPECT_LT(e, prev / 3);
        prev = e;
    }
}

TEST(Solve, GalerkinOrthogonality)
{
    std::mt19937_64 rng(37);
    const auto coarse_mesh = oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4, rng);
    const auto fine_mesh = refine(coarse_mesh, oracle::random_marks(coarse_mesh, rng, 0.4));
    // A polynomial load keeps both load vectors exact.
    PDEData pde;
    pde.f = [](const Vec2& x) { return 1.0 + x[0] * x[1]; };
    const auto coarse = solve(basis_of(coarse_mesh), IdentityMap(), pde);
    const auto fine = solve(basis_of(fine_mesh), IdentityMap(), pde);
    EXPECT_LT(verify::galerkin_defect(coarse, fine), 1e-9);
}

TEST(Solve, SingularSystemRaisesSolverError)
{
    SparseMatrix K(2, 2);
    K.insert(0, 0) = 1.0;
    Vector F(2);
    F << 1.0, 1.0;
    EXPECT_THROW((void)solve_system(K, F, true), SolverError);
}

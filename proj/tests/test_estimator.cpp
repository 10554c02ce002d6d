#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "tsafem/estimator.hpp"
#include "tsafem/testing/oracles.hpp"
#include "tsafem/verify.hpp"

using namespace tsafem;

namespace {

std::shared_ptr<const TSplineBasis<2>> basis_of(TMesh<2> m)
{
    return std::make_shared<const TSplineBasis<2>>(std::make_shared<const TMesh<2>>(std::move(m)));
}

}  // namespace

TEST(FacetSegments, TwoByTwoGrid)
{
    const auto segs = facet_segments(TMesh<2>(ParamDomain<2>({2, 2}, {3, 3})));
    ASSERT_EQ(segs.size(), 4u);
    for (const auto& s : segs)
        EXPECT_EQ(s.length(), Dyadic(1));
}

TEST(FacetSegments, HangingNodeSplitsCoarseFace)
{
    TMesh<2> m(ParamDomain<2>({2, 1}, {3, 3}));
    m = m.bisected({m.locate(std::array<double, 2>{1.5, 0.5})});
    m = m.bisected({m.locate(std::array<double, 2>{1.25, 0.5})});
    const ElementId coarse = m.locate(std::array<double, 2>{0.5, 0.5});
    int on_face = 0;
    for (const auto& s : facet_segments(m))
        if (s.first == coarse && s.direction == 0) {
            ++on_face;
            EXPECT_EQ(s.position, Dyadic(1));
            EXPECT_EQ(s.length(), Dyadic(1, 1));
        }
    EXPECT_EQ(on_face, 2);
}

TEST(FacetSegments, LengthsAddUpToInteriorSkeleton)
{
    std::mt19937_64 rng(3);
    const auto m = oracle::random_refined_mesh(ParamDomain<2>({2, 1}, {3, 3}), 7, rng);
    // Interior skeleton length = (total perimeter - domain perimeter) / 2.
    Dyadic perim(0);
    for (ElementId e : m.elements())
        perim = perim + (m.box(e).side(0) + m.box(e).side(1)) * Dyadic(2);
    Dyadic len(0);
    for (const auto& s : facet_segments(m))
        len = len + s.length();
    EXPECT_EQ(len * Dyadic(2), perim - Dyadic(6));
}

TEST(Estimator, VanishesOnSplineSolutions)
{
    std::mt19937_64 rng(5);
    const auto rep = verify::exact_representation(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng), rng);
    EXPECT_LT(rep.eta, 1e-7 * rep.load);
}

TEST(Estimator, JumpsVanishForSmoothSplines)
{
    std::mt19937_64 rng(9);
    const auto b = basis_of(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng));
    const auto pde = presets::sine();
    const auto ind = estimate(solve(b, IdentityMap(), pde), pde, IdentityMap());
    EXPECT_GT(ind.volume_total(), 0.0);
    EXPECT_LT(ind.jump_total(), 1e-20 * std::max(1.0, ind.volume_total()));
    EXPECT_EQ(ind.size(), b->mesh_ref().size());
}

TEST(Estimator, DecaysWithH1ErrorUnderUniformRefinement)
{
    const auto pde = presets::sine();
    std::vector<double> eta, err;
    for (int k = 2; k <= 8; k += 2) {
        const auto sol = solve(basis_of(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), k)), IdentityMap(), pde);
        eta.push_back(estimate(sol, pde, IdentityMap()).eta());
        err.push_back(h1_error(sol, IdentityMap(), pde.u, pde.grad_u));
    }
    for (std::size_t i = 1; i < eta.size(); ++i) {
        EXPECT_LT(eta[i], eta[i - 1] / 4);
        EXPECT_LT(err[i], err[i - 1] / 4);
    }
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        lo = std::min(lo, err[i] / eta[i]);
        hi = std::max(hi, err[i] / eta[i]);
    }
    EXPECT_LT(hi / lo, 2.0);
}

TEST(Oscillations, VanishForPolynomialResidual)
{
    // U = 0 and f = x^2 y on the identity map: the residual is a polynomial of degree <= q.
    const auto b = basis_of(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 3));
    PDEData pde;
    pde.f = [](const Vec2& x) { return x[0] * x[0] * x[1]; };
    DiscreteSolution zero{b, Vector::Zero(static_cast<Eigen::Index>(b->dof_count()))};
    const auto osc = oscillations(zero, pde, IdentityMap());
    EXPECT_EQ(osc.orders, (std::array<int, 2>{5, 5}));
    for (double v : osc.element)
        EXPECT_LT(v, 1e-20);
}

TEST(Oscillations, LowOrderProjectionLeavesRemainder)
{
    const auto b = basis_of(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 2));
    PDEData pde;
    pde.f = [](const Vec2& x) { return std::exp(x[0] + 2 * x[1]); };
    DiscreteSolution zero{b, Vector::Zero(static_cast<Eigen::Index>(b->dof_count()))};
    EstimatorOptions lo, hi;
    lo.orders = {1, 1};
    hi.orders = {5, 5};
    const double osc_lo = oscillations(zero, pde, IdentityMap(), lo).osc();
    const double osc_hi = oscillations(zero, pde, IdentityMap(), hi).osc();
    EXPECT_GT(osc_lo, 1e-4);
    EXPECT_LT(osc_hi, osc_lo * 1e-3);
}

TEST(Oscillations, SmallerThanEstimatorOnSmoothData)
{
    const auto pde = presets::sine();
    const auto sol = solve(basis_of(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6)), IdentityMap(), pde);
    const auto [ind, osc] = estimate_with_oscillations(sol, pde, IdentityMap());
    EXPECT_LT(osc.osc(), ind.eta());
    EXPECT_NEAR(ind.eta(), estimate(sol, pde, IdentityMap()).eta(), 1e-15 * ind.eta());
}

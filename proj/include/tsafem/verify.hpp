#ifndef TSAFEM_VERIFY_HPP
#define TSAFEM_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsafem/adaptive.hpp"
#include "tsafem/element_eval.hpp"
#include "tsafem/mesh_io.hpp"
#include "tsafem/testing/oracles.hpp"

namespace tsafem::verify {

struct Check {
    std::string suite;
    std::string name;
    bool passed = false;
    std::string detail;
};

using Report = std::vector<Check>;

inline bool all_passed(const Report& r)
{
    return std::all_of(r.begin(), r.end(), [](const Check& c) { return c.passed; });
}

namespace detail {

template <class... Args>
std::string cat(const Args&... args)
{
    std::ostringstream o;
    o.precision(6);
    (o << ... << args);
    return o.str();
}

inline double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Golden knot vectors

/// Non-admissible mesh on (0,8)^2 with degrees (5,3) built by raw bisections.
inline TMesh<2> golden_knot_mesh()
{
    TMesh<2> mesh(ParamDomain<2>({8, 8}, {5, 3}));
    auto split = [&](double x, double y) { mesh = mesh.bisected({mesh.locate(std::array<double, 2>{x, y})}); };
    split(0.5, 0.5);    // [0,1]^2
    split(0.5, 1.5);    // [0,1]x[1,2]
    split(0.25, 1.5);   // its child [0,0.5]x[1,2]
    split(0.5, 3.5);    // [0,1]x[3,4]
    split(4.5, 4.5);    // [4,5]x[4,5]
    split(3.5, 2.5);    // [3,4]x[2,3]
    split(3.25, 2.5);   // its child [3,3.5]x[2,3]
    split(7.5, 2.5);    // [7,8]x[2,3]
    split(7.25, 2.5);   // both children
    split(7.75, 2.5);
    split(7.5, 7.5);    // [7,8]^2
    return mesh;
}

struct GoldenKnots {
    std::array<double, 2> node;
    int direction;
    std::vector<double> knots;
};

inline std::vector<GoldenKnots> golden_knot_table()
{
    return {
        {{0, 0}, 0, {0, 0, 0, 0, 0.5, 1, 2}},      {{0, 0}, 1, {0, 0, 0, 1, 1.5}},
        {{3, 4}, 0, {0.5, 1, 2, 3, 4, 4.5, 5}},    {{3, 4}, 1, {2.5, 3, 4, 5, 6}},
        {{7.5, 2}, 0, {5, 6, 7, 7.5, 8, 8, 8}},    {{7.5, 2}, 1, {0, 1, 2, 2.5, 3}},
        {{9, 9}, 0, {7, 7.5, 8, 8, 8, 8, 8}},      {{9, 9}, 1, {7, 8, 8, 8, 8}},
    };
}

/// Number of golden entries whose computed knot vector differs, with a
/// description of the first mismatch.
inline std::pair<int, std::string> golden_knot_mismatches()
{
    const ExtendedMesh<2> ext(std::make_shared<const TMesh<2>>(golden_knot_mesh()));
    int bad = 0;
    std::string first;
    for (const auto& g : golden_knot_table()) {
        DyadicPoint<2> z{Dyadic(static_cast<std::int64_t>(g.node[0] * 2), 1),
                         Dyadic(static_cast<std::int64_t>(g.node[1] * 2), 1)};
        const auto kv = local_knot_vectors(ext, z);
        std::vector<double> got;
        for (const auto& k : kv[static_cast<std::size_t>(g.direction)])
            got.push_back(k.to_double());
        if (got != g.knots) {
            ++bad;
            if (first.empty()) {
                first = detail::cat("node (", g.node[0], ",", g.node[1], ") dir ", g.direction + 1, ":");
                for (double v : got)
                    first += detail::cat(" ", v);
            }
        }
    }
    return {bad, first};
}

// ---------------------------------------------------------------------------
// Mesh properties

/// Pairwise interior-disjoint elements whose volumes add up to the domain.
template <int Dim>
bool exact_cover(const TMesh<Dim>& mesh)
{
    Dyadic vol(0);
    for (ElementId id : mesh.elements())
        vol += mesh.box(id).volume();
    if (vol != Dyadic(mesh.domain().cell_count()))
        return false;
    for (ElementId a : mesh.elements())
        for (ElementId b : mesh.overlapping(mesh.box(a)))
            if (b != a)
                return false;
    return true;
}

template <int Dim>
bool level_side_consistent(const TMesh<Dim>& mesh)
{
    for (ElementId id : mesh.elements()) {
        const auto& b = mesh.box(id);
        for (int i = 0; i < Dim; ++i)
            if (b.side(i) != Dyadic(1).halved(DyadicBox<Dim>::side_exponent(b.level, i)))
                return false;
        if (b.level_from_sides() != b.level)
            return false;
    }
    return true;
}

/// Frame cells are disjoint, fill the extended domain outside the mesh, have
/// unit extent in every direction where they lie outside the domain and
/// reuse the boundary subdivision in the other directions.
template <int Dim>
bool frame_consistent(const ExtendedMesh<Dim>& ext)
{
    const auto& dom = ext.domain();
    const auto& cells = ext.frame_cells();
    Dyadic vol(0), ext_vol(1);
    for (int i = 0; i < Dim; ++i)
        ext_vol = ext_vol * Dyadic(dom.sizes[i] + 2 * dom.degrees[i]);
    for (const auto& c : cells) {
        vol += c.volume();
        for (int i = 0; i < Dim; ++i) {
            const bool outside = c.upper[i] <= Dyadic(0) || c.lower[i] >= Dyadic(dom.sizes[i]);
            if (outside && c.side(i) != Dyadic(1))
                return false;
        }
    }
    if (vol + Dyadic(dom.cell_count()) != ext_vol)
        return false;
    for (std::size_t a = 0; a < cells.size(); ++a)
        for (std::size_t b = a + 1; b < cells.size(); ++b)
            if (cells[a].overlaps(cells[b]))
                return false;
    // Tangential intervals of cells in a face strip are traces of boundary elements.
    const auto& mesh = ext.interior();
    for (const auto& c : cells) {
        int outside = 0, dir = -1;
        for (int i = 0; i < Dim; ++i)
            if (c.upper[i] <= Dyadic(0) || c.lower[i] >= Dyadic(dom.sizes[i])) {
                ++outside;
                dir = i;
            }
        if (outside != 1)
            continue;
        DyadicBox<Dim> probe = c;
        probe.lower[dir] = c.upper[dir] <= Dyadic(0) ? Dyadic(0) : Dyadic(dom.sizes[dir]) - Dyadic(1, 30);
        probe.upper[dir] = c.upper[dir] <= Dyadic(0) ? Dyadic(1, 30) : Dyadic(dom.sizes[dir]);
        const auto hits = mesh.overlapping(probe);
        bool matched = false;
        for (ElementId id : hits) {
            const auto& b = mesh.box(id);
            bool same = true;
            for (int j = 0; j < Dim; ++j)
                if (j != dir)
                    same = same && b.lower[j] == c.lower[j] && b.upper[j] == c.upper[j];
            matched = matched || same;
        }
        if (!matched)
            return false;
    }
    return true;
}

inline Report mesh_suite(std::uint64_t seed)
{
    Report r;
    auto add = [&](const std::string& n, bool ok, const std::string& d = {}) { r.push_back({"mesh", n, ok, d}); };
    std::mt19937_64 rng(seed);

    const auto u4 = uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4);
    const auto u23 = uniform_mesh(ParamDomain<2>({2, 3}, {3, 3}), 1);
    const auto u3 = uniform_mesh(ParamDomain<3>({1, 2, 1}, {3, 3, 3}), 3);
    add("uniform element counts", u4.size() == 16 && u23.size() == 12 && u3.size() == 16,
        detail::cat(u4.size(), " ", u23.size(), " ", u3.size()));

    bool cover = true, sides = true;
    for (int s = 0; s < 5; ++s) {
        const auto m2 = oracle::random_refined_mesh(ParamDomain<2>({2, 2}, {3, 3}), 6, rng);
        const auto m3 = oracle::random_refined_mesh(ParamDomain<3>({1, 1, 2}, {3, 3, 3}), 4, rng);
        cover = cover && exact_cover(m2) && exact_cover(m3);
        sides = sides && level_side_consistent(m2) && level_side_consistent(m3);
    }
    add("exact cover and disjointness", cover);
    add("level matches side lengths", sides);

    const ExtendedMesh<2> e0(std::make_shared<const TMesh<2>>(ParamDomain<2>({1, 1}, {3, 3})));
    add("initial frame has 48 unit cells", e0.frame_cells().size() == 48, detail::cat(e0.frame_cells().size()));
    add("initial mesh has 16 active nodes", e0.active_nodes().size() == 16, detail::cat(e0.active_nodes().size()));
    const auto line = e0.skeleton_intersections(DyadicPoint<2>{Dyadic(0), Dyadic(0)}, 0);
    std::vector<double> lv;
    for (const auto& v : line)
        lv.push_back(v.to_double());
    add("skeleton line through the origin", lv == std::vector<double>{-3, -2, -1, 0, 1, 2, 3, 4});

    bool frames = frame_consistent(e0);
    for (int s = 0; s < 3; ++s) {
        auto m = std::make_shared<const TMesh<2>>(oracle::random_refined_mesh(ParamDomain<2>({2, 1}, {5, 3}), 6, rng));
        frames = frames && frame_consistent(ExtendedMesh<2>(m));
    }
    add("frame cells follow the boundary subdivision", frames);

    bool trip = true;
    for (int s = 0; s < 3; ++s) {
        const auto m = oracle::random_refined_mesh(ParamDomain<2>({2, 2}, {3, 3}), 5, rng);
        const auto j = mesh_to_json(m);
        const auto back = mesh_from_json<2>(nlohmann::json::parse(j.dump()));
        trip = trip && back.same_content(m) && mesh_to_json(back).dump() == j.dump();
    }
    add("mesh dump round trip", trip);
    return r;
}

// ---------------------------------------------------------------------------
// Refinement properties

struct RefineFuzz {
    int steps = 0;
    int oracle_mismatches = 0;
    int inadmissible = 0;
    int growth_failures = 0;
    int succession_failures = 0;
};

/// Every step: refine against the naive closure, admissibility, element
/// count growth by the closed set, and successor exactness.
template <int Dim>
RefineFuzz refine_fuzz(const ParamDomain<Dim>& dom, int sequences, int steps, std::mt19937_64& rng, double prob = 0.15)
{
    RefineFuzz f;
    for (int s = 0; s < sequences; ++s) {
        TMesh<Dim> mesh(dom);
        for (int k = 0; k < steps; ++k) {
            const auto marks = oracle::random_marks(mesh, rng, prob);
            const auto closed = closure(mesh, marks);
            auto next = refine(mesh, marks);
            ++f.steps;
            if (!next.same_content(oracle::naive_refine(mesh, marks)))
                ++f.oracle_mismatches;
            if (!check_admissibility(next).admissible)
                ++f.inadmissible;
            if (next.size() != mesh.size() + closed.size() || next.size() > 2 * mesh.size())
                ++f.growth_failures;
            for (ElementId id : mesh.elements()) {
                const auto& b = mesh.box(id);
                Dyadic vol(0);
                bool halves = true;
                for (ElementId c : next.overlapping(b)) {
                    const auto& cb = next.box(c);
                    if (!b.contains(cb)) {
                        halves = false;
                        break;
                    }
                    vol += cb.volume();
                    if (cb != b && cb.volume() + cb.volume() > b.volume())
                        halves = false;
                }
                if (!halves || vol != b.volume())
                    ++f.succession_failures;
            }
            mesh = std::move(next);
        }
    }
    return f;
}

struct OverlayFuzz {
    int pairs = 0;
    int oracle_mismatches = 0;
    int inadmissible = 0;
    int count_violations = 0;
};

template <int Dim>
OverlayFuzz overlay_fuzz(const ParamDomain<Dim>& dom, int pairs, std::mt19937_64& rng)
{
    OverlayFuzz f;
    const std::size_t n0 = TMesh<Dim>(dom).size();
    for (int s = 0; s < pairs; ++s) {
        std::uniform_int_distribution<int> depth(1, 6);
        const auto a = oracle::random_refined_mesh(dom, depth(rng), rng);
        const auto b = oracle::random_refined_mesh(dom, depth(rng), rng);
        const auto o = overlay(a, b);
        ++f.pairs;
        if (o.sorted_boxes() != oracle::overlay_boxes(a, b))
            ++f.oracle_mismatches;
        if (!check_admissibility(o).admissible)
            ++f.inadmissible;
        if (!(o.size() <= a.size() + b.size() - n0))
            ++f.count_violations;
    }
    return f;
}

/// Marks the element at the lower left corner `steps` times and returns
/// (#T_L - #T_0) / sum #M.
inline double corner_closure_ratio(const ParamDomain<2>& dom, int steps)
{
    TMesh<2> mesh(dom);
    const std::size_t n0 = mesh.size();
    std::size_t marked = 0;
    for (int s = 0; s < steps; ++s) {
        const ElementId e = mesh.locate(std::array<double, 2>{1e-12, 1e-12});
        mesh = refine(mesh, {e});
        ++marked;
    }
    return static_cast<double>(mesh.size() - n0) / static_cast<double>(marked);
}

/// Neighbors of each child, less its sibling, lie inside neighbors of the
/// father other than the father itself.
inline bool neighbor_monotone(const TMesh<2>& coarse, const TMesh<2>& fine)
{
    for (ElementId f : coarse.elements()) {
        const auto kids = fine.overlapping(coarse.box(f));
        if (kids.size() != 2)
            continue;
        const auto fathers = neighbors(coarse, f);
        for (ElementId c : kids)
            for (ElementId n : neighbors(fine, c)) {
                if (std::find(kids.begin(), kids.end(), n) != kids.end())
                    continue;
                bool inside = false;
                for (ElementId m : fathers)
                    inside = inside || (m != f && coarse.box(m).contains(fine.box(n)));
                if (!inside)
                    return false;
            }
    }
    return true;
}

inline Report refine_suite(std::uint64_t seed)
{
    Report r;
    auto add = [&](const std::string& n, bool ok, const std::string& d = {}) { r.push_back({"refine", n, ok, d}); };
    std::mt19937_64 rng(seed);

    const ParamDomain<2> d33({1, 1}, {3, 3});
    const auto r0 = radius(d33, 0), r1 = radius(d33, 1);
    const auto r3 = radius(ParamDomain<3>({1, 1, 1}, {3, 3, 3}), 0);
    add("neighbor radii", r0 == std::array<Dyadic, 2>{Dyadic(3, 1), Dyadic(5, 1)} &&
                              r1 == std::array<Dyadic, 2>{Dyadic(5, 2), Dyadic(3, 1)} &&
                              r3 == std::array<Dyadic, 3>{Dyadic(9, 1), Dyadic(9, 1), Dyadic(9, 1)});
    bool radii = true;
    for (int k = 0; k < 12; ++k) {
        radii = radii && radius(ParamDomain<2>({1, 1}, {5, 3}), k) == oracle::neighbor_radius(ParamDomain<2>({1, 1}, {5, 3}), k);
        radii = radii && radius(ParamDomain<3>({1, 1, 1}, {3, 5, 3}), k) ==
                             oracle::neighbor_radius(ParamDomain<3>({1, 1, 1}, {3, 5, 3}), k);
    }
    add("radii match the case table", radii);

    const auto f2 = refine_fuzz(ParamDomain<2>({2, 2}, {3, 3}), 100, 6, rng);
    add("refine equals naive closure (100 sequences)", f2.oracle_mismatches == 0, detail::cat(f2.oracle_mismatches, " of ", f2.steps));
    add("refine output admissible", f2.inadmissible == 0, detail::cat(f2.inadmissible));
    add("element growth equals closed set", f2.growth_failures == 0);
    add("successors tile their fathers", f2.succession_failures == 0);

    const auto f3 = refine_fuzz(ParamDomain<3>({1, 1, 1}, {3, 3, 3}), 15, 4, rng, 0.1);
    add("d=3 refine equals naive closure", f3.oracle_mismatches == 0 && f3.growth_failures == 0 && f3.succession_failures == 0,
        detail::cat(f3.oracle_mismatches, " of ", f3.steps));
    add("d=3 refine output admissible", f3.inadmissible == 0);

    const auto ov = overlay_fuzz(ParamDomain<2>({1, 1}, {3, 3}), 50, rng);
    add("overlay equals minimal common boxes", ov.oracle_mismatches == 0, detail::cat(ov.oracle_mismatches));
    add("overlay admissible", ov.inadmissible == 0);
    add("overlay count inequality", ov.count_violations == 0, detail::cat(ov.count_violations));

    bool agree = true, oracle_nb = true, mono = true;
    for (int s = 0; s < 8; ++s) {
        const auto m = oracle::random_refined_mesh(ParamDomain<2>({2, 2}, {3, 3}), 6, rng);
        for (ElementId t : m.elements()) {
            const auto n = neighbors(m, t);
            agree = agree && n == neighbors_by_midpoint(m, t);
            oracle_nb = oracle_nb && n == oracle::naive_neighbors(m, t);
        }
        mono = mono && neighbor_monotone(m, refine(m, oracle::random_marks(m, rng, 0.2)));
    }
    add("open-box and midpoint neighbors coincide", agree);
    add("neighbors match full scan", oracle_nb);
    add("neighbor monotonicity under bisection", mono);

    const double ratio = corner_closure_ratio(ParamDomain<2>({1, 1}, {3, 3}), 30);
    add("corner closure ratio <= 20", ratio <= 20.0, detail::cat(ratio));

    // A level-0 element beside a level-2 element, built without closure.
    TMesh<2> raw(ParamDomain<2>({2, 1}, {3, 3}));
    raw = raw.bisected({raw.locate(std::array<double, 2>{0.5, 0.5})});
    raw = raw.bisected({raw.locate(std::array<double, 2>{0.75, 0.5})});
    const auto rep = check_admissibility(raw);
    add("raw level jump is rejected", !rep.admissible && !rep.level_jumps.empty());
    return r;
}

// ---------------------------------------------------------------------------
// Basis properties

inline double partition_of_unity_error(const TSplineBasis<2>& basis, int points, std::mt19937_64& rng,
                                       double* grad_error = nullptr)
{
    const auto& dom = basis.domain();
    double err = 0.0, gerr = 0.0;
    for (int k = 0; k < points; ++k) {
        const std::array<double, 2> t{detail::uniform01(rng) * dom.sizes[0], detail::uniform01(rng) * dom.sizes[1]};
        double s = 0.0, gx = 0.0, gy = 0.0;
        for (const auto& v : eval_basis(basis, t)) {
            s += v.value;
            gx += v.grad[0];
            gy += v.grad[1];
        }
        err = std::max(err, std::abs(s - 1.0));
        gerr = std::max({gerr, std::abs(gx), std::abs(gy)});
    }
    if (grad_error)
        *grad_error = gerr;
    return err;
}

/// Largest value of an interior function on the boundary, and the smallest
/// over boundary functions of their largest boundary value.
inline std::pair<double, double> boundary_behaviour(const TSplineBasis<2>& basis, int samples = 40)
{
    const auto& dom = basis.domain();
    double interior_max = 0.0, boundary_min = 1e300;
    for (std::size_t a = 0; a < basis.size(); ++a) {
        const auto sup = basis.anchor(static_cast<int>(a)).support();
        double best = 0.0;
        for (int side = 0; side < 4; ++side) {
            const int fixed_dir = side / 2;
            const double fixed = side % 2 ? dom.sizes[fixed_dir] : 0.0;
            const int run = 1 - fixed_dir;
            const double lo = sup.lower[run].to_double(), hi = sup.upper[run].to_double();
            for (int k = 0; k < samples; ++k) {
                std::array<double, 2> t{};
                t[static_cast<std::size_t>(fixed_dir)] = fixed;
                t[static_cast<std::size_t>(run)] = lo + (k + 0.5) / samples * (hi - lo);
                best = std::max(best, std::abs(eval_anchor(basis, static_cast<int>(a), t).value));
            }
        }
        if (basis.dof(static_cast<int>(a)) >= 0)
            interior_max = std::max(interior_max, best);
        else
            boundary_min = std::min(boundary_min, best);
    }
    return {interior_max, boundary_min};
}

/// Largest mismatch of values, gradients and Hessians of a random spline
/// between the two sides of interior mesh lines.
inline double smoothness_defect(const TSplineBasis<2>& basis, std::mt19937_64& rng)
{
    std::vector<double> c(basis.size());
    for (auto& v : c)
        v = detail::uniform01(rng) - 0.5;
    auto field = [&](const std::array<double, 2>& t) {
        std::array<double, 6> out{};
        for (int a : basis.supported_on(basis.mesh_ref().locate(t))) {
            const auto v = eval_anchor(basis, a, t);
            const double w = c[static_cast<std::size_t>(a)];
            out[0] += w * v.value;
            out[1] += w * v.grad[0];
            out[2] += w * v.grad[1];
            out[3] += w * v.hess[0][0];
            out[4] += w * v.hess[0][1];
            out[5] += w * v.hess[1][1];
        }
        return out;
    };
    double worst = 0.0;
    for (const auto& s : facet_segments(basis.mesh_ref())) {
        const int i = s.direction, j = 1 - i;
        for (double frac : {0.3, 0.7}) {
            std::array<double, 2> lo{}, hi{};
            const double x = s.position.to_double();
            lo[static_cast<std::size_t>(i)] = std::nextafter(x, -1e300);
            hi[static_cast<std::size_t>(i)] = std::nextafter(x, 1e300);
            lo[static_cast<std::size_t>(j)] = hi[static_cast<std::size_t>(j)] =
                s.from.to_double() + frac * s.length().to_double();
            const auto a = field(lo), b = field(hi);
            for (std::size_t k = 0; k < 6; ++k)
                worst = std::max(worst, std::abs(a[k] - b[k]));
        }
    }
    return worst;
}

/// Smallest eigenvalue of the mass matrix of all blending functions divided
/// by the largest.
inline double gram_conditioning(const TSplineBasis<2>& basis)
{
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    const auto& dom = basis.domain();
    for (ElementId e : basis.mesh_ref().elements()) {
        const ElementRule rule(basis, e, dom.degrees[0] + 1, dom.degrees[1] + 1);
        const ElementBasisTable tab(basis, e, rule.xs, rule.ys);
        for (std::size_t i = 0; i < rule.xs.size(); ++i)
            for (std::size_t j = 0; j < rule.ys.size(); ++j) {
                const double w = rule.wx[i] * rule.wy[j];
                for (std::size_t a = 0; a < tab.size(); ++a)
                    for (std::size_t b = 0; b < tab.size(); ++b)
                        M(tab.anchors()[a], tab.anchors()[b]) += w * tab.value(a, i, j) * tab.value(b, i, j);
            }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    return es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff();
}

/// Support counts of random meshes grouped by maximal level band.
struct SupportCounts {
    std::size_t shallow = 0;  // max over meshes of max level <= 8
    std::size_t deep = 0;     // max over deeper meshes
};

inline SupportCounts support_counts(const ParamDomain<2>& dom, std::mt19937_64& rng)
{
    SupportCounts s;
    for (int run = 0; run < 4; ++run) {
        TMesh<2> mesh(dom);
        for (int step = 0; step < 24; ++step) {
            // Corner marking drives the level up quickly; random marks add variety.
            auto marks = oracle::random_marks(mesh, rng, 0.05);
            marks.push_back(mesh.locate(std::array<double, 2>{0.3 * run / 4 + 1e-9, 1e-9}));
            mesh = refine(mesh, marks);
            if (step % 4 != 3)
                continue;
            const TSplineBasis<2> b(std::make_shared<const TMesh<2>>(mesh));
            auto& slot = mesh.max_level() <= 8 ? s.shallow : s.deep;
            slot = std::max(slot, b.max_support_count());
        }
    }
    return s;
}

inline Report basis_suite(std::uint64_t seed)
{
    Report r;
    auto add = [&](const std::string& n, bool ok, const std::string& d = {}) { r.push_back({"basis", n, ok, d}); };
    std::mt19937_64 rng(seed);

    const auto [gbad, gfirst] = golden_knot_mismatches();
    add("golden local knot vectors", gbad == 0, gfirst);

    double dd = 0.0;
    for (int k = 0; k < 300; ++k) {
        const int p = 1 + 2 * static_cast<int>(detail::uniform01(rng) * 3);
        std::vector<double> x;
        double v = 0.0;
        for (int i = 0; i < p + 2; ++i) {
            if (i == 0 || detail::uniform01(rng) > 0.3)
                v += std::floor(detail::uniform01(rng) * 4) * 0.25;
            x.push_back(v);
        }
        if (x.back() == x.front())
            continue;
        const double t = x.front() + detail::uniform01(rng) * (x.back() - x.front());
        for (int d = 0; d <= std::min(2, p); ++d) {
            const double a = bspline_1d(x, t, d), b = oracle::divided_difference_bspline(x, t, d);
            dd = std::max(dd, std::abs(a - b) / std::max(1.0, std::abs(b)));
        }
    }
    add("B-splines match divided differences", dd < 1e-9, detail::cat(dd));

    double pu = 0.0, pug = 0.0;
    int knot_bad = 0, dual_bad = 0;
    double bnd_int = 0.0, bnd_min = 1e300, smooth = 0.0;
    for (int s = 0; s < 12; ++s) {
        const ParamDomain<2> dom({1 + s % 2, 1 + s % 3}, s % 2 ? std::array<int, 2>{5, 3} : std::array<int, 2>{3, 3});
        const auto mesh = std::make_shared<const TMesh<2>>(oracle::random_refined_mesh(dom, 5 + s % 4, rng));
        const TSplineBasis<2> b(mesh);
        double g = 0.0;
        pu = std::max(pu, partition_of_unity_error(b, 1000, rng, &g));
        pug = std::max(pug, g);
        for (const auto& a : b.anchors())
            for (int i = 0; i < 2; ++i)
                knot_bad += oracle::local_knots(b.extended(), a.node, i) != a.knots[static_cast<std::size_t>(i)];
        dual_bad += !dual_compatibility_report(b).compatible;
        const auto [bi, bm] = boundary_behaviour(b);
        bnd_int = std::max(bnd_int, bi);
        bnd_min = std::min(bnd_min, bm);
        smooth = std::max(smooth, smoothness_defect(b, rng));
    }
    add("partition of unity", pu < 1e-10, detail::cat(pu));
    add("gradients of the partition vanish", pug < 1e-8, detail::cat(pug));
    add("knot vectors match skeleton scan", knot_bad == 0, detail::cat(knot_bad));
    add("dual compatibility on admissible meshes", dual_bad == 0, detail::cat(dual_bad));
    add("interior functions vanish on the boundary", bnd_int < 1e-12, detail::cat(bnd_int));
    add("boundary functions are visible on the boundary", bnd_min > 1e-3, detail::cat(bnd_min));
    add("C2 across mesh lines", smooth < 1e-9, detail::cat(smooth));

    const TSplineBasis<2> b0(std::make_shared<const TMesh<2>>(ParamDomain<2>({1, 1}, {3, 3})));
    add("initial basis has 16 anchors and 4 dofs", b0.size() == 16 && b0.dof_count() == 4);
    bool dims = true;
    for (int k = 0; k <= 5; ++k) {
        const ParamDomain<2> dom({2, 1}, {5, 3});
        const TSplineBasis<2> b(std::make_shared<const TMesh<2>>(uniform_mesh(dom, k)));
        std::size_t full = 1, inner = 1;
        for (int i = 0; i < 2; ++i) {
            const std::size_t cells = static_cast<std::size_t>(dom.sizes[i]) << DyadicBox<2>::side_exponent(k, i);
            full *= cells + static_cast<std::size_t>(dom.degrees[i]);
            inner *= cells + static_cast<std::size_t>(dom.degrees[i]) - 2;
        }
        dims = dims && b.size() == full && b.dof_count() == inner;
    }
    add("uniform dimensions match tensor splines", dims);

    double nest = 0.0;
    for (int s = 0; s < 10; ++s) {
        const ParamDomain<2> dom({1, 1}, s % 2 ? std::array<int, 2>{5, 3} : std::array<int, 2>{3, 3});
        const auto coarse = oracle::random_refined_mesh(dom, 3 + s % 3, rng);
        const auto fine = refine(coarse, oracle::random_marks(coarse, rng, 0.3));
        nest = std::max(nest, oracle::nestedness_residual(TSplineBasis<2>(std::make_shared<const TMesh<2>>(coarse)),
                                                          TSplineBasis<2>(std::make_shared<const TMesh<2>>(fine))));
    }
    add("nested spaces", nest < 1e-8, detail::cat(nest));

    double gram = 1.0;
    for (int s = 0; s < 4; ++s) {
        const auto m = oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4 + s, rng);
        const TSplineBasis<2> b(std::make_shared<const TMesh<2>>(m));
        if (b.size() <= 200)
            gram = std::min(gram, gram_conditioning(b));
    }
    add("linear independence", gram > 1e-12, detail::cat(gram));

    const auto sc = support_counts(ParamDomain<2>({1, 1}, {3, 3}), rng);
    add("support count bounded across depth", sc.deep <= sc.shallow + 4 && sc.deep <= 2 * 16,
        detail::cat("shallow ", sc.shallow, " deep ", sc.deep));
    return r;
}

// ---------------------------------------------------------------------------
// Solver and estimator properties

/// A random interior spline of a basis as manufactured solution of -Δu = f
/// on the identity map.
struct SplineProblem {
    std::shared_ptr<const TSplineBasis<2>> basis;
    std::vector<double> coeffs;  // by anchor
    PDEData pde;
};

inline SplineProblem spline_problem(std::shared_ptr<const TSplineBasis<2>> basis, std::mt19937_64& rng)
{
    SplineProblem sp;
    sp.basis = basis;
    sp.coeffs.assign(basis->size(), 0.0);
    for (int a : basis->interior())
        sp.coeffs[static_cast<std::size_t>(a)] = detail::uniform01(rng) * 2.0 - 1.0;
    auto eval = [b = basis, c = sp.coeffs](const Vec2& x) {
        std::array<double, 6> out{};
        const std::array<double, 2> t{x[0], x[1]};
        for (int a : b->supported_on(b->mesh_ref().locate(t))) {
            const auto v = eval_anchor(*b, a, t);
            const double w = c[static_cast<std::size_t>(a)];
            out[0] += w * v.value;
            out[1] += w * v.grad[0];
            out[2] += w * v.grad[1];
            out[3] += w * (v.hess[0][0] + v.hess[1][1]);
        }
        return out;
    };
    sp.pde.u = [eval](const Vec2& x) { return eval(x)[0]; };
    sp.pde.grad_u = [eval](const Vec2& x) {
        const auto v = eval(x);
        return Vec2{v[1], v[2]};
    };
    sp.pde.f = [eval](const Vec2& x) { return -eval(x)[3]; };
    return sp;
}

/// L2 norm of f over the parameter domain (identity map).
inline double load_norm(const TSplineBasis<2>& basis, const PDEData& pde)
{
    double s = 0.0;
    for (ElementId e : basis.mesh_ref().elements()) {
        const ElementRule rule(basis, e, 6, 6);
        for (std::size_t i = 0; i < rule.xs.size(); ++i)
            for (std::size_t j = 0; j < rule.ys.size(); ++j) {
                const double f = pde.f({rule.xs[i], rule.ys[j]});
                s += rule.wx[i] * rule.wy[j] * f * f;
            }
    }
    return std::sqrt(s);
}

struct ExactRepresentation {
    double h1_error = 0.0;
    double eta = 0.0;
    double load = 0.0;
    double u_norm = 0.0;
};

inline ExactRepresentation exact_representation(const TMesh<2>& mesh, std::mt19937_64& rng)
{
    const auto basis = std::make_shared<const TSplineBasis<2>>(std::make_shared<const TMesh<2>>(mesh));
    const auto sp = spline_problem(basis, rng);
    const IdentityMap geo;
    const auto sol = solve(basis, geo, sp.pde);
    ExactRepresentation out;
    out.h1_error = h1_error(sol, geo, sp.pde.u, sp.pde.grad_u);
    out.eta = estimate(sol, sp.pde, geo).eta();
    out.load = load_norm(*basis, sp.pde);
    DiscreteSolution zero = sol;
    zero.coeffs.setZero();
    out.u_norm = h1_error(zero, geo, sp.pde.u, sp.pde.grad_u);
    return out;
}

/// max_z |a(u_fine - U_coarse, B_z)| over coarse dofs, for -Δu = f.
inline double galerkin_defect(const DiscreteSolution& coarse, const DiscreteSolution& fine)
{
    const auto& cb = *coarse.basis;
    const auto& fb = *fine.basis;
    std::vector<double> r(cb.dof_count(), 0.0);
    const auto& dom = fb.domain();
    for (ElementId e : fb.mesh_ref().elements()) {
        const ElementRule rule(fb, e, dom.degrees[0] + 2, dom.degrees[1] + 2);
        const ElementBasisTable tab(fb, e, rule.xs, rule.ys);
        for (std::size_t i = 0; i < rule.xs.size(); ++i)
            for (std::size_t j = 0; j < rule.ys.size(); ++j) {
                const std::array<double, 2> t{rule.xs[i], rule.ys[j]};
                Vec2 g{};
                for (std::size_t a = 0; a < tab.size(); ++a) {
                    const double c = fine.coefficient(tab.anchors()[a]);
                    const Vec2 ga = tab.grad(a, i, j);
                    g[0] += c * ga[0];
                    g[1] += c * ga[1];
                }
                const auto coarse_vals = eval_basis(cb, t);
                for (const auto& v : coarse_vals) {
                    g[0] -= coarse.coefficient(v.anchor) * v.grad[0];
                    g[1] -= coarse.coefficient(v.anchor) * v.grad[1];
                }
                const double w = rule.wx[i] * rule.wy[j];
                for (const auto& v : coarse_vals)
                    if (const int k = cb.dof(v.anchor); k >= 0)
                        r[static_cast<std::size_t>(k)] += w * (g[0] * v.grad[0] + g[1] * v.grad[1]);
            }
    }
    double m = 0.0;
    for (double v : r)
        m = std::max(m, std::abs(v));
    return m;
}

inline Report fem_suite(std::uint64_t seed)
{
    Report r;
    auto add = [&](const std::string& n, bool ok, const std::string& d = {}) { r.push_back({"fem", n, ok, d}); };
    std::mt19937_64 rng(seed);
    const IdentityMap id;

    const auto mesh = std::make_shared<const TMesh<2>>(oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng));
    const auto basis = std::make_shared<const TSplineBasis<2>>(mesh);
    const auto sys = assemble(*basis, id, presets::sine());
    const SparseMatrix KT = sys.K.transpose();
    const double asym = SparseMatrix(sys.K - KT).coeffs().cwiseAbs().maxCoeff();
    add("symmetric stiffness for b = 0", asym < 1e-12, detail::cat(asym));

    bool coercive = true;
    for (int k = 0; k < 100; ++k) {
        Vector v = Vector::Random(sys.K.rows());
        coercive = coercive && v.dot(sys.K * v) > 0.0;
    }
    add("coercive stiffness", coercive);

    bool structural = true;
    for (int a : basis->interior())
        for (int b : basis->interior()) {
            if (basis->anchor(a).support().overlaps(basis->anchor(b).support()))
                continue;
            structural = structural && sys.K.coeff(basis->dof(a), basis->dof(b)) == 0.0;
        }
    add("disjoint supports give zero entries", structural);

    const Vector u0 = solve_system(sys.K, Vector::Zero(sys.K.rows()), true, 1e-10);
    add("zero load gives zero solution", u0.cwiseAbs().maxCoeff() == 0.0);

    {
        const auto ub = std::make_shared<const TSplineBasis<2>>(
            std::make_shared<const TMesh<2>>(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 8)));
        PDEData lap;
        const auto ks = assemble(*ub, id, lap);
        // Rows of functions whose support avoids all boundary functions.
        double worst = 0.0;
        int rows = 0;
        for (int a : ub->interior()) {
            bool clear = true;
            for (std::size_t b = 0; b < ub->size() && clear; ++b)
                if (ub->dof(static_cast<int>(b)) < 0)
                    clear = !ub->anchor(a).support().overlaps(ub->anchor(static_cast<int>(b)).support());
            if (!clear)
                continue;
            ++rows;
            worst = std::max(worst, std::abs(ks.K.row(ub->dof(a)).sum()));
        }
        add("diffusion rows sum to zero away from the boundary", rows > 0 && worst < 1e-12, detail::cat(rows, " rows ", worst));
    }

    const auto ex = exact_representation(*mesh, rng);
    add("exact spline solution reproduced", ex.h1_error < 1e-8 * std::max(1.0, ex.u_norm), detail::cat(ex.h1_error));

    {
        const auto fine_mesh = std::make_shared<const TMesh<2>>(refine(*mesh, oracle::random_marks(*mesh, rng, 0.4)));
        const auto sine = presets::sine();
        const auto cs = solve(basis, id, sine);
        const auto fs = solve(std::make_shared<const TSplineBasis<2>>(fine_mesh), id, sine);
        const double defect = galerkin_defect(cs, fs);
        add("Galerkin orthogonality against a finer solution", defect < 1e-8 * sys.F.norm(), detail::cat(defect));
        const double ec = error_norms(cs, id, sine.u, sine.grad_u).h1_semi;
        const double ef = error_norms(fs, id, sine.u, sine.grad_u).h1_semi;
        add("energy error monotone on nested meshes", ef <= ec * (1 + 1e-6), detail::cat(ec, " -> ", ef));
    }

    {
        bool mono = true;
        double prev = 1e300;
        for (int k = 2; k <= 6; ++k) {
            const auto b = std::make_shared<const TSplineBasis<2>>(
                std::make_shared<const TMesh<2>>(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), k)));
            const auto s = solve(b, id, presets::sine());
            const double e = h1_error(s, id, presets::sine().u, presets::sine().grad_u);
            mono = mono && e < prev;
            prev = e;
        }
        add("H1 error decreases under uniform refinement", mono);
    }

    {
        // Affine map x = M t + s against the parameter domain with the pulled-back coefficient.
        const Mat2 M{{{2.0, 0.5}, {0.25, 1.5}}};
        const auto geo = make_geometry("affine", {M[0][0], M[0][1], M[1][0], M[1][1], 0.3, -0.2}, {1.0, 1.0});
        PDEData phys;
        phys.f = [](const Vec2& x) { return 1.0 + x[0]; };
        const auto k1 = assemble(*basis, *geo, phys);
        const double dj = det(M);
        const Mat2 Mi = inverse(M);
        PDEData pulled;
        pulled.A = [&](const Vec2&) {
            Mat2 a{};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int k = 0; k < 2; ++k)
                        a[i][j] += dj * Mi[i][k] * Mi[j][k];
            return a;
        };
        pulled.f = [&](const Vec2& t) { return dj * (1.0 + M[0][0] * t[0] + M[0][1] * t[1] + 0.3); };
        const auto k2 = assemble(*basis, id, pulled);
        const double dk = SparseMatrix(k1.K - k2.K).coeffs().cwiseAbs().maxCoeff();
        const double df = (k1.F - k2.F).cwiseAbs().maxCoeff();
        add("pull-back matches affine assembly", dk < 1e-10 && df < 1e-10, detail::cat(dk, " ", df));
    }
    return r;
}

inline Report estimator_suite(std::uint64_t seed)
{
    Report r;
    auto add = [&](const std::string& n, bool ok, const std::string& d = {}) { r.push_back({"estimator", n, ok, d}); };
    std::mt19937_64 rng(seed);
    const IdentityMap id;

    {
        const auto m = uniform_mesh(ParamDomain<2>({2, 2}, {3, 3}), 0);
        const auto segs = facet_segments(m);
        add("2x2 mesh has 4 interior segments", segs.size() == 4, detail::cat(segs.size()));
    }
    {
        bool tiled = true, lengths = true;
        for (int s = 0; s < 5; ++s) {
            const auto m = oracle::random_refined_mesh(ParamDomain<2>({2, 1}, {3, 3}), 6, rng);
            const auto segs = facet_segments(m);
            std::map<ElementId, Dyadic> seen;
            Dyadic total(0);
            for (const auto& sg : segs) {
                seen[sg.first] += sg.length();
                seen[sg.second] += sg.length();
                total += sg.length();
            }
            // Independent sweep: interior skeleton length is half the sum of
            // element perimeters less the domain boundary.
            Dyadic perim(0);
            for (ElementId e : m.elements()) {
                const auto& b = m.box(e);
                Dyadic inner(0);
                for (int i = 0; i < 2; ++i) {
                    const int j = 1 - i;
                    if (b.lower[i] != Dyadic(0))
                        inner += b.side(j);
                    if (b.upper[i] != Dyadic(m.domain().sizes[i]))
                        inner += b.side(j);
                }
                tiled = tiled && seen[e] == inner;
                perim += inner;
            }
            lengths = lengths && total + total == perim;
        }
        add("segments tile element boundaries", tiled);
        add("segment lengths match skeleton sweep", lengths);
    }

    const auto mesh = oracle::random_refined_mesh(ParamDomain<2>({1, 1}, {3, 3}), 6, rng);
    {
        const auto ex = exact_representation(mesh, rng);
        add("estimator vanishes on exact splines", ex.eta < 1e-7 * ex.load, detail::cat(ex.eta, " / ", ex.load));
    }

    const auto basis = std::make_shared<const TSplineBasis<2>>(std::make_shared<const TMesh<2>>(mesh));
    const auto pde = presets::corner(1.5);
    const auto sol = solve(basis, id, pde);
    const auto [ind, osc] = estimate_with_oscillations(sol, pde, id);
    {
        double sum = 0.0;
        for (std::size_t k = 0; k < ind.size(); ++k)
            sum += ind.local(k);
        add("indicators add up", std::abs(sum - ind.total()) <= 1e-12 * ind.total());
    }
    {
        bool below = true;
        for (std::size_t k = 0; k < ind.size(); ++k)
            below = below && osc.element[k] <= ind.volume[k] * (1 + 1e-12) + 1e-300 &&
                    osc.edge[k] <= ind.jump[k] * (1 + 1e-12) + 1e-300;
        add("oscillations bounded by indicators", below && osc.osc() <= ind.eta() * (1 + 1e-12),
            detail::cat(osc.osc(), " <= ", ind.eta()));
    }
    {
        // On a uniform mesh U is polynomial per element, so with polynomial
        // data of low order the residual is captured by the projection.
        const auto ub = std::make_shared<const TSplineBasis<2>>(
            std::make_shared<const TMesh<2>>(uniform_mesh(ParamDomain<2>({1, 1}, {3, 3}), 4)));
        PDEData poly;
        poly.f = [](const Vec2& x) { return 1.0 + x[0] * x[1] * x[1] - 2.0 * x[0] * x[0] * x[0]; };
        const auto s = solve(ub, id, poly);
        const auto o = oscillations(s, poly, id);
        const auto e = estimate(s, poly, id);
        double worst = 0.0;
        for (double v : o.element)
            worst = std::max(worst, v);
        add("projection reproduces polynomials", worst < 1e-10 * std::max(1.0, e.total()), detail::cat(worst));
    }
    {
        // With A = I and no vector load the flux of a C2 spline is continuous.
        double worst = 0.0;
        for (double v : ind.jump)
            worst = std::max(worst, v);
        add("jumps vanish for C2 discrete solutions", worst < 1e-20 * std::max(1.0, ind.total()), detail::cat(worst));
    }
    return r;
}

inline const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"mesh", "refine", "basis", "fem", "estimator"};
    return names;
}

/// Runs a named suite, or all of them for "all". Unknown names throw.
inline Report run_suite(const std::string& name, std::uint64_t seed)
{
    if (name == "all") {
        Report all;
        for (const auto& n : suite_names()) {
            auto part = run_suite(n, seed);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    if (name == "mesh")
        return mesh_suite(seed);
    if (name == "refine")
        return refine_suite(seed);
    if (name == "basis")
        return basis_suite(seed);
    if (name == "fem")
        return fem_suite(seed);
    if (name == "estimator")
        return estimator_suite(seed);
    throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace tsafem::verify

#endif  // TSAFEM_VERIFY_HPP

#ifndef TSAFEM_EXTENDED_MESH_HPP
#define TSAFEM_EXTENDED_MESH_HPP

#include <algorithm>
#include <array>
#include <memory>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tsafem/mesh.hpp"

namespace tsafem {

/// A node z of the extended mesh lying in the closed active region.
template <int Dim>
using ActiveNode = DyadicPoint<Dim>;

/// The mesh on the closure of prod(-p_i, N_i + p_i): the interior T-mesh plus
/// explicit frame cells. Frame cells have unit extent in every direction
/// normal to the boundary part they extend and copy the tangential intervals
/// of the adjacent boundary elements.
template <int Dim>
class ExtendedMesh {
public:
    using Box = DyadicBox<Dim>;
    using Point = DyadicPoint<Dim>;

    explicit ExtendedMesh(std::shared_ptr<const TMesh<Dim>> mesh) : mesh_(std::move(mesh))
    {
        if (!mesh_)
            throw std::invalid_argument("ExtendedMesh: null mesh");
        const auto& dom = mesh_->domain();
        std::size_t nb = 1;
        for (int i = 0; i < Dim; ++i) {
            grid_[i] = dom.sizes[i] + 2 * dom.degrees[i];
            nb *= static_cast<std::size_t>(grid_[i]);
        }
        buckets_.resize(nb);
        build_frame();
    }

    [[nodiscard]] const TMesh<Dim>& interior() const { return *mesh_; }
    [[nodiscard]] std::shared_ptr<const TMesh<Dim>> interior_ptr() const { return mesh_; }
    [[nodiscard]] const ParamDomain<Dim>& domain() const { return mesh_->domain(); }
    [[nodiscard]] const std::vector<Box>& frame_cells() const { return frame_; }

    [[nodiscard]] Dyadic ext_lower(int i) const { return Dyadic(-domain().degrees[i]); }
    [[nodiscard]] Dyadic ext_upper(int i) const { return Dyadic(domain().sizes[i] + domain().degrees[i]); }
    [[nodiscard]] Dyadic act_lower(int i) const { return Dyadic(-domain().active_margin(i)); }
    [[nodiscard]] Dyadic act_upper(int i) const { return Dyadic(domain().sizes[i] + domain().active_margin(i)); }

    [[nodiscard]] bool in_active_region(const Point& z) const
    {
        for (int i = 0; i < Dim; ++i)
            if (z[i] < act_lower(i) || z[i] > act_upper(i))
                return false;
        return true;
    }
    [[nodiscard]] bool on_active_boundary(const Point& z) const
    {
        for (int i = 0; i < Dim; ++i)
            if (z[i] == act_lower(i) || z[i] == act_upper(i))
                return true;
        return false;
    }

    /// Visits every extended-mesh cell (interior element or frame cell) whose
    /// closed box meets the closed query box.
    template <class Visit>
    void for_each_touching(const Box& q, Visit&& visit) const
    {
        mesh_->for_each_leaf(q.lower, q.upper, [&](const Box& b) { return b.touches(q); },
                             [&](ElementId id) { visit(mesh_->box(id)); });
        std::array<std::int64_t, Dim> first{}, last{};
        for (int i = 0; i < Dim; ++i) {
            const std::int64_t off = domain().degrees[i];
            first[i] = std::max<std::int64_t>(0, q.lower[i].ceil() - 1 + off);
            last[i] = std::min<std::int64_t>(grid_[i] - 1, q.upper[i].floor() + off);
            if (first[i] > last[i])
                return;
        }
        auto c = first;
        while (true) {
            std::size_t flat = 0;
            for (int i = 0; i < Dim; ++i)
                flat = flat * static_cast<std::size_t>(grid_[i]) + static_cast<std::size_t>(c[i]);
            for (int f : buckets_[flat])
                if (frame_[static_cast<std::size_t>(f)].touches(q))
                    visit(frame_[static_cast<std::size_t>(f)]);
            int i = Dim - 1;
            while (i >= 0 && c[i] == last[i]) {
                c[i] = first[i];
                --i;
            }
            if (i < 0)
                break;
            ++c[i];
        }
    }

    /// Sorted i-coordinates where the axis line through z meets the skeleton
    /// in direction i, restricted to [lo, hi] (defaults to the extended range).
    [[nodiscard]] std::vector<Dyadic> skeleton_intersections(const Point& z, int i, Dyadic lo, Dyadic hi) const
    {
        for (int j = 0; j < Dim; ++j)
            if (j != i && (z[j] < ext_lower(j) || z[j] > ext_upper(j)))
                throw std::invalid_argument("skeleton_intersections: line lies outside the extended domain");
        lo = std::max(lo, ext_lower(i));
        hi = std::min(hi, ext_upper(i));
        Box q;
        q.lower = z;
        q.upper = z;
        q.lower[i] = lo;
        q.upper[i] = hi;
        std::vector<Dyadic> out;
        for_each_touching(q, [&](const Box& b) {
            if (b.lower[i] >= lo && b.lower[i] <= hi)
                out.push_back(b.lower[i]);
            if (b.upper[i] >= lo && b.upper[i] <= hi)
                out.push_back(b.upper[i]);
        });
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// The global index vector through z in direction i.
    [[nodiscard]] std::vector<Dyadic> skeleton_intersections(const Point& z, int i) const
    {
        return skeleton_intersections(z, i, ext_lower(i), ext_upper(i));
    }

    /// All vertices of extended-mesh cells lying in the closed active region,
    /// sorted lexicographically.
    [[nodiscard]] std::vector<ActiveNode<Dim>> active_nodes() const
    {
        std::vector<Point> out;
        auto add_corners = [&](const Box& b) {
            for (int mask = 0; mask < (1 << Dim); ++mask) {
                Point v;
                for (int i = 0; i < Dim; ++i)
                    v[i] = (mask >> i) & 1 ? b.upper[i] : b.lower[i];
                if (in_active_region(v))
                    out.push_back(v);
            }
        };
        for (auto id : mesh_->elements())
            add_corners(mesh_->box(id));
        for (const auto& f : frame_)
            add_corners(f);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    void build_frame()
    {
        const auto& dom = domain();
        // Region codes per direction: 0 below, 1 inside, 2 above.
        std::array<int, Dim> code{};
        const int regions = Dim == 2 ? 9 : 27;
        for (int r = 0; r < regions; ++r) {
            int rest = r;
            bool all_inside = true;
            for (int i = 0; i < Dim; ++i) {
                code[i] = rest % 3;
                rest /= 3;
                all_inside = all_inside && code[i] == 1;
            }
            if (all_inside)
                continue;
            // Tangential traces of the boundary elements adjacent to this region.
            std::set<std::vector<std::pair<Dyadic, Dyadic>>> traces;
            for (auto id : mesh_->elements()) {
                const Box& b = mesh_->box(id);
                bool adjacent = true;
                std::vector<std::pair<Dyadic, Dyadic>> trace;
                for (int i = 0; i < Dim; ++i) {
                    if (code[i] == 0)
                        adjacent = adjacent && b.lower[i] == Dyadic(0);
                    else if (code[i] == 2)
                        adjacent = adjacent && b.upper[i] == Dyadic(dom.sizes[i]);
                    else
                        trace.emplace_back(b.lower[i], b.upper[i]);
                }
                if (adjacent)
                    traces.insert(std::move(trace));
            }
            for (const auto& trace : traces) {
                // Enumerate unit steps in the normal directions.
                std::array<int, Dim> step{};
                while (true) {
                    Box cell;
                    cell.level = -1;
                    std::size_t t = 0;
                    for (int i = 0; i < Dim; ++i) {
                        if (code[i] == 1) {
                            cell.lower[i] = trace[t].first;
                            cell.upper[i] = trace[t].second;
                            ++t;
                        } else {
                            const int a = code[i] == 0 ? -dom.degrees[i] + step[i] : dom.sizes[i] + step[i];
                            cell.lower[i] = Dyadic(a);
                            cell.upper[i] = Dyadic(a + 1);
                        }
                    }
                    add_frame_cell(cell);
                    int i = 0;
                    while (i < Dim && (code[i] == 1 || step[i] == dom.degrees[i] - 1)) {
                        step[i] = 0;
                        ++i;
                    }
                    if (i == Dim)
                        break;
                    ++step[i];
                }
            }
        }
    }

    void add_frame_cell(const Box& cell)
    {
        std::size_t flat = 0;
        for (int i = 0; i < Dim; ++i)
            flat = flat * static_cast<std::size_t>(grid_[i]) +
                   static_cast<std::size_t>(cell.lower[i].floor() + domain().degrees[i]);
        buckets_[flat].push_back(static_cast<int>(frame_.size()));
        frame_.push_back(cell);
    }

    std::shared_ptr<const TMesh<Dim>> mesh_;
    std::vector<Box> frame_;
    std::array<int, Dim> grid_{};
    std::vector<std::vector<int>> buckets_;
};

template <int Dim>
[[nodiscard]] ExtendedMesh<Dim> extend_mesh(std::shared_ptr<const TMesh<Dim>> mesh)
{
    return ExtendedMesh<Dim>(std::move(mesh));
}

template <int Dim>
[[nodiscard]] ExtendedMesh<Dim> extend_mesh(const TMesh<Dim>& mesh)
{
    return ExtendedMesh<Dim>(std::make_shared<const TMesh<Dim>>(mesh));
}

}  // namespace tsafem

#endif  // TSAFEM_EXTENDED_MESH_HPP

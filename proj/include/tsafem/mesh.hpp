#ifndef TSAFEM_MESH_HPP
#define TSAFEM_MESH_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tsafem/dyadic.hpp"

namespace tsafem {

using ElementId = std::int32_t;

template <int Dim>
using DyadicPoint = std::array<Dyadic, Dim>;

/// Parameter domain (0,N_1) x ... x (0,N_d) together with the odd spline
/// degrees used on it.
template <int Dim>
struct ParamDomain {
    static_assert(Dim == 2 || Dim == 3, "only d = 2 and d = 3 are supported");

    std::array<int, Dim> sizes{};
    std::array<int, Dim> degrees{};

    ParamDomain() { sizes.fill(1); degrees.fill(3); }
    ParamDomain(std::array<int, Dim> n, std::array<int, Dim> p) : sizes(n), degrees(p) { validate(); }

    void validate() const
    {
        for (int i = 0; i < Dim; ++i) {
            if (sizes[i] < 1)
                throw std::invalid_argument("ParamDomain: N_" + std::to_string(i + 1) + " must be >= 1");
            if (degrees[i] < 3 || degrees[i] % 2 == 0)
                throw std::invalid_argument("ParamDomain: p_" + std::to_string(i + 1) + " must be odd and >= 3");
        }
    }

    [[nodiscard]] int cell_count() const
    {
        return std::accumulate(sizes.begin(), sizes.end(), 1, std::multiplies<>());
    }

    /// Half-width of the active frame, (p_i - 1) / 2.
    [[nodiscard]] int active_margin(int i) const { return (degrees[i] - 1) / 2; }

    friend bool operator==(const ParamDomain&, const ParamDomain&) = default;
};

/// An element of some uniform refinement of the initial tensor mesh. The
/// level fixes all side lengths; only the lower corner is free.
template <int Dim>
struct DyadicBox {
    int level = 0;
    DyadicPoint<Dim> lower{};
    DyadicPoint<Dim> upper{};

    /// Exponent e with side_i = 2^-e.
    static constexpr int side_exponent(int level, int i) { return level / Dim + (i < level % Dim ? 1 : 0); }

    /// Bisection direction (0-based) for an element of this level.
    static constexpr int split_direction(int level) { return level % Dim; }

    [[nodiscard]] Dyadic side(int i) const { return upper[i] - lower[i]; }
    [[nodiscard]] Dyadic mid(int i) const { return Dyadic::midpoint(lower[i], upper[i]); }
    [[nodiscard]] DyadicPoint<Dim> midpoint() const
    {
        DyadicPoint<Dim> m;
        for (int i = 0; i < Dim; ++i)
            m[i] = mid(i);
        return m;
    }
    [[nodiscard]] Dyadic volume() const
    {
        Dyadic v(1);
        for (int i = 0; i < Dim; ++i)
            v = v * side(i);
        return v;
    }

    /// True when the stored bounds have exactly the side lengths of the level.
    [[nodiscard]] bool consistent() const
    {
        for (int i = 0; i < Dim; ++i)
            if (side(i) != Dyadic(1, side_exponent(level, i)))
                return false;
        return true;
    }

    /// Level recovered from side lengths alone.
    [[nodiscard]] int level_from_sides() const
    {
        int k = 0;
        for (int i = 0; i < Dim; ++i)
            k += side(i).exponent();
        return k;
    }

    [[nodiscard]] bool contains(const DyadicPoint<Dim>& t) const
    {
        for (int i = 0; i < Dim; ++i)
            if (t[i] < lower[i] || t[i] > upper[i])
                return false;
        return true;
    }
    [[nodiscard]] bool contains(const DyadicBox& o) const
    {
        for (int i = 0; i < Dim; ++i)
            if (o.lower[i] < lower[i] || o.upper[i] > upper[i])
                return false;
        return true;
    }
    /// Closed boxes share at least one point.
    [[nodiscard]] bool touches(const DyadicBox& o) const
    {
        for (int i = 0; i < Dim; ++i)
            if (o.lower[i] > upper[i] || o.upper[i] < lower[i])
                return false;
        return true;
    }
    /// Intersection has positive measure.
    [[nodiscard]] bool overlaps(const DyadicBox& o) const
    {
        for (int i = 0; i < Dim; ++i)
            if (o.lower[i] >= upper[i] || o.upper[i] <= lower[i])
                return false;
        return true;
    }

    friend bool operator==(const DyadicBox&, const DyadicBox&) = default;
    friend auto operator<=>(const DyadicBox& a, const DyadicBox& b)
    {
        if (auto c = a.lower <=> b.lower; c != 0)
            return c;
        if (auto c = a.upper <=> b.upper; c != 0)
            return c;
        return a.level <=> b.level;
    }
};

/// Splits a box in its level-determined direction.
template <int Dim>
[[nodiscard]] std::pair<DyadicBox<Dim>, DyadicBox<Dim>> bisect(const DyadicBox<Dim>& box)
{
    const int dir = DyadicBox<Dim>::split_direction(box.level);
    const Dyadic m = box.mid(dir);
    DyadicBox<Dim> lo = box, hi = box;
    lo.level = hi.level = box.level + 1;
    lo.upper[dir] = m;
    hi.lower[dir] = m;
    return {lo, hi};
}

template <int Dim>
[[nodiscard]] DyadicBox<Dim> unit_cell(const std::array<std::int64_t, Dim>& corner)
{
    DyadicBox<Dim> b;
    for (int i = 0; i < Dim; ++i) {
        b.lower[i] = Dyadic(corner[i]);
        b.upper[i] = Dyadic(corner[i] + 1);
    }
    return b;
}

namespace detail {
inline std::uint64_t next_snapshot_id()
{
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}
}  // namespace detail

/// One bisection of the refinement history.
struct Bisection {
    ElementId element = -1;
    int direction = 0;
    friend bool operator==(const Bisection&, const Bisection&) = default;
};

/// A T-mesh of the parameter domain. Elements are the leaves of a forest of
/// binary bisection trees rooted at the unit cells of the initial mesh; an
/// element's id is its tree-node index and never changes once assigned.
/// Meshes are immutable: every refinement produces a new snapshot.
template <int Dim>
class TMesh {
public:
    using Box = DyadicBox<Dim>;
    using Point = DyadicPoint<Dim>;

    struct Node {
        Box box;
        ElementId parent = -1;
        std::array<ElementId, 2> children{-1, -1};
        [[nodiscard]] bool is_leaf() const { return children[0] < 0; }
    };

    /// Initial tensor mesh of unit cells.
    explicit TMesh(const ParamDomain<Dim>& domain) : domain_(domain), snapshot_(detail::next_snapshot_id())
    {
        domain_.validate();
        const int n = domain_.cell_count();
        nodes_.reserve(static_cast<std::size_t>(n));
        roots_.resize(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) {
            std::array<std::int64_t, Dim> corner{};
            int rest = c;
            for (int i = Dim - 1; i >= 0; --i) {
                corner[i] = rest % domain_.sizes[i];
                rest /= domain_.sizes[i];
            }
            roots_[static_cast<std::size_t>(c)] = static_cast<ElementId>(nodes_.size());
            nodes_.push_back(Node{unit_cell<Dim>(corner)});
        }
        rebuild_element_list();
    }

    [[nodiscard]] const ParamDomain<Dim>& domain() const { return domain_; }
    [[nodiscard]] std::uint64_t snapshot_id() const { return snapshot_; }

    /// Live element ids in ascending order.
    [[nodiscard]] std::span<const ElementId> elements() const { return elements_; }
    [[nodiscard]] std::size_t size() const { return elements_.size(); }

    [[nodiscard]] bool is_element(ElementId id) const
    {
        return id >= 0 && static_cast<std::size_t>(id) < nodes_.size() && nodes_[static_cast<std::size_t>(id)].is_leaf() &&
               nodes_[static_cast<std::size_t>(id)].parent != -2;
    }
    [[nodiscard]] const Box& box(ElementId id) const { return node(id).box; }
    [[nodiscard]] int level(ElementId id) const { return node(id).box.level; }
    [[nodiscard]] const Node& node(ElementId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
    [[nodiscard]] std::span<const ElementId> roots() const { return roots_; }
    [[nodiscard]] const std::vector<Bisection>& generation_log() const { return log_; }

    [[nodiscard]] int max_level() const
    {
        int m = 0;
        for (auto id : elements_)
            m = std::max(m, level(id));
        return m;
    }

    /// Visits leaves whose box satisfies `pred`, which must hold for a box
    /// whenever it holds for one of its sub-boxes. Only trees whose unit cell
    /// meets the closed hull [lo, hi] are searched.
    template <class Pred, class Visit>
    void for_each_leaf(const Point& lo, const Point& hi, Pred&& pred, Visit&& visit) const
    {
        std::array<std::int64_t, Dim> first{}, last{};
        for (int i = 0; i < Dim; ++i) {
            first[i] = std::max<std::int64_t>(0, lo[i].ceil() - 1);
            last[i] = std::min<std::int64_t>(domain_.sizes[i] - 1, hi[i].floor());
            if (first[i] > last[i])
                return;
        }
        std::array<std::int64_t, Dim> c = first;
        std::vector<ElementId> stack;
        while (true) {
            std::int64_t flat = 0;
            for (int i = 0; i < Dim; ++i)
                flat = flat * domain_.sizes[i] + c[i];
            stack.push_back(roots_[static_cast<std::size_t>(flat)]);
            while (!stack.empty()) {
                const ElementId id = stack.back();
                stack.pop_back();
                const Node& n = nodes_[static_cast<std::size_t>(id)];
                if (!pred(n.box))
                    continue;
                if (n.is_leaf()) {
                    visit(id);
                } else {
                    stack.push_back(n.children[1]);
                    stack.push_back(n.children[0]);
                }
            }
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

    /// Elements whose closed box meets the closed query box.
    [[nodiscard]] std::vector<ElementId> touching(const Box& q) const
    {
        std::vector<ElementId> out;
        for_each_leaf(q.lower, q.upper, [&](const Box& b) { return b.touches(q); },
                      [&](ElementId id) { out.push_back(id); });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Elements meeting the query box in a set of positive measure.
    [[nodiscard]] std::vector<ElementId> overlapping(const Box& q) const
    {
        std::vector<ElementId> out;
        for_each_leaf(q.lower, q.upper, [&](const Box& b) { return b.overlaps(q); },
                      [&](ElementId id) { out.push_back(id); });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Some element containing t (closed), or -1 outside the domain.
    [[nodiscard]] ElementId locate(const Point& t) const
    {
        ElementId found = -1;
        for_each_leaf(t, t, [&](const Box& b) { return found < 0 && b.contains(t); },
                      [&](ElementId id) { found = id; });
        return found;
    }

    /// Locates by floating point coordinates; ties go to any containing element.
    [[nodiscard]] ElementId locate(const std::array<double, Dim>& t) const
    {
        std::array<std::int64_t, Dim> cell{};
        for (int i = 0; i < Dim; ++i) {
            if (t[i] < 0.0 || t[i] > domain_.sizes[i])
                return -1;
            cell[i] = std::min<std::int64_t>(domain_.sizes[i] - 1, static_cast<std::int64_t>(t[i]));
        }
        std::int64_t flat = 0;
        for (int i = 0; i < Dim; ++i)
            flat = flat * domain_.sizes[i] + cell[i];
        ElementId id = roots_[static_cast<std::size_t>(flat)];
        while (!node(id).is_leaf()) {
            const Node& n = node(id);
            const int dir = Box::split_direction(n.box.level);
            id = t[dir] < n.box.mid(dir).to_double() ? n.children[0] : n.children[1];
        }
        return id;
    }

    /// Bisects exactly the given elements, without any closure. New children
    /// receive fresh ids in the order the marks are given (sorted ascending).
    [[nodiscard]] TMesh bisected(std::vector<ElementId> marks) const
    {
        std::sort(marks.begin(), marks.end());
        marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
        TMesh out = *this;
        out.snapshot_ = detail::next_snapshot_id();
        for (ElementId id : marks) {
            if (!is_element(id))
                throw std::invalid_argument("bisect: element " + std::to_string(id) + " is not in the mesh");
            out.split_leaf(id);
        }
        out.rebuild_element_list();
        return out;
    }

    /// Bisects along the ancestor chain of `target` until it is a tree node;
    /// used when rebuilding meshes from element lists.
    ElementId insert_box(const Box& target)
    {
        std::int64_t flat = 0;
        for (int i = 0; i < Dim; ++i) {
            const auto c = target.lower[i].floor();
            if (c < 0 || c >= domain_.sizes[i])
                throw std::invalid_argument("insert_box: box outside the domain");
            flat = flat * domain_.sizes[i] + c;
        }
        ElementId id = roots_[static_cast<std::size_t>(flat)];
        if (!box(id).contains(target))
            throw std::invalid_argument("insert_box: box crosses an initial cell");
        while (node(id).box.level < target.level) {
            if (node(id).is_leaf())
                split_leaf(id);
            const Node& n = node(id);
            id = box(n.children[0]).contains(target) ? n.children[0] : n.children[1];
        }
        if (node(id).box != target)
            throw std::invalid_argument("insert_box: box is not an element of a uniform refinement");
        return id;
    }

    /// Builds a mesh from an element list, preserving the given ids for the
    /// leaves. Internal tree nodes occupy unused id slots.
    static TMesh from_elements(const ParamDomain<Dim>& domain, const std::vector<std::pair<ElementId, Box>>& elems,
                               std::vector<Bisection> log = {})
    {
        // Build the tree with temporary ids, then remap.
        TMesh tree(domain);
        std::vector<std::pair<ElementId, ElementId>> leaf_map;  // tree id -> wanted id
        for (const auto& [want, b] : elems) {
            if (!b.consistent())
                throw std::invalid_argument("from_elements: box sides do not match its level");
            leaf_map.emplace_back(tree.insert_box(b), want);
        }
        tree.rebuild_element_list();
        if (tree.elements_.size() != elems.size())
            throw std::invalid_argument("from_elements: elements do not tile the domain");
        std::vector<ElementId> remap(tree.nodes_.size(), -1);
        ElementId max_id = -1;
        std::vector<char> taken;
        for (auto [tid, want] : leaf_map) {
            if (!tree.node(tid).is_leaf())
                throw std::invalid_argument("from_elements: overlapping elements");
            if (want < 0)
                throw std::invalid_argument("from_elements: negative element id");
            remap[static_cast<std::size_t>(tid)] = want;
            max_id = std::max(max_id, want);
        }
        taken.assign(static_cast<std::size_t>(max_id) + 1, 0);
        for (auto [tid, want] : leaf_map) {
            if (taken[static_cast<std::size_t>(want)])
                throw std::invalid_argument("from_elements: duplicate element id");
            taken[static_cast<std::size_t>(want)] = 1;
        }
        ElementId next_free = 0;
        ElementId next_new = max_id + 1;
        for (std::size_t t = 0; t < tree.nodes_.size(); ++t) {
            if (remap[t] >= 0)
                continue;
            while (next_free <= max_id && taken[static_cast<std::size_t>(next_free)])
                ++next_free;
            if (next_free <= max_id) {
                remap[t] = next_free;
                taken[static_cast<std::size_t>(next_free)] = 1;
            } else {
                remap[t] = next_new++;
            }
        }
        TMesh out(domain);
        out.nodes_.assign(static_cast<std::size_t>(std::max(next_new, max_id + 1)), Node{});
        for (auto& n : out.nodes_)
            n.parent = -2;  // unused slot
        for (std::size_t t = 0; t < tree.nodes_.size(); ++t) {
            Node n = tree.nodes_[t];
            n.parent = n.parent >= 0 ? remap[static_cast<std::size_t>(n.parent)] : -1;
            for (auto& c : n.children)
                if (c >= 0)
                    c = remap[static_cast<std::size_t>(c)];
            out.nodes_[static_cast<std::size_t>(remap[t])] = n;
        }
        for (std::size_t r = 0; r < out.roots_.size(); ++r)
            out.roots_[r] = remap[static_cast<std::size_t>(tree.roots_[r])];
        out.log_ = std::move(log);
        out.rebuild_element_list();
        return out;
    }

    /// Element boxes in ascending (lower, upper) order; a canonical form for
    /// comparing meshes irrespective of ids.
    [[nodiscard]] std::vector<Box> sorted_boxes() const
    {
        std::vector<Box> out;
        out.reserve(elements_.size());
        for (auto id : elements_)
            out.push_back(box(id));
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Same domain and same elements with the same ids.
    [[nodiscard]] bool same_content(const TMesh& o) const
    {
        if (domain_ != o.domain_ || elements_ != o.elements_)
            return false;
        for (auto id : elements_)
            if (box(id) != o.box(id))
                return false;
        return true;
    }

    [[nodiscard]] TMesh fresh_snapshot() const
    {
        TMesh out = *this;
        out.snapshot_ = detail::next_snapshot_id();
        return out;
    }

private:
    void split_leaf(ElementId id)
    {
        auto [lo, hi] = bisect(nodes_[static_cast<std::size_t>(id)].box);
        const auto c0 = static_cast<ElementId>(nodes_.size());
        nodes_.push_back(Node{lo, id});
        nodes_.push_back(Node{hi, id});
        nodes_[static_cast<std::size_t>(id)].children = {c0, c0 + 1};
        log_.push_back(Bisection{id, DyadicBox<Dim>::split_direction(lo.level - 1)});
    }

    void rebuild_element_list()
    {
        elements_.clear();
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].is_leaf() && nodes_[i].parent != -2)
                elements_.push_back(static_cast<ElementId>(i));
    }

    ParamDomain<Dim> domain_;
    std::vector<Node> nodes_;
    std::vector<ElementId> roots_;
    std::vector<ElementId> elements_;
    std::vector<Bisection> log_;
    std::uint64_t snapshot_ = 0;
};

/// The k-th uniform refinement of the initial mesh.
template <int Dim>
[[nodiscard]] TMesh<Dim> uniform_mesh(const ParamDomain<Dim>& domain, int k)
{
    if (k < 0)
        throw std::invalid_argument("uniform_mesh: k must be >= 0");
    TMesh<Dim> mesh(domain);
    for (int j = 0; j < k; ++j) {
        auto ids = mesh.elements();
        mesh = mesh.bisected(std::vector<ElementId>(ids.begin(), ids.end()));
    }
    return mesh;
}

}  // namespace tsafem

#endif  // TSAFEM_MESH_HPP

#ifndef TSAFEM_MESH_IO_HPP
#define TSAFEM_MESH_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsafem/basis.hpp"
#include "tsafem/estimator.hpp"
#include "tsafem/mesh.hpp"

namespace tsafem {

namespace detail {

template <int Dim>
nlohmann::json point_json(const std::array<Dyadic, Dim>& p)
{
    auto a = nlohmann::json::array();
    for (const auto& v : p)
        a.push_back(v.str());
    return a;
}

template <int Dim>
std::array<Dyadic, Dim> point_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != Dim)
        throw std::invalid_argument("mesh dump: bad coordinate array");
    std::array<Dyadic, Dim> p{};
    for (int i = 0; i < Dim; ++i)
        p[static_cast<std::size_t>(i)] = Dyadic::parse(j[static_cast<std::size_t>(i)].get<std::string>());
    return p;
}

template <int Dim>
nlohmann::json domain_json(const ParamDomain<Dim>& dom)
{
    return {{"d", Dim},
            {"N", std::vector<int>(dom.sizes.begin(), dom.sizes.end())},
            {"p", std::vector<int>(dom.degrees.begin(), dom.degrees.end())}};
}

}  // namespace detail

/// Mesh as JSON: domain, elements {id, level, lower, upper} with coordinates
/// written as "num/2^e", and the generation log as [element, direction] pairs.
template <int Dim>
nlohmann::json mesh_to_json(const TMesh<Dim>& mesh)
{
    nlohmann::json j;
    j["domain"] = detail::domain_json(mesh.domain());
    auto elems = nlohmann::json::array();
    for (ElementId id : mesh.elements()) {
        const auto& b = mesh.box(id);
        elems.push_back({{"id", id},
                         {"level", b.level},
                         {"lower", detail::point_json<Dim>(b.lower)},
                         {"upper", detail::point_json<Dim>(b.upper)}});
    }
    j["elements"] = std::move(elems);
    auto log = nlohmann::json::array();
    for (const auto& s : mesh.generation_log())
        log.push_back({s.element, s.direction});
    j["generation_log"] = std::move(log);
    return j;
}

template <int Dim>
TMesh<Dim> mesh_from_json(const nlohmann::json& j)
{
    const auto& d = j.at("domain");
    if (d.at("d").get<int>() != Dim)
        throw std::invalid_argument("mesh dump: dimension mismatch");
    ParamDomain<Dim> dom;
    const auto n = d.at("N").get<std::vector<int>>();
    const auto p = d.at("p").get<std::vector<int>>();
    if (n.size() != Dim || p.size() != Dim)
        throw std::invalid_argument("mesh dump: bad domain");
    for (int i = 0; i < Dim; ++i) {
        dom.sizes[i] = n[static_cast<std::size_t>(i)];
        dom.degrees[i] = p[static_cast<std::size_t>(i)];
    }
    dom.validate();
    std::vector<std::pair<ElementId, DyadicBox<Dim>>> elems;
    for (const auto& e : j.at("elements")) {
        DyadicBox<Dim> b;
        b.level = e.at("level").get<int>();
        b.lower = detail::point_from_json<Dim>(e.at("lower"));
        b.upper = detail::point_from_json<Dim>(e.at("upper"));
        elems.emplace_back(e.at("id").get<ElementId>(), b);
    }
    std::vector<Bisection> log;
    for (const auto& s : j.at("generation_log"))
        log.push_back(Bisection{s.at(0).get<ElementId>(), s.at(1).get<int>()});
    return TMesh<Dim>::from_elements(dom, elems, std::move(log));
}

/// Anchors with their local knot vectors and boundary flags.
template <int Dim>
nlohmann::json basis_to_json(const TSplineBasis<Dim>& basis)
{
    nlohmann::json j;
    j["domain"] = detail::domain_json(basis.domain());
    auto anchors = nlohmann::json::array();
    for (const auto& a : basis.anchors()) {
        auto knots = nlohmann::json::array();
        for (const auto& k : a.knots) {
            auto v = nlohmann::json::array();
            for (const auto& x : k)
                v.push_back(x.str());
            knots.push_back(std::move(v));
        }
        anchors.push_back({{"node", detail::point_json<Dim>(a.node)}, {"knots", std::move(knots)}, {"boundary", a.boundary}});
    }
    j["anchors"] = std::move(anchors);
    return j;
}

/// Per-element indicator parts.
inline nlohmann::json indicators_to_json(const IndicatorField& ind)
{
    auto a = nlohmann::json::array();
    for (std::size_t k = 0; k < ind.size(); ++k)
        a.push_back({{"id", ind.ids[k]}, {"volume_part", ind.volume[k]}, {"jump_part", ind.jump[k]}});
    return a;
}

}  // namespace tsafem

#endif  // TSAFEM_MESH_IO_HPP

#ifndef TSAFEM_STUDY_HPP
#define TSAFEM_STUDY_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsafem/adaptive.hpp"
#include "tsafem/config.hpp"
#include "tsafem/mesh_io.hpp"

namespace tsafem {

namespace fs = std::filesystem;

inline constexpr const char* history_header = "iter,nelem,eta,eta_vol,eta_jump,osc,h1_error,marked,seconds";

namespace detail {

inline std::string csv_number(double v)
{
    if (std::isnan(v))
        return "nan";
    return format_double(v);
}

inline std::string iteration_name(const char* stem, int it, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d%s", stem, it, ext);
    return buf;
}

inline void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream o(p, std::ios::binary);
    if (!o)
        throw std::runtime_error("cannot write " + p.string());
    o << text;
}

inline std::string read_text(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw ConfigError("missing artifact " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline nlohmann::json fit_json(const LineFit& f)
{
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"rms_residual", f.rms_residual}};
}

}  // namespace detail

/// Initial mesh of a configuration: the tensor mesh refined uniformly
/// initial_level times.
inline TMesh<2> initial_mesh(const RunConfig& c) { return uniform_mesh(c.domain(), c.initial_level); }

inline std::string history_row(const AdaptiveState& s)
{
    using detail::csv_number;
    std::ostringstream o;
    o << s.iteration << ',' << s.elements << ',' << csv_number(s.eta) << ',' << csv_number(s.eta_volume) << ','
      << csv_number(s.eta_jump) << ',' << csv_number(s.osc) << ',' << csv_number(s.h1_error) << ',' << s.marked.size()
      << ',' << csv_number(s.seconds);
    return o.str();
}

inline nlohmann::json summary_json(const RunConfig& c, const std::vector<AdaptiveState>& states, bool complete)
{
    nlohmann::json j;
    j["complete"] = complete;
    j["iterations"] = states.size();
    j["pde"] = c.pde;
    j["geometry"] = c.geometry;
    j["theta"] = c.theta;
    j["uniform"] = c.uniform;
    if (!states.empty()) {
        const auto& last = states.back();
        j["final"] = {{"elements", last.elements}, {"dofs", last.dofs}, {"eta", last.eta}, {"osc", last.osc}};
        if (std::isfinite(last.h1_error))
            j["final"]["h1_error"] = last.h1_error;
    }
    if (states.size() >= 4) {
        const auto tab = rate_table(states, static_cast<std::size_t>(c.rate_window));
        auto windows = nlohmann::json::array();
        for (const auto& w : tab.windows) {
            nlohmann::json e{{"first", w.first}, {"last", w.last}, {"eta", detail::fit_json(w.eta)}};
            if (w.has_error) {
                e["h1_error"] = detail::fit_json(w.h1);
                e["total_error"] = detail::fit_json(w.total);
            }
            windows.push_back(std::move(e));
        }
        const auto& f = tab.final_window();
        j["rate"] = {{"eta", -f.eta.slope}};
        if (f.has_error) {
            j["rate"]["h1_error"] = -f.h1.slope;
            j["rate"]["total_error"] = -f.total.slope;
        }
        j["windows"] = std::move(windows);
    }
    return j;
}

inline nlohmann::json marks_json(const std::vector<AdaptiveState>& states)
{
    auto a = nlohmann::json::array();
    for (const auto& s : states)
        a.push_back(s.marked);
    return a;
}

/// Outcome of a run; solver failures leave `error` set and the states
/// completed so far.
struct StudyResult {
    std::vector<AdaptiveState> states;
    bool solver_failed = false;
    std::string error;
};

/// Runs the adaptive loop of a validated configuration and writes into
/// `out`: config.cfg, history.csv, summary.json, marks.json and, when asked
/// for, meshes/mesh_NNNN.json and indicators/indicators_NNNN.json.
inline StudyResult run_study(const RunConfig& c, const fs::path& out, std::ostream* log = nullptr)
{
    c.validate();
    fs::create_directories(out);
    if (c.dump_meshes)
        fs::create_directories(out / "meshes");
    if (c.dump_indicators)
        fs::create_directories(out / "indicators");
    detail::write_text(out / "config.cfg", serialize(c));

    const auto geo = c.make_geometry_map();
    const auto pde = c.make_pde_data();
    std::ofstream csv(out / "history.csv", std::ios::binary);
    csv << history_header << '\n';

    AdaptiveObserver obs;
    obs.on_iteration = [&](const AdaptiveState& s, const DiscreteSolution&, const IndicatorField& ind,
                           const OscillationField&) {
        csv << history_row(s) << '\n' << std::flush;
        if (c.dump_meshes)
            detail::write_text(out / "meshes" / detail::iteration_name("mesh", s.iteration, ".json"),
                               mesh_to_json(*s.mesh).dump(1) + "\n");
        if (c.dump_indicators)
            detail::write_text(out / "indicators" / detail::iteration_name("indicators", s.iteration, ".json"),
                               indicators_to_json(ind).dump(1) + "\n");
        if (log)
            *log << "iter " << s.iteration << "  elements " << s.elements << "  eta " << s.eta << "  marked "
                 << s.marked.size() << '\n';
    };

    StudyResult res;
    try {
        run_adaptive(std::make_shared<const TMesh<2>>(initial_mesh(c)), *geo, pde, c.adaptive_params(), obs,
                     &res.states);
    } catch (const SolverError& e) {
        res.solver_failed = true;
        res.error = e.what();
    }
    detail::write_text(out / "marks.json", marks_json(res.states).dump() + "\n");
    detail::write_text(out / "summary.json", summary_json(c, res.states, !res.solver_failed).dump(2) + "\n");
    return res;
}

/// Marked sets of a finished run, one list per iteration.
inline std::vector<std::vector<ElementId>> read_marks(const fs::path& run_dir)
{
    const auto j = nlohmann::json::parse(detail::read_text(run_dir / "marks.json"));
    return j.get<std::vector<std::vector<ElementId>>>();
}

/// Mesh of iteration `it`, rebuilt from the configuration and the recorded
/// marks. Throws ConfigError when the run has no such iteration.
inline TMesh<2> replay_mesh(const RunConfig& c, const std::vector<std::vector<ElementId>>& marks, int it)
{
    if (it < 0 || static_cast<std::size_t>(it) >= marks.size())
        throw ConfigError("iteration " + std::to_string(it) + " is not part of the run");
    TMesh<2> mesh = initial_mesh(c);
    for (int k = 0; k < it; ++k)
        mesh = refine(mesh, marks[static_cast<std::size_t>(k)]);
    return mesh;
}

/// Indicator dump of a replayed mesh.
inline nlohmann::json replay_indicators(const RunConfig& c, const TMesh<2>& mesh)
{
    const auto geo = c.make_geometry_map();
    const auto pde = c.make_pde_data();
    const auto params = c.adaptive_params();
    const auto basis = std::make_shared<const TSplineBasis<2>>(std::make_shared<const TMesh<2>>(mesh));
    const auto sol = solve(basis, *geo, pde, params.fem);
    return indicators_to_json(estimate(sol, pde, *geo, params.estimator));
}

}  // namespace tsafem

#endif  // TSAFEM_STUDY_HPP

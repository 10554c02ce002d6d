#ifndef TSAFEM_CONFIG_HPP
#define TSAFEM_CONFIG_HPP

#include <array>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tsafem/adaptive.hpp"
#include "tsafem/geometry.hpp"
#include "tsafem/pde.hpp"

namespace tsafem {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Settings of one run. Text form is INI: `[section]` headers followed by
/// `key = value` lines; lists are space separated.
struct RunConfig {
    // [domain]
    std::array<int, 2> sizes{1, 1};
    std::array<int, 2> degrees{3, 3};
    int initial_level = 0;
    // [geometry]
    std::string geometry = "identity";
    std::vector<double> geometry_params;
    // [pde]
    std::string pde = "sine";
    std::vector<double> pde_params;
    // [marking]
    double theta = 0.5;
    bool uniform = false;
    // [oscillation]; 0 selects 2 p_i - 1
    std::array<int, 2> osc_orders{0, 0};
    // [quadrature]
    int assembly_extra = 2;
    int error_extra = 4;
    int estimator_points = 0;
    // [stop]
    std::size_t max_elements = 20000;
    int max_iterations = 200;
    double eta_tolerance = 0.0;
    // [output]
    std::string output_dir = "out";
    bool dump_meshes = false;
    bool dump_indicators = false;
    int rate_window = 5;
    // [run]
    std::uint64_t seed = 42;
    int threads = 0;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    [[nodiscard]] ParamDomain<2> domain() const { return ParamDomain<2>(sizes, degrees); }

    [[nodiscard]] std::shared_ptr<const GeometryMap> make_geometry_map() const
    {
        return make_geometry(geometry, geometry_params, {double(sizes[0]), double(sizes[1])});
    }
    /// PDE preset; the exact solutions are written for the identity map, so
    /// other geometries run without an error column.
    [[nodiscard]] PDEData make_pde_data() const
    {
        PDEData d = make_pde(pde, pde_params);
        if (geometry != "identity") {
            d.u = nullptr;
            d.grad_u = nullptr;
        }
        return d;
    }

    [[nodiscard]] AdaptiveParams adaptive_params() const
    {
        AdaptiveParams a;
        a.marking.theta = theta;
        a.uniform = uniform;
        a.max_elements = max_elements;
        a.max_iterations = max_iterations;
        a.eta_tolerance = eta_tolerance;
        a.fem.assembly_extra = assembly_extra;
        a.fem.error_extra = error_extra;
        a.estimator.orders = osc_orders;
        a.estimator.points = estimator_points;
        return a;
    }

    /// Throws ConfigError describing the first problem found.
    void validate() const
    {
        if (geometry.empty())
            throw ConfigError("geometry name is missing");
        try {
            (void)domain();
            (void)make_geometry_map();
            (void)make_pde_data();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (!(theta > 0.0 && theta <= 1.0))
            throw ConfigError("theta must lie in (0, 1]");
        if (initial_level < 0 || initial_level > 20)
            throw ConfigError("initial_level must lie in [0, 20]");
        for (int q : osc_orders)
            if (q < 0)
                throw ConfigError("oscillation orders must be >= 0");
        if (assembly_extra < 0 || error_extra < 0 || estimator_points < 0)
            throw ConfigError("quadrature settings must be >= 0");
        if (max_elements < 1 || max_iterations < 1)
            throw ConfigError("stop limits must be positive");
        if (eta_tolerance < 0.0)
            throw ConfigError("eta_tol must be >= 0");
        if (rate_window < 2)
            throw ConfigError("rate_window must be >= 2");
        if (threads < 0)
            throw ConfigError("threads must be >= 0");
    }
};

namespace detail {

inline std::string format_double(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

template <class T>
std::string join(const T& values)
{
    std::string s;
    for (const auto& v : values) {
        if (!s.empty())
            s += ' ';
        if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
            s += format_double(v);
        else
            s += std::to_string(v);
    }
    return s;
}

template <class T>
std::vector<T> split_numbers(const std::string& key, const std::string& text)
{
    std::istringstream in(text);
    std::vector<T> out;
    std::string tok;
    while (in >> tok) {
        T v{};
        const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
            throw ConfigError("bad number '" + tok + "' for " + key);
        out.push_back(v);
    }
    return out;
}

template <class T>
T parse_scalar(const std::string& key, const std::string& text)
{
    const auto v = split_numbers<T>(key, text);
    if (v.size() != 1)
        throw ConfigError(key + " expects one value");
    return v[0];
}

inline bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes")
        return true;
    if (text == "false" || text == "0" || text == "no")
        return false;
    throw ConfigError(key + " expects true or false");
}

template <class T>
std::array<T, 2> parse_pair(const std::string& key, const std::string& text)
{
    const auto v = split_numbers<T>(key, text);
    if (v.size() != 2)
        throw ConfigError(key + " expects two values");
    return {v[0], v[1]};
}

}  // namespace detail

inline std::string serialize(const RunConfig& c)
{
    using detail::format_double;
    using detail::join;
    std::ostringstream o;
    o << "[domain]\n"
      << "N = " << join(c.sizes) << "\n"
      << "p = " << join(c.degrees) << "\n"
      << "initial_level = " << c.initial_level << "\n\n"
      << "[geometry]\n"
      << "name = " << c.geometry << "\n"
      << "params = " << join(c.geometry_params) << "\n\n"
      << "[pde]\n"
      << "name = " << c.pde << "\n"
      << "params = " << join(c.pde_params) << "\n\n"
      << "[marking]\n"
      << "theta = " << format_double(c.theta) << "\n"
      << "uniform = " << (c.uniform ? "true" : "false") << "\n\n"
      << "[oscillation]\n"
      << "orders = " << join(c.osc_orders) << "\n\n"
      << "[quadrature]\n"
      << "assembly_extra = " << c.assembly_extra << "\n"
      << "error_extra = " << c.error_extra << "\n"
      << "estimator_points = " << c.estimator_points << "\n\n"
      << "[stop]\n"
      << "max_elements = " << c.max_elements << "\n"
      << "max_iterations = " << c.max_iterations << "\n"
      << "eta_tol = " << format_double(c.eta_tolerance) << "\n\n"
      << "[output]\n"
      << "dir = " << c.output_dir << "\n"
      << "dump_meshes = " << (c.dump_meshes ? "true" : "false") << "\n"
      << "dump_indicators = " << (c.dump_indicators ? "true" : "false") << "\n"
      << "rate_window = " << c.rate_window << "\n\n"
      << "[run]\n"
      << "seed = " << c.seed << "\n"
      << "threads = " << c.threads << "\n";
    return o.str();
}

/// Parses INI text on top of the defaults. Unknown sections or keys are
/// errors. The result is not validated.
inline RunConfig parse_config(std::istream& in)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    RunConfig c;
    using namespace detail;
    const std::map<std::string, std::set<std::string>> known{
        {"domain", {"N", "p", "initial_level"}},
        {"geometry", {"name", "params"}},
        {"pde", {"name", "params"}},
        {"marking", {"theta", "uniform"}},
        {"oscillation", {"orders"}},
        {"quadrature", {"assembly_extra", "error_extra", "estimator_points"}},
        {"stop", {"max_elements", "max_iterations", "eta_tol"}},
        {"output", {"dir", "dump_meshes", "dump_indicators", "rate_window"}},
        {"run", {"seed", "threads"}},
    };
    for (const auto& [section, body] : tree) {
        const auto sec = known.find(section);
        if (sec == known.end())
            throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            if (!sec->second.count(key))
                throw ConfigError("unknown key " + section + "." + key);
            const std::string name = section + "." + key;
            const std::string v = node.get_value<std::string>();
            if (name == "domain.N")
                c.sizes = parse_pair<int>(name, v);
            else if (name == "domain.p")
                c.degrees = parse_pair<int>(name, v);
            else if (name == "domain.initial_level")
                c.initial_level = parse_scalar<int>(name, v);
            else if (name == "geometry.name")
                c.geometry = v;
            else if (name == "geometry.params")
                c.geometry_params = split_numbers<double>(name, v);
            else if (name == "pde.name")
                c.pde = v;
            else if (name == "pde.params")
                c.pde_params = split_numbers<double>(name, v);
            else if (name == "marking.theta")
                c.theta = parse_scalar<double>(name, v);
            else if (name == "marking.uniform")
                c.uniform = parse_bool(name, v);
            else if (name == "oscillation.orders")
                c.osc_orders = parse_pair<int>(name, v);
            else if (name == "quadrature.assembly_extra")
                c.assembly_extra = parse_scalar<int>(name, v);
            else if (name == "quadrature.error_extra")
                c.error_extra = parse_scalar<int>(name, v);
            else if (name == "quadrature.estimator_points")
                c.estimator_points = parse_scalar<int>(name, v);
            else if (name == "stop.max_elements")
                c.max_elements = parse_scalar<std::size_t>(name, v);
            else if (name == "stop.max_iterations")
                c.max_iterations = parse_scalar<int>(name, v);
            else if (name == "stop.eta_tol")
                c.eta_tolerance = parse_scalar<double>(name, v);
            else if (name == "output.dir")
                c.output_dir = v;
            else if (name == "output.dump_meshes")
                c.dump_meshes = parse_bool(name, v);
            else if (name == "output.dump_indicators")
                c.dump_indicators = parse_bool(name, v);
            else if (name == "output.rate_window")
                c.rate_window = parse_scalar<int>(name, v);
            else if (name == "run.seed")
                c.seed = parse_scalar<std::uint64_t>(name, v);
            else if (name == "run.threads")
                c.threads = parse_scalar<int>(name, v);
        }
    }
    return c;
}

inline RunConfig parse_config(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

}  // namespace tsafem

#endif  // TSAFEM_CONFIG_HPP

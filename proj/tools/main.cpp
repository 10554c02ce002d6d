// tsafem: adaptive T-spline FEM runs, property suites and mesh dumps.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tsafem/study.hpp"
#include "tsafem/verify.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_solver = 3;

struct RunFlags {
    std::string config;
    std::optional<double> theta;
    std::vector<int> degrees;
    std::optional<std::string> geometry;
    std::optional<std::string> pde;
    std::optional<std::size_t> max_elements;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    bool uniform = false;
    bool quiet = false;
};

tsafem::RunConfig load_config(const RunFlags& f)
{
    tsafem::RunConfig c;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in)
            throw tsafem::ConfigError("cannot open config " + f.config);
        c = tsafem::parse_config(in);
    }
    if (f.theta)
        c.theta = *f.theta;
    if (!f.degrees.empty()) {
        if (f.degrees.size() != 2)
            throw tsafem::ConfigError("--degrees expects two values");
        c.degrees = {f.degrees[0], f.degrees[1]};
    }
    if (f.geometry) {
        if (*f.geometry != c.geometry)
            c.geometry_params.clear();
        c.geometry = *f.geometry;
    }
    if (f.pde) {
        if (*f.pde != c.pde)
            c.pde_params.clear();
        c.pde = *f.pde;
    }
    if (f.max_elements)
        c.max_elements = *f.max_elements;
    if (f.threads)
        c.threads = *f.threads;
    if (f.seed)
        c.seed = *f.seed;
    if (f.uniform)
        c.uniform = true;
    // Output directory: flag, then environment, then config.
    if (const char* env = std::getenv("TSAFEM_OUT"); env && *env)
        c.output_dir = env;
    if (f.out)
        c.output_dir = *f.out;
    c.validate();
    return c;
}

int cmd_run(const RunFlags& f)
{
    const auto c = load_config(f);
    tsafem::set_thread_count(c.threads);
    const auto res = tsafem::run_study(c, c.output_dir, f.quiet ? nullptr : &std::cout);
    if (res.solver_failed) {
        std::cerr << "solver failure: " << res.error << '\n';
        return exit_solver;
    }
    std::cout << "wrote " << c.output_dir << '\n';
    return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, int threads)
{
    tsafem::set_thread_count(threads);
    const auto report = tsafem::verify::run_suite(suite, seed);
    for (const auto& c : report) {
        std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.suite << ": " << c.name;
        if (!c.detail.empty())
            std::cout << "  (" << c.detail << ")";
        std::cout << '\n';
    }
    const bool ok = tsafem::verify::all_passed(report);
    std::cout << (ok ? "all properties hold" : "some properties failed") << '\n';
    return ok ? 0 : 1;
}

int cmd_dump_mesh(const std::string& run_dir, int iter, bool indicators, const std::string& out)
{
    const auto c = tsafem::parse_config(tsafem::detail::read_text(tsafem::fs::path(run_dir) / "config.cfg"));
    c.validate();
    tsafem::set_thread_count(c.threads);
    const auto marks = tsafem::read_marks(run_dir);
    const auto mesh = tsafem::replay_mesh(c, marks, iter);
    const std::string text = indicators ? tsafem::replay_indicators(c, mesh).dump(1) + "\n"
                                        : tsafem::mesh_to_json(mesh).dump(1) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        tsafem::detail::write_text(out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adaptive isogeometric FEM with T-splines"};
    app.require_subcommand(1);

    RunFlags rf;
    auto* run = app.add_subcommand("run", "Run the adaptive loop and write CSV/JSON outputs");
    run->add_option("--config", rf.config, "INI configuration file");
    run->add_option("--theta", rf.theta, "Doerfler parameter in (0, 1]");
    run->add_option("--degrees", rf.degrees, "Spline degrees p1 p2 (odd, >= 3)")->expected(2);
    run->add_option("--geometry", rf.geometry, "Geometry map: identity, affine, bilinear, annulus");
    run->add_option("--pde", rf.pde, "PDE preset: sine, corner, convdiff, fluxload");
    run->add_option("--max-elements", rf.max_elements, "Stop once the mesh has this many elements");
    run->add_option("--out", rf.out, "Output directory (overrides TSAFEM_OUT)");
    run->add_option("--threads", rf.threads, "Worker threads, 0 = all cores");
    run->add_option("--seed", rf.seed, "Seed recorded with the run");
    run->add_flag("--uniform", rf.uniform, "Refine every element instead of marking");
    run->add_flag("--quiet", rf.quiet, "No per-iteration log");

    std::string suite = "all";
    std::uint64_t seed = 42;
    int vthreads = 0;
    auto* ver = app.add_subcommand("verify", "Run property suites");
    ver->add_option("suite", suite, "mesh, refine, basis, fem, estimator or all")
        ->check(CLI::IsMember({"mesh", "refine", "basis", "fem", "estimator", "all"}));
    ver->add_option("--seed", seed, "Seed of the random cases");
    ver->add_option("--threads", vthreads, "Worker threads, 0 = all cores");

    std::string run_dir, dump_out;
    int iter = 0;
    bool dump_ind = false;
    auto* dump = app.add_subcommand("dump-mesh", "Rebuild the mesh of one iteration of a finished run");
    dump->add_option("--run", run_dir, "Output directory of the run")->required();
    dump->add_option("--iter", iter, "Iteration number")->required();
    dump->add_flag("--indicators", dump_ind, "Emit the indicator dump instead of the mesh");
    dump->add_option("--out", dump_out, "Destination file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*run)
            return cmd_run(rf);
        if (*ver)
            return cmd_verify(suite, seed, vthreads);
        return cmd_dump_mesh(run_dir, iter, dump_ind, dump_out);
    } catch (const tsafem::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const tsafem::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return exit_solver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return exit_config;
    }
}

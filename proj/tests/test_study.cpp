#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "tsafem/study.hpp"

using namespace tsafem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("tsafem_test_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig small_config()
{
    RunConfig c;
    c.initial_level = 2;
    c.max_elements = 300;
    c.dump_meshes = true;
    c.dump_indicators = true;
    c.pde = "corner";
    c.pde_params = {1.5};
    c.threads = 1;
    return c;
}

}  // namespace

TEST(Config, SerializeParseRoundTrip)
{
    RunConfig c;
    c.sizes = {2, 3};
    c.degrees = {5, 3};
    c.initial_level = 1;
    c.geometry = "affine";
    c.geometry_params = {2, 0.5, 0, 1, -0.25, 1e-3};
    c.pde = "corner";
    c.pde_params = {1.25};
    c.theta = 0.3;
    c.uniform = true;
    c.osc_orders = {4, 6};
    c.estimator_points = 9;
    c.max_elements = 1234;
    c.eta_tolerance = 1e-7;
    c.output_dir = "runs/a";
    c.dump_meshes = true;
    c.rate_window = 3;
    c.seed = 77;
    c.threads = 2;
    EXPECT_EQ(parse_config(serialize(c)), c);
    EXPECT_EQ(parse_config(serialize(RunConfig{})), RunConfig{});
}

TEST(Config, PartialFileKeepsDefaults)
{
    const auto c = parse_config(std::string("[marking]\ntheta = 0.25\n"));
    EXPECT_EQ(c.theta, 0.25);
    RunConfig d;
    d.theta = 0.25;
    EXPECT_EQ(c, d);
}

TEST(Config, MissingGeometryNameIsRejected)
{
    const auto c = parse_config(std::string("[geometry]\nname =\n"));
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, BadInputIsRejected)
{
    EXPECT_THROW(parse_config(std::string("[nonsense]\na = 1\n")), ConfigError);
    EXPECT_THROW(parse_config(std::string("[marking]\nalpha = 1\n")), ConfigError);
    EXPECT_THROW(parse_config(std::string("[domain]\np = 3\n")), ConfigError);
    EXPECT_THROW(parse_config(std::string("[marking]\ntheta = half\n")), ConfigError);
    EXPECT_THROW(parse_config(std::string("[domain]\np = 4 3\n")).validate(), ConfigError);
    EXPECT_THROW(parse_config(std::string("[marking]\ntheta = 0\n")).validate(), ConfigError);
    EXPECT_THROW(parse_config(std::string("[pde]\nname = heat\n")).validate(), ConfigError);
    EXPECT_THROW(parse_config(std::string("[geometry]\nname = annulus\nparams = 2 1\n")).validate(), ConfigError);
}

TEST(Config, ExactSolutionOnlyOnIdentityMap)
{
    RunConfig c;
    EXPECT_TRUE(c.make_pde_data().has_exact());
    c.geometry = "annulus";
    c.geometry_params = {1, 2};
    EXPECT_FALSE(c.make_pde_data().has_exact());
}

TEST(Study, WritesArtifactsAndReplaysBitIdentically)
{
    const auto dir = scratch("replay");
    const auto c = small_config();
    const auto res = run_study(c, dir);
    ASSERT_FALSE(res.solver_failed);
    ASSERT_GE(res.states.size(), 3u);

    EXPECT_EQ(parse_config(detail::read_text(dir / "config.cfg")), c);
    const auto summary = nlohmann::json::parse(detail::read_text(dir / "summary.json"));
    EXPECT_TRUE(summary["complete"].get<bool>());
    EXPECT_EQ(summary["iterations"].get<std::size_t>(), res.states.size());

    std::ifstream csv(dir / "history.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, history_header);
    std::size_t rows = 0;
    while (std::getline(csv, line))
        ++rows;
    EXPECT_EQ(rows, res.states.size());

    const auto marks = read_marks(dir);
    ASSERT_EQ(marks.size(), res.states.size());
    for (int it = 0; it < static_cast<int>(marks.size()); ++it) {
        const auto mesh = replay_mesh(c, marks, it);
        EXPECT_TRUE(mesh.same_content(*res.states[static_cast<std::size_t>(it)].mesh));
        EXPECT_EQ(mesh_to_json(mesh).dump(1) + "\n",
                  detail::read_text(dir / "meshes" / detail::iteration_name("mesh", it, ".json")));
        EXPECT_TRUE(mesh_from_json<2>(nlohmann::json::parse(mesh_to_json(mesh).dump())).same_content(mesh));
    }
    const int last = static_cast<int>(marks.size()) - 1;
    EXPECT_EQ(replay_indicators(c, replay_mesh(c, marks, last)).dump(1) + "\n",
              detail::read_text(dir / "indicators" / detail::iteration_name("indicators", last, ".json")));
    EXPECT_TRUE(replay_mesh(c, marks, 0).same_content(initial_mesh(c)));
    EXPECT_THROW((void)replay_mesh(c, marks, last + 1), ConfigError);
    fs::remove_all(dir);
}

TEST(Study, DeterministicOutputs)
{
    const auto a = scratch("det_a"), b = scratch("det_b");
    auto c = small_config();
    c.dump_indicators = false;
    run_study(c, a);
    run_study(c, b);
    EXPECT_EQ(detail::read_text(a / "marks.json"), detail::read_text(b / "marks.json"));
    for (const auto& e : fs::directory_iterator(a / "meshes"))
        EXPECT_EQ(detail::read_text(e.path()), detail::read_text(b / "meshes" / e.path().filename()));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Study, MissingArtifactsAreConfigErrors)
{
    const auto dir = scratch("missing");
    fs::create_directories(dir);
    EXPECT_THROW((void)read_marks(dir), ConfigError);
    fs::remove_all(dir);
}

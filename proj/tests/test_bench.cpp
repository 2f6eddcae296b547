#include "stmesh/scenario.hpp"

#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace stmesh;

TEST_CASE("config defaults, validation, and file parsing")
{
    ScenarioConfig cfg;
    cfg.scenario = "rising_bubble_2d";
    ScenarioConfig r = resolved_config(cfg);
    CHECK(r.nx == 40);
    CHECK(r.ny == 80);
    CHECK(r.dt == doctest::Approx(0.02));
    CHECK(r.tmax == doctest::Approx(3.0));

    cfg.scenario = "no_such_scenario";
    CHECK_THROWS_AS(resolved_config(cfg), std::invalid_argument);
    cfg.scenario = "translation_2d";
    cfg.mode = "bogus";
    CHECK_THROWS_AS(resolved_config(cfg), std::invalid_argument);
    cfg.mode = "prism";
    cfg.dt = 0.03;
    cfg.tmax = 0.1;  // not a multiple
    CHECK_THROWS_AS(resolved_config(cfg), std::invalid_argument);

    const std::string path = "bench_config_test.cfg";
    {
        std::ofstream out(path);
        out << "# comment line\n"
            << "scenario = rotation_2d\n"
            << "mode=simplex_refined   # trailing comment\n"
            << "dt = 0.025\n"
            << "seed = 42\n"
            << "nx=16\n";
    }
    ScenarioConfig loaded = load_config(path);
    std::remove(path.c_str());
    CHECK(loaded.scenario == "rotation_2d");
    CHECK(loaded.mode == "simplex_refined");
    CHECK(loaded.seed == 42);
    CHECK(loaded.nx == 16);
    CHECK_THROWS_AS(apply_config_entry(loaded, "unknown_key", "1"), std::invalid_argument);
}

TEST_CASE("Reynolds and Eotvos numbers for the rising-bubble data")
{
    MaterialPair m;
    m.rho1 = 1000.0;
    m.rho2 = 100.0;
    m.mu1 = 10.0;
    m.mu2 = 1.0;
    m.gamma = 24.5;
    auto [re, eo] = dimensionless_numbers(m, 0.5, 0.98);
    CHECK(re == doctest::Approx(35.0).epsilon(1e-12));
    CHECK(eo == doctest::Approx(10.0).epsilon(1e-12));

    MaterialPair stiff = m;
    stiff.gamma = 1e12;
    CHECK(dimensionless_numbers(stiff, 0.5, 0.98).second < 1e-9);
    // d x4 scales Re by 4^(3/2) = 8.
    CHECK(dimensionless_numbers(m, 2.0, 0.98).first == doctest::Approx(8.0 * 35.0));
    CHECK_THROWS_AS(dimensionless_numbers(m, -1.0, 0.98), std::invalid_argument);
}

TEST_CASE("translation scenario transports the affine field exactly in every mode")
{
    for (const char* mode : {"prism", "simplex_unrefined", "simplex_refined"}) {
        ScenarioConfig cfg;
        cfg.scenario = "translation_2d";
        cfg.mode = mode;
        cfg.nx = cfg.ny = 6;
        cfg.dt = 0.01;
        cfg.tmax = 0.05;
        RunResult run = run_scenario(cfg);
        CHECK(run.perf.steps == 5);
        CHECK(run.metrics.size() == 5);
        ScenarioSetup setup = make_scenario(resolved_config(cfg));
        for (int i = 0; i < run.mesh.node_count(); ++i) {
            const double xt[3] = {run.mesh.node2(i).x(), run.mesh.node2(i).y(), cfg.tmax};
            CHECK(std::abs(run.phi_final[i] - setup.exact_phi(xt)) < 1e-9);
        }
    }
}

TEST_CASE("identical config and seed give identical metrics")
{
    ScenarioConfig cfg;
    cfg.scenario = "rotation_2d";
    cfg.mode = "simplex_refined";
    cfg.nx = cfg.ny = 8;
    cfg.dt = 0.025;
    cfg.tmax = 0.1;
    cfg.seed = 7;
    RunResult a = run_scenario(cfg);
    RunResult b = run_scenario(cfg);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].x_c == b.metrics[i].x_c);
        CHECK(a.metrics[i].y_c == b.metrics[i].y_c);
        CHECK(a.metrics[i].phase_measure == b.metrics[i].phase_measure);
    }
    std::ostringstream csv_a, csv_b;
    // Byte-identical CSV via the same writer on both runs.
    const std::string pa = "bench_metrics_a.csv", pb = "bench_metrics_b.csv";
    write_metrics_csv(pa, a.metrics);
    write_metrics_csv(pb, b.metrics);
    std::ifstream fa(pa), fb(pb);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    std::remove(pa.c_str());
    std::remove(pb.c_str());
}

TEST_CASE("a run compares equal to itself and rejects mismatched dt")
{
    ScenarioConfig cfg;
    cfg.scenario = "translation_2d";
    cfg.mode = "simplex_unrefined";
    cfg.nx = cfg.ny = 6;
    cfg.dt = 0.01;
    cfg.tmax = 0.05;
    cfg.snapshot_every = 2;
    RunResult run = run_scenario(cfg);
    RunComparison cmp = compare_runs(run, run);
    CHECK(!cmp.snapshot_times.empty());
    CHECK(cmp.max_centroid_diff == 0.0);
    CHECK(cmp.max_hausdorff == 0.0);

    ScenarioConfig other = cfg;
    other.dt = 0.005;
    other.tmax = 0.05;
    RunResult run2 = run_scenario(other);
    CHECK_THROWS_AS(compare_runs(run, run2), std::invalid_argument);
}

TEST_CASE("3D transport scenario builds pentatope slabs and advects the droplet")
{
    ScenarioConfig cfg;
    cfg.scenario = "droplet_3d_meshgen";
    cfg.mode = "simplex_refined";
    cfg.nx = cfg.ny = 2;
    cfg.nz = 4;
    cfg.max_level = 3;
    cfg.dt = 0.05;
    cfg.tmax = 0.1;
    RunResult run = run_scenario(cfg);
    CHECK(run.perf.steps == 2);
    CHECK(run.perf.nodes_min > run.mesh.node_count());  // refined columns
    CHECK(run.metrics.back().phase_measure > 0.0);
    // The droplet centroid moves with the prescribed velocity (0, 0, 0.5);
    // coarse-mesh tolerance only.
    CHECK(run.metrics.back().phase_measure ==
          doctest::Approx(run.metrics.front().phase_measure).epsilon(0.2));
}

TEST_CASE("performance report lists rows with the prism baseline note")
{
    PerformanceRow row;
    row.label = "step_cavity_2d/prism";
    row.steps = 320;
    row.nodes_min = row.nodes_max = 730;
    row.nodes_mean = 730.0;
    row.elems_min = row.elems_max = 624;
    row.elems_mean = 624.0;
    row.formation_seconds = 1.5;
    row.solution_seconds = 2.5;
    std::string report = performance_report({row});
    CHECK(report.find("step_cavity_2d/prism") != std::string::npos);
    CHECK(report.find("prism") != std::string::npos);
    CHECK(report.find("730") != std::string::npos);
}

TEST_CASE("run artifacts land in the output directory")
{
    ScenarioConfig cfg;
    cfg.scenario = "translation_2d";
    cfg.mode = "prism";
    cfg.nx = cfg.ny = 4;
    cfg.dt = 0.01;
    cfg.tmax = 0.03;
    cfg.snapshot_every = 1;
    cfg.out_dir = "bench_artifact_test";
    RunResult run = run_scenario(cfg);
    write_run_artifacts(run);
    CHECK(std::filesystem::exists("bench_artifact_test/metrics.csv"));
    CHECK(std::filesystem::exists("bench_artifact_test/perf.csv"));
    CHECK(std::filesystem::exists("bench_artifact_test/manifest.txt"));
    CHECK(std::filesystem::exists("bench_artifact_test/snapshot_00001.vtk"));
    std::filesystem::remove_all("bench_artifact_test");
}

// Command-line front end: scenario runs, structured mesh generation, mesh
// inspection/validation, and two-run comparisons.

#include "stmesh/scenario.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

void add_config_flags(CLI::App* cmd, stmesh::ScenarioConfig& cfg, std::string& config_path)
{
    cmd->add_option("--config", config_path, "key=value config file (flags override it)");
    cmd->add_option("--scenario", cfg.scenario,
                    "rising_bubble_2d | step_cavity_2d | droplet_3d_meshgen | translation_2d | "
                    "rotation_2d");
    cmd->add_option("--mode", cfg.mode, "prism | simplex_unrefined | simplex_refined");
    cmd->add_option("--mesh", cfg.mesh_path, "spatial mesh file (overrides the built-in grid)");
    cmd->add_option("--dt", cfg.dt, "slab thickness (0 = scenario default)");
    cmd->add_option("--tmax", cfg.tmax, "end time (0 = scenario default)");
    cmd->add_option("--max-level", cfg.max_level, "maximum temporal refinement level (1-5)");
    cmd->add_option("--band-width", cfg.band_width, "narrow-band half width (0 = default)");
    cmd->add_option("--seed", cfg.seed, "perturbation seed");
    cmd->add_option("--out", cfg.out_dir, "output directory for CSV/VTK artifacts");
    cmd->add_option("--nx", cfg.nx, "grid cells in x (0 = scenario default)");
    cmd->add_option("--ny", cfg.ny, "grid cells in y");
    cmd->add_option("--nz", cfg.nz, "grid cells in z (3D scenarios)");
}

stmesh::ScenarioConfig merge_config(const std::string& config_path,
                                    const stmesh::ScenarioConfig& flags, const CLI::App* cmd)
{
    stmesh::ScenarioConfig cfg =
        config_path.empty() ? stmesh::ScenarioConfig{} : stmesh::load_config(config_path);
    // Flags win over the file; only copy what the user actually set.
    auto given = [&](const std::string& name) { return cmd->count(name) > 0; };
    if (given("--scenario")) cfg.scenario = flags.scenario;
    if (given("--mode")) cfg.mode = flags.mode;
    if (given("--mesh")) cfg.mesh_path = flags.mesh_path;
    if (given("--dt")) cfg.dt = flags.dt;
    if (given("--tmax")) cfg.tmax = flags.tmax;
    if (given("--max-level")) cfg.max_level = flags.max_level;
    if (given("--band-width")) cfg.band_width = flags.band_width;
    if (given("--seed")) cfg.seed = flags.seed;
    if (given("--out")) cfg.out_dir = flags.out_dir;
    if (given("--nx")) cfg.nx = flags.nx;
    if (given("--ny")) cfg.ny = flags.ny;
    if (given("--nz")) cfg.nz = flags.nz;
    return cfg;
}

int do_run(const stmesh::ScenarioConfig& cfg)
{
    stmesh::RunResult run = stmesh::run_scenario(cfg);
    if (!run.config.out_dir.empty())
        stmesh::write_run_artifacts(run);
    std::cout << stmesh::performance_report({run.perf});
    if (!run.metrics.empty()) {
        const auto& last = run.metrics.back();
        std::cout << "final: t=" << last.t << " centroid=(" << last.x_c << ", " << last.y_c
                  << ") phase_measure=" << last.phase_measure << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"unstructured simplex space-time slab meshing and two-phase flow benchmarks"};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    stmesh::ScenarioConfig run_cfg;
    std::string run_config_path;
    CLI::App* run_cmd = app.add_subcommand("run", "run a scenario and emit metrics/VTK");
    add_config_flags(run_cmd, run_cfg, run_config_path);

    // --- genmesh -----------------------------------------------------------
    CLI::App* gen_cmd = app.add_subcommand("genmesh", "write a structured spatial mesh");
    std::string gen_kind = "rect", gen_out = "mesh.txt";
    int gnx = 10, gny = 10, gnz = 10;
    double glx = 1.0, gly = 1.0, glz = 1.0, gh = 0.05;
    gen_cmd->add_option("--kind", gen_kind, "rect | box | step_cavity");
    gen_cmd->add_option("--nx", gnx);
    gen_cmd->add_option("--ny", gny);
    gen_cmd->add_option("--nz", gnz);
    gen_cmd->add_option("--lx", glx);
    gen_cmd->add_option("--ly", gly);
    gen_cmd->add_option("--lz", glz);
    gen_cmd->add_option("--cell", gh, "step-cavity cell size");
    gen_cmd->add_option("--out", gen_out, "output mesh file")->required();

    // --- info / validate ---------------------------------------------------
    CLI::App* info_cmd = app.add_subcommand("info", "print mesh statistics");
    std::string info_path;
    info_cmd->add_option("--mesh", info_path)->required();

    CLI::App* val_cmd = app.add_subcommand("validate", "load a mesh and check its invariants");
    std::string val_path;
    val_cmd->add_option("--mesh", val_path)->required();

    // --- compare -----------------------------------------------------------
    CLI::App* cmp_cmd =
        app.add_subcommand("compare", "run one scenario in two modes and compare interfaces");
    stmesh::ScenarioConfig cmp_cfg;
    std::string cmp_config_path, mode_a = "prism", mode_b = "simplex_refined";
    add_config_flags(cmp_cmd, cmp_cfg, cmp_config_path);
    cmp_cmd->add_option("--mode-a", mode_a, "first mode");
    cmp_cmd->add_option("--mode-b", mode_b, "second mode");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd)
            return do_run(merge_config(run_config_path, run_cfg, run_cmd));

        if (*gen_cmd) {
            stmesh::SpatialMesh mesh;
            if (gen_kind == "rect")
                mesh = stmesh::make_rect_mesh(gnx, gny, glx, gly);
            else if (gen_kind == "box")
                mesh = stmesh::make_box_mesh(gnx, gny, gnz, glx, gly, glz);
            else if (gen_kind == "step_cavity")
                mesh = stmesh::make_step_cavity_mesh(gh);
            else
                throw std::invalid_argument("unknown mesh kind '" + gen_kind + "'");
            stmesh::save_spatial_mesh(mesh, gen_out);
            std::cout << gen_out << ": " << mesh.node_count() << " nodes, "
                      << mesh.element_count() << " elements\n";
            return 0;
        }

        if (*info_cmd || *val_cmd) {
            const std::string& path = *info_cmd ? info_path : val_path;
            stmesh::SpatialMesh mesh = stmesh::load_spatial_mesh(path);
            std::cout << path << ": dim " << mesh.dim << ", " << mesh.node_count() << " nodes, "
                      << mesh.element_count() << " elements, measure "
                      << mesh.total_measure() << ", " << mesh.boundary_tags.size()
                      << " tagged boundary facets\n";
            if (*val_cmd)
                std::cout << "OK: positively oriented, conforming facet incidence\n";
            return 0;
        }

        if (*cmp_cmd) {
            stmesh::ScenarioConfig base = merge_config(cmp_config_path, cmp_cfg, cmp_cmd);
            stmesh::ScenarioConfig ca = base, cb = base;
            ca.mode = mode_a;
            cb.mode = mode_b;
            if (!base.out_dir.empty()) {
                ca.out_dir = base.out_dir + "/" + mode_a;
                cb.out_dir = base.out_dir + "/" + mode_b;
            }
            stmesh::RunResult ra = stmesh::run_scenario(ca);
            stmesh::RunResult rb = stmesh::run_scenario(cb);
            if (!ca.out_dir.empty()) {
                stmesh::write_run_artifacts(ra);
                stmesh::write_run_artifacts(rb);
            }
            std::cout << stmesh::performance_report({ra.perf, rb.perf});
            stmesh::RunComparison cmp = stmesh::compare_runs(ra, rb);
            std::cout << "t  |y_c diff|  hausdorff\n";
            for (std::size_t i = 0; i < cmp.snapshot_times.size(); ++i)
                std::cout << cmp.snapshot_times[i] << "  " << cmp.centroid_diff[i] << "  "
                          << cmp.hausdorff[i] << "\n";
            std::cout << "max centroid diff " << cmp.max_centroid_diff << ", max hausdorff "
                      << cmp.max_hausdorff << "\n";
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}

#include "stmesh/simplexifier.hpp"

#include "doctest.h"

#include <random>
#include <sstream>

using namespace stmesh;

namespace {

SpatialMesh unit_triangle()
{
    std::istringstream in("dim 2\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 2\n");
    return load_spatial_mesh(in);
}

SpatialMesh unit_tet()
{
    std::istringstream in("dim 3\nnodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelements 1\n0 1 2 3\n");
    return load_spatial_mesh(in);
}

double simplices_volume(const PrismComplex& complex, const std::vector<std::vector<int>>& simplices)
{
    // Assemble coordinates and sum |volumes|.
    const int d = complex.mesh->dim + 1;
    std::vector<double> coords(static_cast<std::size_t>(complex.slab_node_count()) * d);
    for (const auto& col : complex.columns)
        for (std::size_t k = 0; k < col.times.size(); ++k) {
            for (int c = 0; c < complex.mesh->dim; ++c)
                coords[static_cast<std::size_t>(col.slab_node_ids[k]) * d + c] =
                    complex.mesh->coord(col.spatial_node, c);
            coords[static_cast<std::size_t>(col.slab_node_ids[k]) * d + complex.mesh->dim] =
                col.times[k];
        }
    double total = 0.0;
    for (const auto& s : simplices)
        total += std::abs(detail::slab_simplex_volume(complex, coords, s));
    return total;
}

}  // namespace

TEST_CASE("unrefined triangular prism subdivides into 3 tetrahedra")
{
    SpatialMesh mesh = unit_triangle();
    RefinementMap refinement = RefinementMap::uniform(3);
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.2, refinement);
    complex = perturb_times(complex, 0.05, 9);
    SubdivisionConfig config;
    auto simplices = subdivide_prism(complex, 0, config);
    CHECK(simplices.size() == 3);
    CHECK(simplices_volume(complex, simplices) == doctest::Approx(0.5 * 0.2).epsilon(1e-12));
}

TEST_CASE("unrefined tetrahedral prism subdivides into 4 pentatopes")
{
    SpatialMesh mesh = unit_tet();
    RefinementMap refinement = RefinementMap::uniform(4);
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.2, refinement);
    complex = perturb_times(complex, 0.05, 11);
    SubdivisionConfig config;
    auto simplices = subdivide_prism(complex, 0, config);
    CHECK(simplices.size() == 4);
    CHECK(simplices_volume(complex, simplices) ==
          doctest::Approx(1.0 / 6.0 * 0.2).epsilon(1e-12));
}

TEST_CASE("deterministic mode uses the index-ordered staircase split")
{
    SpatialMesh mesh = unit_triangle();
    RefinementMap refinement = RefinementMap::uniform(3);
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.2, refinement);
    SubdivisionConfig config;
    config.deterministic_mode = true;
    auto a = subdivide_prism(complex, 0, config);
    auto b = subdivide_prism(complex, 0, config);
    CHECK(a.size() == 3);
    CHECK(a == b);
    CHECK(simplices_volume(complex, a) == doctest::Approx(0.5 * 0.2).epsilon(1e-12));
}

TEST_CASE("mixed-column prism (2,2,4): simplex count in range, volume exact")
{
    SpatialMesh mesh = unit_triangle();
    RefinementMap refinement;
    refinement.level = {1, 1, 3};
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.2, refinement);
    complex = perturb_times(complex, 0.05, 13);
    SubdivisionConfig config;
    auto simplices = subdivide_prism(complex, 0, config);
    CHECK(simplices.size() >= 3);
    CHECK(simplices.size() <= 7);
    CHECK(simplices_volume(complex, simplices) == doctest::Approx(0.5 * 0.2).epsilon(1e-12));
}

TEST_CASE("sliver elimination")
{
    SubdivisionConfig config;
    std::vector<std::vector<int>> simplices{{0, 1, 2, 3}, {1, 2, 3, 4}, {4, 5, 6, 7}};
    std::vector<double> volumes{0.5, 0.5, 1e-13};
    int removed = 0;
    auto kept = eliminate_slivers(simplices, volumes, 1.0, config, &removed);
    CHECK(kept.size() == 2);
    CHECK(removed == 1);

    // A genuinely missing chunk of volume is an error, not a sliver.
    std::vector<std::vector<int>> short_list{{0, 1, 2, 3}};
    std::vector<double> short_volumes{0.7};
    CHECK_THROWS_AS(eliminate_slivers(short_list, short_volumes, 1.0, config, nullptr),
                    subdivision_error);
}

TEST_CASE("two-triangle slab: shared facet split consistently on both sides")
{
    SpatialMesh mesh = make_rect_mesh(1, 1, 1.0, 1.0);  // 2 triangles
    RefinementMap refinement = RefinementMap::uniform(mesh.node_count());
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.1, refinement);
    complex = perturb_times(complex, 0.05, 17);
    SubdivisionConfig config;
    config.seed = 17;
    auto [slab, stats] = build_slab_mesh(complex, config);
    CHECK(slab.simplex_count() == 6);
    ConformityReport report = validate_conformity(slab, 1.0 * 0.1);
    CHECK(report.valid());
    CHECK(report.volume_defect < 1e-12);
}

TEST_CASE("hybrid slab over the step-cavity mesh is conforming")
{
    SpatialMesh mesh = make_step_cavity_mesh();
    LevelSetField phi;
    phi.values.resize(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i)
        phi[i] = mesh.node2(i).x() - 0.7;  // band around x = 0.7
    RefinementMap refinement = classify_narrow_band(phi, 0.15, 5, BandMode::graded);
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.005, refinement);
    complex = perturb_times(complex, 0.05, 23);
    SubdivisionConfig config;
    config.seed = 23;
    auto [slab, stats] = build_slab_mesh(complex, config);
    ConformityReport report = validate_conformity(slab, mesh.total_measure() * 0.005);
    CHECK(report.valid());
    CHECK(report.volume_defect < 1e-10);
    CHECK(stats.node_count == complex.slab_node_count());
    CHECK(stats.element_count > 3 * mesh.element_count());
}

TEST_CASE("deterministic unrefined slab: exactly 3 tets per prism, reproducible")
{
    SpatialMesh mesh = make_step_cavity_mesh();
    RefinementMap refinement = RefinementMap::uniform(mesh.node_count());
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.005, refinement);
    SubdivisionConfig config;
    config.deterministic_mode = true;
    auto [slab, stats] = build_slab_mesh(complex, config);
    CHECK(slab.simplex_count() == 3 * 624);
    CHECK(stats.simplices_per_prism_histogram.at(3) == 624);
    CHECK(validate_conformity(slab, mesh.total_measure() * 0.005).valid());

    auto [slab2, stats2] = build_slab_mesh(complex, config);
    CHECK(slab.simplices == slab2.simplices);
    CHECK(slab.coords == slab2.coords);
}

TEST_CASE("same seed gives a bit-identical perturbed slab")
{
    SpatialMesh mesh = make_rect_mesh(4, 4, 1.0, 1.0);
    RefinementMap refinement = RefinementMap::uniform(mesh.node_count(), 2);
    SubdivisionConfig config;
    config.seed = 31;
    auto build = [&]() {
        PrismComplex complex = extrude_slab(mesh, 0.0, 0.01, refinement);
        complex = perturb_times(complex, 0.05, config.seed);
        return build_slab_mesh(complex, config);
    };
    auto [a, sa] = build();
    auto [b, sb] = build();
    CHECK(a.coords == b.coords);
    CHECK(a.simplices == b.simplices);
}

TEST_CASE("per-prism Delaunay property against the brute-force oracle")
{
    // No prism node strictly inside any simplex circumsphere.
    SpatialMesh mesh = make_rect_mesh(2, 2, 1.0, 1.0);
    RefinementMap refinement = RefinementMap::uniform(mesh.node_count(), 3);
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.01, refinement);
    complex = perturb_times(complex, 0.05, 41);
    SubdivisionConfig config;
    for (int p = 0; p < complex.prism_count(); ++p) {
        auto simplices = subdivide_prism(complex, p, config);
        // Gather prism points.
        const int* el = mesh.element(p);
        std::map<int, Vec3> pts;
        for (int i = 0; i < 3; ++i) {
            const auto& col = complex.columns[el[i]];
            for (std::size_t k = 0; k < col.times.size(); ++k)
                pts[col.slab_node_ids[k]] =
                    Vec3(mesh.coord(el[i], 0), mesh.coord(el[i], 1), col.times[k]);
        }
        for (const auto& s : simplices) {
            std::array<Vec3, 4> v{pts.at(s[0]), pts.at(s[1]), pts.at(s[2]), pts.at(s[3])};
            auto [center, r2] = circumsphere<3>(v);
            for (const auto& [id, q] : pts) {
                if (id == s[0] || id == s[1] || id == s[2] || id == s[3])
                    continue;
                CHECK((q - center).squaredNorm() >= r2 * (1.0 - 1e-9));
            }
        }
    }
}

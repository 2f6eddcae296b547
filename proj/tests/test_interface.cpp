#include "stmesh/interface.hpp"
#include "stmesh/simplexifier.hpp"

#include "doctest.h"

#include <numbers>

using namespace stmesh;

namespace {

SpaceTimeSlabMesh single_tet()
{
    SpaceTimeSlabMesh mesh;
    mesh.dim_st = 3;
    mesh.t0 = 0.0;
    mesh.t1 = 1.0;
    mesh.coords = {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1};
    mesh.simplices = {0, 1, 2, 3};
    return mesh;
}

}  // namespace

TEST_CASE("tet with one negative vertex yields one midpoint triangle")
{
    SpaceTimeSlabMesh mesh = single_tet();
    LevelSetField phi;
    phi.values = {-1, 1, 1, 1};
    InterfaceFacets iface = extract_interface(mesh, phi);
    REQUIRE(iface.facet_count() == 1);
    // Crossings at the midpoints of the three edges from vertex 0.
    for (int v = 0; v < 3; ++v) {
        const double* p = iface.facet_vertex(0, v);
        CHECK(p[0] + p[1] + p[2] == doctest::Approx(0.5));
    }
    // Midpoint triangle of the unit tet corner: area sqrt(3)/8.
    CHECK(iface.facet_measure(0) == doctest::Approx(std::sqrt(3.0) / 8.0));
}

TEST_CASE("tet with two negative vertices yields two triangles")
{
    SpaceTimeSlabMesh mesh = single_tet();
    LevelSetField phi;
    phi.values = {-1, -1, 1, 1};
    InterfaceFacets iface = extract_interface(mesh, phi);
    CHECK(iface.facet_count() == 2);
}

TEST_CASE("all-zero element is reported degenerate and skipped")
{
    SpaceTimeSlabMesh mesh = single_tet();
    LevelSetField phi;
    phi.values = {0, 0, 0, 0};
    InterfaceFacets iface = extract_interface(mesh, phi);
    CHECK(iface.facet_count() == 0);
    CHECK(iface.degenerate_skipped == 1);
}

TEST_CASE("facet vertices lie on the zero set of the linear interpolant")
{
    SpatialMesh spatial = make_rect_mesh(8, 16, 1.0, 2.0);
    RefinementMap refinement = RefinementMap::uniform(spatial.node_count());
    PrismComplex complex = extrude_slab(spatial, 0.0, 0.1, refinement);
    complex = perturb_times(complex, 0.05, 3);
    SubdivisionConfig config;
    config.seed = 3;
    auto [slab, stats] = build_slab_mesh(complex, config);

    LevelSetField phi;
    phi.values.resize(slab.node_count());
    for (int i = 0; i < slab.node_count(); ++i) {
        double x = slab.coord(i, 0), y = slab.coord(i, 1);
        phi[i] = std::hypot(x - 0.5, y - 0.5) - 0.25;
    }
    InterfaceFacets iface = extract_interface(slab, phi);
    REQUIRE(iface.facet_count() > 0);
    for (int f = 0; f < iface.facet_count(); ++f) {
        const int* s = slab.simplex(iface.parent[f]);
        // Barycentric reconstruction of phi at each facet vertex.
        Eigen::Matrix4d m;
        for (int i = 0; i < 4; ++i) {
            m(0, i) = slab.coord(s[i], 0);
            m(1, i) = slab.coord(s[i], 1);
            m(2, i) = slab.coord(s[i], 2);
            m(3, i) = 1.0;
        }
        auto lu = m.fullPivLu();
        for (int v = 0; v < 3; ++v) {
            const double* p = iface.facet_vertex(f, v);
            Eigen::Vector4d rhs(p[0], p[1], p[2], 1.0);
            Eigen::Vector4d bary = lu.solve(rhs);
            double interp = 0.0;
            for (int i = 0; i < 4; ++i)
                interp += bary[i] * phi[s[i]];
            CHECK(std::abs(interp) < 1e-12);
        }
    }
}

TEST_CASE("static circle: space-time interface area matches the cylinder")
{
    // Lateral area of the space-time cylinder of a static circle:
    // 2 pi r * dt, within 5% on the 80x160-derived mesh.
    SpatialMesh spatial = make_rect_mesh(80, 160, 1.0, 2.0);
    RefinementMap refinement = RefinementMap::uniform(spatial.node_count());
    const double dt = 0.01;
    PrismComplex complex = extrude_slab(spatial, 0.0, dt, refinement);
    complex = perturb_times(complex, 0.05, 5);
    SubdivisionConfig config;
    config.seed = 5;
    auto [slab, stats] = build_slab_mesh(complex, config);

    LevelSetField phi;
    phi.values.resize(slab.node_count());
    for (int i = 0; i < slab.node_count(); ++i)
        phi[i] = std::hypot(slab.coord(i, 0) - 0.5, slab.coord(i, 1) - 0.5) - 0.25;
    InterfaceFacets iface = extract_interface(slab, phi);
    const double exact = 2.0 * std::numbers::pi * 0.25 * dt;
    CHECK(iface.total_measure() == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("pentatope interface extraction produces tetrahedral facets")
{
    SpaceTimeSlabMesh mesh;
    mesh.dim_st = 4;
    mesh.coords = {0, 0, 0, 0,
                   1, 0, 0, 0,
                   0, 1, 0, 0,
                   0, 0, 1, 0,
                   0, 0, 0, 1};
    mesh.simplices = {0, 1, 2, 3, 4};

    LevelSetField one_neg;
    one_neg.values = {-1, 1, 1, 1, 1};
    CHECK(extract_interface(mesh, one_neg).facet_count() == 1);

    LevelSetField two_neg;
    two_neg.values = {-1, -1, 1, 1, 1};
    CHECK(extract_interface(mesh, two_neg).facet_count() == 3);
}

#include "stmesh/levelset.hpp"
#include "stmesh/spatial_mesh.hpp"

#include "doctest.h"

#include <numbers>

using namespace stmesh;

namespace {

Shape circle_shape(double cx, double cy, double r)
{
    return Shape{{ShapePrimitive::circle(cx, cy, r)}};
}

}  // namespace

TEST_CASE("signed distance of a circle")
{
    SpatialMesh mesh = make_rect_mesh(4, 8, 1.0, 2.0);
    LevelSetField phi = init_signed_distance(circle_shape(0.5, 0.5, 0.25), mesh);
    // Node at the center and a node at (0.5, 1.5).
    for (int i = 0; i < mesh.node_count(); ++i) {
        if (mesh.node2(i) == Vec2(0.5, 0.5))
            CHECK(phi[i] == doctest::Approx(-0.25));
        if (mesh.node2(i) == Vec2(0.5, 1.5))
            CHECK(phi[i] == doctest::Approx(0.75));
    }
}

TEST_CASE("sphere signed distance at the origin")
{
    ShapePrimitive s = ShapePrimitive::sphere(0.5, 0.5, 0.5, 0.25);
    double x[3] = {0, 0, 0};
    CHECK(s.signed_distance(x, 3) == doctest::Approx(std::sqrt(0.75) - 0.25));
}

TEST_CASE("narrow band classification")
{
    LevelSetField phi;
    phi.values = {0.0, 0.05, 0.1, 0.2, -0.05, -0.5};
    const double band = 0.1;

    auto uniform = classify_narrow_band(phi, band, 5, BandMode::uniform);
    CHECK(uniform.level == std::vector<int>{5, 5, 5, 1, 5, 1});

    auto graded = classify_narrow_band(phi, band, 5, BandMode::graded);
    CHECK(graded.level[0] == 5);
    CHECK(graded.level[1] == 4);  // |phi| = band/2 -> round(5 - 3*0.5)
    CHECK(graded.level[2] == 2);
    CHECK(graded.level[3] == 1);
    CHECK(graded.level[4] == 4);
}

TEST_CASE("narrow band is monotone in band width")
{
    SpatialMesh mesh = make_rect_mesh(20, 40, 1.0, 2.0);
    LevelSetField phi = init_signed_distance(circle_shape(0.5, 0.5, 0.25), mesh);
    auto wide = classify_narrow_band(phi, 0.2, 5, BandMode::graded);
    auto narrow = classify_narrow_band(phi, 0.1, 5, BandMode::graded);
    for (int i = 0; i < mesh.node_count(); ++i)
        CHECK(narrow.level[i] <= wide.level[i]);
}

TEST_CASE("phase measure of simple fields")
{
    SpatialMesh mesh = make_rect_mesh(80, 160, 1.0, 2.0);
    LevelSetField phi = init_signed_distance(circle_shape(0.5, 0.5, 0.25), mesh);
    const double exact = std::numbers::pi * 0.0625;
    CHECK(phase_measure(mesh, phi) == doctest::Approx(exact).epsilon(0.01));

    LevelSetField positive;
    positive.values.assign(mesh.node_count(), 1.0);
    CHECK(phase_measure(mesh, positive) == 0.0);

    std::istringstream in("dim 2\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 2\n");
    SpatialMesh tri = load_spatial_mesh(in);
    LevelSetField all_neg;
    all_neg.values.assign(3, -1.0);
    CHECK(phase_measure(tri, all_neg) == doctest::Approx(0.5));
}

TEST_CASE("phase partition: measure(phi) + measure(-phi) = total")
{
    SpatialMesh mesh = make_rect_mesh(16, 32, 1.0, 2.0);
    LevelSetField phi = init_signed_distance(circle_shape(0.45, 0.62, 0.21), mesh);
    LevelSetField neg = phi;
    for (double& v : neg.values)
        v = -v;
    CHECK(phase_measure(mesh, phi) + phase_measure(mesh, neg) ==
          doctest::Approx(mesh.total_measure()).epsilon(1e-12));
}

TEST_CASE("centroid of symmetric and half-plane phases")
{
    SpatialMesh mesh = make_rect_mesh(40, 80, 1.0, 2.0);
    LevelSetField phi = init_signed_distance(circle_shape(0.5, 0.5, 0.25), mesh);
    auto c = centroid(mesh, phi);
    CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-10));

    // phi = y - 1 on the 1 x 2 rectangle: Omega_2 is the lower half.
    LevelSetField plane;
    plane.values.resize(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i)
        plane[i] = mesh.node2(i).y() - 1.0;
    auto hc = centroid(mesh, plane);
    CHECK(hc[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(hc[1] == doctest::Approx(0.5).epsilon(1e-10));

    LevelSetField empty;
    empty.values.assign(mesh.node_count(), 1.0);
    CHECK_THROWS(centroid(mesh, empty));
}

TEST_CASE("centroid is translation equivariant")
{
    SpatialMesh mesh = make_rect_mesh(12, 24, 1.0, 2.0);
    LevelSetField phi = init_signed_distance(circle_shape(0.43, 0.71, 0.2), mesh);
    auto c0 = centroid(mesh, phi);
    SpatialMesh shifted = mesh;
    for (int i = 0; i < mesh.node_count(); ++i) {
        shifted.coords[2 * i] += 3.5;
        shifted.coords[2 * i + 1] -= 1.25;
    }
    auto c1 = centroid(shifted, phi);
    CHECK(c1[0] - c0[0] == doctest::Approx(3.5));
    CHECK(c1[1] - c0[1] == doctest::Approx(-1.25));
}

TEST_CASE("redistance restores distance values")
{
    SpatialMesh mesh = make_rect_mesh(40, 80, 1.0, 2.0);
    LevelSetField exact = init_signed_distance(circle_shape(0.5, 0.5, 0.25), mesh);

    // Fixed point: an exact field stays put near the interface.
    LevelSetField rd = redistance(exact, mesh);
    // Doubled field: zero set identical, distances restored.
    LevelSetField doubled = exact;
    for (double& v : doubled.values)
        v *= 2.0;
    LevelSetField rd2 = redistance(doubled, mesh);

    double h = mesh.mean_edge_length();
    for (int i = 0; i < mesh.node_count(); ++i) {
        if (std::abs(exact[i]) < 1.5 * h) {  // interface-adjacent nodes
            CHECK(rd[i] == doctest::Approx(exact[i]).epsilon(0.02));
            CHECK(rd2[i] == doctest::Approx(exact[i]).epsilon(0.02));
        }
        CHECK(rd2[i] * doubled[i] >= 0.0);  // sign preserved
    }
}

TEST_CASE("redistance of an empty interface returns the field unchanged")
{
    SpatialMesh mesh = make_rect_mesh(4, 4, 1.0, 1.0);
    LevelSetField phi;
    phi.values.assign(mesh.node_count(), 2.0);
    LevelSetField rd = redistance(phi, mesh);
    CHECK(rd.values == phi.values);
}

TEST_CASE("gradient magnitude after redistancing a stretched field")
{
    SpatialMesh mesh = make_rect_mesh(80, 160, 1.0, 2.0);
    LevelSetField phi = init_signed_distance(circle_shape(0.5, 0.5, 0.25), mesh);
    // Nonlinear stretch that keeps the zero set.
    LevelSetField stretched = phi;
    for (double& v : stretched.values)
        v = v * (1.0 + 4.0 * std::abs(v));
    LevelSetField rd = redistance(stretched, mesh);

    // |grad phi| per element near the interface should be close to 1.
    for (int e = 0; e < mesh.element_count(); ++e) {
        const int* el = mesh.element(e);
        double f0 = rd[el[0]], f1 = rd[el[1]], f2 = rd[el[2]];
        if (std::min({std::abs(f0), std::abs(f1), std::abs(f2)}) > 0.1)
            continue;
        Vec2 a = mesh.node2(el[0]), b = mesh.node2(el[1]), c = mesh.node2(el[2]);
        Eigen::Matrix2d m;
        m.row(0) = (b - a).transpose();
        m.row(1) = (c - a).transpose();
        Vec2 grad = m.inverse() * Vec2(f1 - f0, f2 - f0);
        CHECK(grad.norm() > 0.9);
        CHECK(grad.norm() < 1.1);
    }
}

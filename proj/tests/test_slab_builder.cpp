#include "stmesh/slab_builder.hpp"
#include "stmesh/spatial_mesh.hpp"

#include "doctest.h"

using namespace stmesh;

TEST_CASE("plain extrusion doubles the node count")
{
    SpatialMesh mesh = make_rect_mesh(4, 4, 1.0, 1.0);
    RefinementMap refinement = RefinementMap::uniform(mesh.node_count());
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.1, refinement);
    CHECK(complex.slab_node_count() == 2 * mesh.node_count());
    CHECK(complex.prism_count() == mesh.element_count());
}

TEST_CASE("step cavity extrusion reproduces the prism node count")
{
    SpatialMesh mesh = make_step_cavity_mesh();
    RefinementMap refinement = RefinementMap::uniform(mesh.node_count());
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.005, refinement);
    CHECK(complex.slab_node_count() == 730);
}

TEST_CASE("level-5 column times are equally spaced sub-steps")
{
    std::istringstream in("dim 2\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 2\n");
    SpatialMesh mesh = load_spatial_mesh(in);
    RefinementMap refinement;
    refinement.level = {5, 1, 1};
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.005, refinement);
    REQUIRE(complex.columns[0].times.size() == 6);
    for (int k = 0; k <= 5; ++k)
        CHECK(complex.columns[0].times[k] == doctest::Approx(k * 0.001).epsilon(1e-14));
    CHECK(complex.slab_node_count() == 6 + 2 + 2);
}

TEST_CASE("perturbation contracts")
{
    SpatialMesh mesh = make_rect_mesh(3, 3, 1.0, 1.0);
    RefinementMap refinement = RefinementMap::uniform(mesh.node_count(), 5);
    PrismComplex complex = extrude_slab(mesh, 0.0, 0.005, refinement);

    SUBCASE("magnitude 0 is the identity")
    {
        PrismComplex p = perturb_times(complex, 0.0, 42);
        for (int i = 0; i < mesh.node_count(); ++i)
            CHECK(p.columns[i].times == complex.columns[i].times);
    }

    SUBCASE("same seed is bit-identical, different seed is not")
    {
        PrismComplex a = perturb_times(complex, 0.1, 42);
        PrismComplex b = perturb_times(complex, 0.1, 42);
        PrismComplex c = perturb_times(complex, 0.1, 43);
        bool differs = false;
        for (int i = 0; i < mesh.node_count(); ++i) {
            CHECK(a.columns[i].times == b.columns[i].times);
            differs = differs || a.columns[i].times != c.columns[i].times;
            // Topology unchanged regardless of seed.
            CHECK(c.columns[i].slab_node_ids == a.columns[i].slab_node_ids);
        }
        CHECK(differs);
    }

    SUBCASE("slab-boundary times stay exact and gaps stay bounded")
    {
        PrismComplex p = perturb_times(complex, 0.1, 7);
        for (int i = 0; i < mesh.node_count(); ++i) {
            const auto& t = p.columns[i].times;
            CHECK(t.front() == 0.0);
            CHECK(t.back() == 0.005);
            for (std::size_t k = 0; k + 1 < t.size(); ++k) {
                double gap = t[k + 1] - t[k];
                CHECK(gap > 0.8 * 0.001);
                CHECK(gap < 1.2 * 0.001);
            }
        }
    }

    SUBCASE("magnitude out of range is rejected")
    {
        CHECK_THROWS(perturb_times(complex, 0.5, 1));
        CHECK_THROWS(perturb_times(complex, -0.1, 1));
    }
}

TEST_CASE("transition classification")
{
    SpatialMesh mesh = make_rect_mesh(4, 4, 1.0, 1.0);

    SUBCASE("all levels equal: no transition prisms")
    {
        RefinementMap refinement = RefinementMap::uniform(mesh.node_count(), 3);
        PrismComplex complex = transition_closure(extrude_slab(mesh, 0.0, 0.01, refinement));
        for (auto c : complex.prism_class)
            CHECK(c == PrismClass::fully_refined);
    }

    SUBCASE("one refined node: its star becomes the transition zone")
    {
        RefinementMap refinement = RefinementMap::uniform(mesh.node_count(), 1);
        const int node = 12;  // interior node
        refinement.level[node] = 5;
        PrismComplex complex = transition_closure(extrude_slab(mesh, 0.0, 0.01, refinement));
        for (int p = 0; p < complex.prism_count(); ++p) {
            const int* el = mesh.element(p);
            bool touches = el[0] == node || el[1] == node || el[2] == node;
            CHECK(complex.prism_class[p] ==
                  (touches ? PrismClass::transition : PrismClass::unrefined));
        }
    }
}

TEST_CASE("mixed prism records its per-edge node counts")
{
    std::istringstream in("dim 2\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 2\n");
    SpatialMesh mesh = load_spatial_mesh(in);
    RefinementMap refinement;
    refinement.level = {1, 1, 3};
    PrismComplex complex = transition_closure(extrude_slab(mesh, 0.0, 0.01, refinement));
    CHECK(complex.prism_class[0] == PrismClass::transition);
    CHECK(complex.prism_edge_node_counts(0) == std::vector<int>{2, 2, 4});
}

#include "stmesh/geometry.hpp"

#include "doctest.h"

#include <random>

using namespace stmesh;

TEST_CASE("simplex volumes of unit simplices")
{
    std::array<Vec2, 3> tri{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    CHECK(simplex_volume<2>(tri) == doctest::Approx(0.5));

    std::array<Vec3, 4> tet{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    CHECK(simplex_volume<3>(tet) == doctest::Approx(1.0 / 6.0));

    std::array<Vec4, 5> pent{Vec4(0, 0, 0, 0), Vec4(1, 0, 0, 0), Vec4(0, 1, 0, 0),
                             Vec4(0, 0, 1, 0), Vec4(0, 0, 0, 1)};
    CHECK(simplex_volume<4>(pent) == doctest::Approx(1.0 / 24.0));
}

TEST_CASE("volume is antisymmetric under vertex swap")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::array<Vec3, 4> v;
        for (auto& p : v)
            p = Vec3(u(rng), u(rng), u(rng));
        double vol = simplex_volume<3>(v);
        std::swap(v[1], v[3]);
        // Antisymmetric up to roundoff: the swapped determinant is evaluated
        // in a different association order.
        CHECK(simplex_volume<3>(v) == doctest::Approx(-vol).epsilon(1e-12));
    }
}

TEST_CASE("in_circumsphere basics")
{
    std::array<Vec2, 3> tri{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    CHECK(in_circumsphere<2>(tri, Vec2(0.4, 0.4)));
    CHECK_FALSE(in_circumsphere<2>(tri, Vec2(2, 2)));

    std::array<Vec3, 4> tet{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    CHECK(in_circumsphere<3>(tet, Vec3(0.25, 0.25, 0.25)));
}

TEST_CASE("degenerate simplex is rejected")
{
    std::array<Vec2, 3> collinear{Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)};
    CHECK_THROWS_AS(in_circumsphere<2>(collinear, Vec2(0.5, 0)), degenerate_simplex_error);
}

template <int D>
static void oracle_agreement(int trials, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    while (checked < trials) {
        std::array<Vec<D>, D + 1> v;
        for (auto& p : v)
            for (int c = 0; c < D; ++c)
                p[c] = u(rng);
        if (is_degenerate<D>(v))
            continue;
        Vec<D> q;
        for (int c = 0; c < D; ++c)
            q[c] = 2.0 * u(rng);
        auto [center, r2] = circumsphere<D>(v);
        double margin = (q - center).squaredNorm() - r2;
        if (std::abs(margin) < 1e-9 * r2)
            continue;  // too close to the sphere for a robust oracle verdict
        CHECK(in_circumsphere<D>(v, q) == (margin < 0.0));
        ++checked;
    }
}

TEST_CASE("in_circumsphere agrees with explicit circumcenter oracle")
{
    oracle_agreement<2>(1000, 11);
    oracle_agreement<3>(1000, 13);
    oracle_agreement<4>(200, 17);
}

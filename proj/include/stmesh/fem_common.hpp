#pragma once

#include "stmesh/quadrature.hpp"
#include "stmesh/slab_mesh.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace stmesh {

/// P1 element geometry on one space-time simplex: shape-function gradients in
/// (x..., t), volume, the minimum spatial altitude h used by the tau formulas,
/// and the temporal extent.
struct ElementGeom {
    Eigen::MatrixXd grads;  // (dim_st+1) x dim_st, row i = grad N_i
    double volume = 0.0;    // positive
    double h_spatial = 0.0;
    double dt_local = 0.0;
};

inline ElementGeom element_geometry(const SpaceTimeSlabMesh& slab, int e)
{
    const int d = slab.dim_st;
    const int* s = slab.simplex(e);

    Eigen::MatrixXd b(d, d);
    for (int j = 1; j <= d; ++j)
        for (int c = 0; c < d; ++c)
            b(c, j - 1) = slab.coord(s[j], c) - slab.coord(s[0], c);
    const double det = b.determinant();
    if (det <= 0.0)
        throw std::runtime_error("element_geometry: non-positive simplex");

    ElementGeom g;
    double fact = 1.0;
    for (int k = 2; k <= d; ++k)
        fact *= k;
    g.volume = det / fact;

    // N_i(x) = (B^{-1}(x - v_0))_{i-1} for i >= 1, so grad N_i is row i-1 of
    // B^{-1}; grad N_0 closes the partition of unity.
    Eigen::MatrixXd binv = b.inverse();
    g.grads.resize(d + 1, d);
    g.grads.row(0).setZero();
    for (int i = 1; i <= d; ++i) {
        g.grads.row(i) = binv.row(i - 1);
        g.grads.row(0) -= binv.row(i - 1);
    }

    double max_spatial_grad = 0.0;
    double tmin = slab.coord(s[0], d - 1), tmax = tmin;
    for (int i = 0; i <= d; ++i) {
        max_spatial_grad = std::max(max_spatial_grad, g.grads.row(i).head(d - 1).norm());
        if (i > 0) {
            tmin = std::min(tmin, slab.coord(s[i], d - 1));
            tmax = std::max(tmax, slab.coord(s[i], d - 1));
        }
    }
    g.h_spatial = max_spatial_grad > 0.0 ? 1.0 / max_spatial_grad : 0.0;
    g.dt_local = tmax - tmin;
    return g;
}

/// Wall-clock split between system formation (assembly) and system solution
/// (linear solves), accumulated across slabs for the performance report.
struct PhaseTimers {
    double formation_seconds = 0.0;
    double solution_seconds = 0.0;
};

/// Quadrature used for slab assembly: cubic-exact on tetrahedra (nodal
/// velocity makes Navier-Stokes integrands cubic), quadratic-exact on
/// pentatopes (level-set transport integrands are at most quadratic).
inline const QuadRule& slab_quadrature(int dim_st)
{
    return simplex_quadrature(dim_st, dim_st == 3 ? 3 : 2);
}

}  // namespace stmesh

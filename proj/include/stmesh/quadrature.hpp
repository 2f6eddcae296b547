#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace stmesh {

/// Symmetric quadrature rule on the reference d-simplex, in barycentric
/// coordinates.  Weights sum to one; multiply by the simplex measure.
struct QuadRule {
    int dim = 2;
    int npts = 0;
    std::vector<double> bary;     // (dim+1) coordinates per point
    std::vector<double> weights;

    const double* point(int q) const { return bary.data() + static_cast<std::size_t>(q) * (dim + 1); }
};

namespace detail {

inline QuadRule centroid_rule(int dim)
{
    QuadRule r;
    r.dim = dim;
    r.npts = 1;
    r.bary.assign(dim + 1, 1.0 / (dim + 1));
    r.weights = {1.0};
    return r;
}

// d+1 symmetric points, exact for quadratics: a + d*b = 1, a^2 + d*b^2 = 2/(d+2).
inline QuadRule degree2_rule(int dim)
{
    const int d = dim;
    // Solve (1 - d b)^2 + d b^2 = 2/(d+2) for the smaller root b.
    // d(d+1) b^2 - 2 d b + 1 - 2/(d+2) = 0
    const double A = d * (d + 1.0);
    const double B = -2.0 * d;
    const double C = 1.0 - 2.0 / (d + 2.0);
    const double b = (-B - std::sqrt(B * B - 4.0 * A * C)) / (2.0 * A);
    const double a = 1.0 - d * b;
    QuadRule r;
    r.dim = dim;
    r.npts = dim + 1;
    r.weights.assign(dim + 1, 1.0 / (dim + 1));
    for (int i = 0; i <= dim; ++i)
        for (int j = 0; j <= dim; ++j)
            r.bary.push_back(i == j ? a : b);
    return r;
}

// Tetrahedron, exact for cubics (Keast): centroid with negative weight plus
// four points at barycentric (1/2, 1/6, 1/6, 1/6).
inline QuadRule tet_degree3_rule()
{
    QuadRule r;
    r.dim = 3;
    r.npts = 5;
    r.bary.insert(r.bary.end(), {0.25, 0.25, 0.25, 0.25});
    r.weights.push_back(-0.8);
    const double a = 0.5, b = 1.0 / 6.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j)
            r.bary.push_back(i == j ? a : b);
        r.weights.push_back(0.45);
    }
    return r;
}

// Triangle, exact for cubics: centroid (-27/48) plus three points at
// barycentric (3/5, 1/5, 1/5) with weight 25/48.
inline QuadRule tri_degree3_rule()
{
    QuadRule r;
    r.dim = 2;
    r.npts = 4;
    r.bary.insert(r.bary.end(), {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(-27.0 / 48.0);
    const double a = 0.6, b = 0.2;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
            r.bary.push_back(i == j ? a : b);
        r.weights.push_back(25.0 / 48.0);
    }
    return r;
}

}  // namespace detail

inline const QuadRule& simplex_quadrature(int dim, int degree)
{
    static const QuadRule tri1 = detail::centroid_rule(2);
    static const QuadRule tri2 = detail::degree2_rule(2);
    static const QuadRule tri3 = detail::tri_degree3_rule();
    static const QuadRule tet1 = detail::centroid_rule(3);
    static const QuadRule tet2 = detail::degree2_rule(3);
    static const QuadRule tet3 = detail::tet_degree3_rule();
    static const QuadRule pent1 = detail::centroid_rule(4);
    static const QuadRule pent2 = detail::degree2_rule(4);
    switch (dim) {
    case 2:
        return degree <= 1 ? tri1 : (degree == 2 ? tri2 : tri3);
    case 3:
        return degree <= 1 ? tet1 : (degree == 2 ? tet2 : tet3);
    case 4:
        if (degree > 2)
            throw std::invalid_argument("no 4-simplex rule above degree 2");
        return degree <= 1 ? pent1 : pent2;
    default:
        throw std::invalid_argument("unsupported simplex dimension");
    }
}

}  // namespace stmesh

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>

namespace stmesh {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

// Determinant magnitudes below kDegenerateTol * L^(d+1), with L the
// characteristic edge length of the point set, are treated as degenerate.
inline constexpr double kDegenerateTol = 1e-12;

struct degenerate_simplex_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Signed volume of a d-simplex given its d+1 vertices:
/// det([v1-v0, ..., vd-v0]) / d!
template <int D>
double simplex_volume(const std::array<Vec<D>, D + 1>& v)
{
    Eigen::Matrix<double, D, D> m;
    for (int j = 0; j < D; ++j)
        m.col(j) = v[j + 1] - v[0];
    double fact = 1.0;
    for (int k = 2; k <= D; ++k)
        fact *= k;
    return m.determinant() / fact;
}

template <int D>
double characteristic_length(const std::array<Vec<D>, D + 1>& v)
{
    double len = 0.0;
    for (int i = 0; i <= D; ++i)
        for (int j = i + 1; j <= D; ++j)
            len = std::max(len, (v[i] - v[j]).norm());
    return len;
}

template <int D>
bool is_degenerate(const std::array<Vec<D>, D + 1>& v)
{
    const double scale = characteristic_length(v);
    double fact = 1.0;
    for (int k = 2; k <= D; ++k)
        fact *= k;
    return std::abs(simplex_volume<D>(v)) * fact <= kDegenerateTol * std::pow(scale, D);
}

/// Circumcenter and squared circumradius of a non-degenerate d-simplex,
/// solved from the linear system |c - v_i|^2 = r^2.
template <int D>
std::pair<Vec<D>, double> circumsphere(const std::array<Vec<D>, D + 1>& v)
{
    Eigen::Matrix<double, D, D> a;
    Vec<D> b;
    for (int i = 0; i < D; ++i) {
        a.row(i) = 2.0 * (v[i + 1] - v[0]).transpose();
        b[i] = v[i + 1].squaredNorm() - v[0].squaredNorm();
    }
    Vec<D> c = a.fullPivLu().solve(b);
    return {c, (c - v[0]).squaredNorm()};
}

/// Strict circumsphere membership via the lifted determinant. The simplex
/// need not be positively oriented; the determinant sign is normalized by
/// the orientation determinant.
template <int D>
bool in_circumsphere(const std::array<Vec<D>, D + 1>& simplex, const Vec<D>& q)
{
    const double scale = characteristic_length(simplex);
    Eigen::Matrix<double, D, D> orient;
    for (int j = 0; j < D; ++j)
        orient.col(j) = simplex[j + 1] - simplex[0];
    const double vol_det = orient.determinant();
    if (std::abs(vol_det) <= kDegenerateTol * std::pow(scale, D))
        throw degenerate_simplex_error("in_circumsphere: degenerate simplex, perturb and retry");

    // Rows: (v_i - q, |v_i - q|^2), i = 0..D.  Positive determinant relative
    // to orientation means q is strictly inside.
    Eigen::Matrix<double, D + 1, D + 1> m;
    for (int i = 0; i <= D; ++i) {
        Vec<D> d = simplex[i] - q;
        for (int j = 0; j < D; ++j)
            m(i, j) = d[j];
        m(i, D) = d.squaredNorm();
    }
    const double lifted = m.determinant();
    const double tol = kDegenerateTol * std::pow(scale, D + 2);
    // Rows are (v_i - q), not (v_i - v_last): relative to the orientation
    // determinant this flips the sign in odd dimensions.
    const double parity = (D % 2) ? -1.0 : 1.0;
    if (parity * vol_det > 0)
        return lifted > tol;
    return lifted < -tol;
}

}  // namespace stmesh

#pragma once

#include "stmesh/geometry.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace stmesh {

struct delaunay_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Delaunay triangulation in D dimensions for the small per-prism point sets
/// (6 to ~24 points): lift the normalized cloud onto the paraboloid and keep
/// every (D+1)-subset whose lifted hyperplane is a lower-hull facet, i.e. all
/// other lifted points lie above it.  Brute force over subsets is O(n^(D+2))
/// but trivially robust -- there is no super-simplex and all coordinates live
/// on one scale.
///
/// `weights` (one per point, O(1), keyed on global node ids by the caller)
/// act as a symbolic perturbation in the limit of vanishing magnitude: when
/// the lifted plane-side determinant is an exact tie -- prism corners on the
/// slab boundaries are exactly cospherical -- the sign is taken from the
/// weight term of the determinant's last-column cofactor expansion, evaluated
/// at full weight scale.  The resulting regular triangulation restricted to a
/// shared prism facet depends only on the facet's points and weights, so
/// neighboring prisms agree on facet diagonals.
template <int D>
std::vector<std::array<int, D + 1>> delaunay_triangulate(
    const std::vector<Vec<D>>& pts, const std::vector<double>& weights = {})
{
    const int n = static_cast<int>(pts.size());
    if (n < D + 1)
        throw delaunay_error("too few points");
    if (!weights.empty() && static_cast<int>(weights.size()) != n)
        throw delaunay_error("weight count does not match point count");

    Vec<D> lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Vec<D> center = 0.5 * (lo + hi);
    const double radius = 0.5 * (hi - lo).norm();
    if (radius == 0.0)
        throw delaunay_error("all points coincide");

    // Normalized cloud in the unit ball, lifted by |x|^2.
    std::vector<Vec<D>> x(pts.size());
    std::vector<double> h(pts.size());
    for (int i = 0; i < n; ++i) {
        x[i] = (pts[i] - center) / radius;
        h[i] = x[i].squaredNorm();
    }

    // |plane-side determinant| below this is an exact tie up to roundoff
    // (entries are O(1), so the noise floor sits near 1e-15).
    const double kTieTol = 1e-12;
    const double kFlatTol = 1e-12;

    std::vector<std::array<int, D + 1>> out;
    std::array<int, D + 1> idx;
    for (int i = 0; i <= D; ++i)
        idx[i] = i;

    while (true) {
        std::array<Vec<D>, D + 1> v;
        for (int i = 0; i <= D; ++i)
            v[i] = x[idx[i]];
        double vol = simplex_volume<D>(v);
        if (std::abs(vol) > kFlatTol) {
            // Reference determinant for a point known to lie above the lifted
            // plane: the subset's spatial centroid raised past every lifted
            // height (h is in [0, 1]).
            Vec<D> xc = Vec<D>::Zero();
            for (int i = 0; i <= D; ++i)
                xc += x[idx[i]];
            xc /= static_cast<double>(D + 1);
            Eigen::Matrix<double, D + 1, D + 1> m;
            for (int i = 0; i <= D; ++i) {
                m.row(i).template head<D>() = (x[idx[i]] - xc).transpose();
                m(i, D) = h[idx[i]] - 4.0;
            }
            const double p_ref = m.determinant();

            bool lower_facet = true;
            for (int q = 0; q < n && lower_facet; ++q) {
                bool in_subset = false;
                for (int i = 0; i <= D; ++i)
                    in_subset = in_subset || idx[i] == q;
                if (in_subset)
                    continue;
                for (int i = 0; i <= D; ++i) {
                    m.row(i).template head<D>() = (x[idx[i]] - x[q]).transpose();
                    m(i, D) = h[idx[i]] - h[q];
                }
                double side = m.determinant();
                if (std::abs(side) < kTieTol && !weights.empty()) {
                    // Symbolic branch: with lifted heights h - eps*w the
                    // determinant becomes side + eps * sum_i cof_i (w_q - w_i)
                    // as eps -> 0, with cof_i the last-column cofactors.
                    side = 0.0;
                    for (int i = 0; i <= D; ++i) {
                        Eigen::Matrix<double, D, D> a;
                        int r = 0;
                        for (int j = 0; j <= D; ++j) {
                            if (j == i)
                                continue;
                            a.row(r++) = (x[idx[j]] - x[q]).transpose();
                        }
                        double cof = ((i + D) % 2 ? -1.0 : 1.0) * a.determinant();
                        side += cof * (weights[q] - weights[idx[i]]);
                    }
                }
                // q below the plane (opposite side from the raised reference)
                // <=> q strictly inside the circumsphere.
                lower_facet = side * p_ref >= 0.0;
            }
            if (lower_facet) {
                std::array<int, D + 1> s = idx;
                if (vol < 0.0)
                    std::swap(s[0], s[1]);
                out.push_back(s);
            }
        }

        // Next (D+1)-combination of {0..n-1}.
        int pos = D;
        while (pos >= 0 && idx[pos] == n - 1 - (D - pos))
            --pos;
        if (pos < 0)
            break;
        ++idx[pos];
        for (int i = pos + 1; i <= D; ++i)
            idx[i] = idx[i - 1] + 1;
    }

    if (out.empty())
        throw delaunay_error("empty triangulation (degenerate input)");
    return out;
}

}  // namespace stmesh

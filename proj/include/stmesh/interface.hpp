#pragma once

#include "stmesh/levelset.hpp"
#include "stmesh/slab_mesh.hpp"

#include <vector>

namespace stmesh {

/// Facets of the zero iso-surface of the element-linear interpolant on a
/// space-time slab: triangles for tetrahedral slabs, tetrahedra for
/// pentatope slabs.  Triangles are oriented so their normal has positive
/// component along the space-time gradient of phi in the parent element.
struct InterfaceFacets {
    int dim_st = 3;
    std::vector<double> verts;    // dim_st coords per vertex, dim_st vertices per facet
    std::vector<int> parent;      // parent slab element per facet
    int degenerate_skipped = 0;   // elements with phi = 0 at all vertices

    int facet_count() const { return static_cast<int>(parent.size()); }

    const double* facet_vertex(int f, int v) const
    {
        return verts.data() + (static_cast<std::size_t>(f) * dim_st + v) * dim_st;
    }

    /// (dim_st-1)-measure of one facet via the Gram determinant.
    double facet_measure(int f) const
    {
        const int d = dim_st;
        Eigen::MatrixXd m(d, d - 1);
        const double* v0 = facet_vertex(f, 0);
        for (int j = 1; j < d; ++j) {
            const double* vj = facet_vertex(f, j);
            for (int c = 0; c < d; ++c)
                m(c, j - 1) = vj[c] - v0[c];
        }
        double gram = (m.transpose() * m).determinant();
        double fact = d == 3 ? 2.0 : 6.0;
        return std::sqrt(std::max(gram, 0.0)) / fact;
    }

    double total_measure() const
    {
        double s = 0.0;
        for (int f = 0; f < facet_count(); ++f)
            s += facet_measure(f);
        return s;
    }
};

/// Marching-simplex extraction of the zero set of phi over the slab.  Each
/// tetrahedron with a sign change yields 1 or 2 triangles; pentatopes yield
/// 1 or 3 tetrahedral facets.
inline InterfaceFacets extract_interface(const SpaceTimeSlabMesh& mesh,
                                         const LevelSetField& phi_slab)
{
    InterfaceFacets iface;
    iface.dim_st = mesh.dim_st;
    const int d = mesh.dim_st;
    const int nv = d + 1;

    auto push_facet = [&](const std::vector<Eigen::VectorXd>& pts, int e) {
        for (const auto& p : pts)
            for (int c = 0; c < d; ++c)
                iface.verts.push_back(p[c]);
        iface.parent.push_back(e);
    };

    for (int e = 0; e < mesh.simplex_count(); ++e) {
        const int* s = mesh.simplex(e);
        std::vector<Eigen::VectorXd> v(nv, Eigen::VectorXd(d));
        std::vector<double> f(nv);
        bool all_zero = true;
        for (int i = 0; i < nv; ++i) {
            for (int c = 0; c < d; ++c)
                v[i][c] = mesh.coord(s[i], c);
            f[i] = phi_slab[s[i]];
            all_zero = all_zero && f[i] == 0.0;
        }
        if (all_zero) {
            ++iface.degenerate_skipped;
            continue;
        }
        std::vector<int> neg, pos;
        for (int i = 0; i < nv; ++i)
            (f[i] < 0.0 ? neg : pos).push_back(i);
        if (neg.empty() || pos.empty())
            continue;

        auto cut = [&](int i, int j) -> Eigen::VectorXd {
            double t = f[i] / (f[i] - f[j]);
            return v[i] + t * (v[j] - v[i]);
        };

        if (d == 3) {
            // Space-time gradient of the linear interpolant for orientation.
            Eigen::Matrix3d m;
            Eigen::Vector3d rhs;
            for (int i = 0; i < 3; ++i) {
                m.row(i) = (v[i + 1] - v[0]).transpose();
                rhs[i] = f[i + 1] - f[0];
            }
            Eigen::Vector3d grad = m.fullPivLu().solve(rhs);
            auto push_tri = [&](Eigen::VectorXd a, Eigen::VectorXd b, Eigen::VectorXd c) {
                Vec3 normal = (Vec3(b - a)).cross(Vec3(c - a));
                if (normal.dot(grad) < 0.0)
                    std::swap(b, c);
                push_facet({a, b, c}, e);
            };
            if (neg.size() == 1 || pos.size() == 1) {
                int a = neg.size() == 1 ? neg[0] : pos[0];
                const auto& o = neg.size() == 1 ? pos : neg;
                push_tri(cut(a, o[0]), cut(a, o[1]), cut(a, o[2]));
            } else {
                int a = neg[0], b = neg[1], c = pos[0], dd = pos[1];
                Eigen::VectorXd pac = cut(a, c), pad = cut(a, dd), pbc = cut(b, c), pbd = cut(b, dd);
                push_tri(pac, pad, pbd);
                push_tri(pac, pbd, pbc);
            }
        } else {
            if (neg.size() == 1 || pos.size() == 1) {
                int a = neg.size() == 1 ? neg[0] : pos[0];
                const auto& o = neg.size() == 1 ? pos : neg;
                push_facet({cut(a, o[0]), cut(a, o[1]), cut(a, o[2]), cut(a, o[3])}, e);
            } else {
                // 2-3 split: six cut points form a prism over a triangle.
                int a = neg[0], b = neg[1];
                int c0 = pos[0], c1 = pos[1], c2 = pos[2];
                Eigen::VectorXd a0 = cut(a, c0), a1 = cut(a, c1), a2 = cut(a, c2);
                Eigen::VectorXd b0 = cut(b, c0), b1 = cut(b, c1), b2 = cut(b, c2);
                push_facet({a0, a1, a2, b2}, e);
                push_facet({a0, a1, b1, b2}, e);
                push_facet({a0, b0, b1, b2}, e);
            }
        }
    }
    return iface;
}

}  // namespace stmesh

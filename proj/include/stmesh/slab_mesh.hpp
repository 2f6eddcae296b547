#pragma once

#include "stmesh/geometry.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <vector>

namespace stmesh {

/// One simplex space-time slab Q_n = Omega x (t_n, t_{n+1}).  Nodes carry
/// (x..., t) coordinates; the last coordinate is always time.  Bottom/top
/// traces map spatial nodes to the slab nodes at t_n / t_{n+1}.
class SpaceTimeSlabMesh {
public:
    int dim_st = 3;                     // 3 = tets over 2D space, 4 = pentatopes over 3D space
    double t0 = 0.0, t1 = 0.0;
    std::vector<double> coords;         // node-major, dim_st per node
    std::vector<int> simplices;         // (dim_st+1) per simplex
    std::vector<int> bottom_trace;      // spatial node -> slab node at t0
    std::vector<int> top_trace;         // spatial node -> slab node at t1
    std::vector<int> column_of;         // slab node -> spatial node

    // Sorted spatial-node tuples of the spatial mesh's boundary facets;
    // lateral slab facets must project onto one of these.
    std::set<std::vector<int>> spatial_boundary_facets;

    int node_count() const { return static_cast<int>(coords.size()) / dim_st; }
    int simplex_count() const { return static_cast<int>(simplices.size()) / (dim_st + 1); }

    const int* simplex(int e) const
    {
        return simplices.data() + static_cast<std::size_t>(e) * (dim_st + 1);
    }

    double coord(int i, int c) const { return coords[static_cast<std::size_t>(i) * dim_st + c]; }
    double time_of(int i) const { return coord(i, dim_st - 1); }

    Vec3 node3(int i) const { return Vec3(coord(i, 0), coord(i, 1), coord(i, 2)); }
    Vec4 node4(int i) const { return Vec4(coord(i, 0), coord(i, 1), coord(i, 2), coord(i, 3)); }

    double simplex_volume_at(int e) const
    {
        const int* s = simplex(e);
        if (dim_st == 3) {
            std::array<Vec3, 4> v{node3(s[0]), node3(s[1]), node3(s[2]), node3(s[3])};
            return simplex_volume<3>(v);
        }
        std::array<Vec4, 5> v{node4(s[0]), node4(s[1]), node4(s[2]), node4(s[3]), node4(s[4])};
        return simplex_volume<4>(v);
    }

    double total_volume() const
    {
        double s = 0.0;
        for (int e = 0; e < simplex_count(); ++e)
            s += simplex_volume_at(e);
        return s;
    }

    std::map<std::vector<int>, int> facet_census() const
    {
        std::map<std::vector<int>, int> census;
        const int nv = dim_st + 1;
        for (int e = 0; e < simplex_count(); ++e) {
            const int* s = simplex(e);
            for (int drop = 0; drop < nv; ++drop) {
                std::vector<int> f;
                f.reserve(nv - 1);
                for (int i = 0; i < nv; ++i)
                    if (i != drop)
                        f.push_back(s[i]);
                std::sort(f.begin(), f.end());
                ++census[f];
            }
        }
        return census;
    }

    /// Boundary facets (incidence 1) whose nodes all sit at the given time.
    std::vector<std::vector<int>> boundary_facets_at_time(double t) const
    {
        std::vector<std::vector<int>> out;
        for (const auto& [facet, count] : facet_census()) {
            if (count != 1)
                continue;
            bool flat = true;
            for (int n : facet)
                if (time_of(n) != t) {
                    flat = false;
                    break;
                }
            if (flat)
                out.push_back(facet);
        }
        return out;
    }
};

struct ConformityReport {
    int interior_facet_count = 0;
    int boundary_facet_count = 0;
    std::vector<std::vector<int>> nonconforming_facets;  // incidence > 2
    double volume_defect = 0.0;                          // relative
    double min_volume = 0.0;
    int sliver_count_removed = 0;

    bool valid() const { return nonconforming_facets.empty(); }
};

/// Facet-incidence and volume audit of a built slab.  Defects are reported,
/// not thrown.
inline ConformityReport validate_conformity(const SpaceTimeSlabMesh& mesh, double expected_volume)
{
    ConformityReport report;
    double vol = 0.0;
    double min_vol = std::numeric_limits<double>::max();
    for (int e = 0; e < mesh.simplex_count(); ++e) {
        double v = mesh.simplex_volume_at(e);
        vol += v;
        min_vol = std::min(min_vol, v);
    }
    report.min_volume = mesh.simplex_count() ? min_vol : 0.0;
    report.volume_defect = expected_volume != 0.0
                               ? std::abs(vol - expected_volume) / std::abs(expected_volume)
                               : std::abs(vol);
    for (const auto& [facet, count] : mesh.facet_census()) {
        if (count == 2) {
            ++report.interior_facet_count;
            continue;
        }
        if (count > 2) {
            report.nonconforming_facets.push_back(facet);
            continue;
        }
        // Incidence 1: must lie on the slab boundary (bottom, top, or a
        // lateral face over a spatial boundary facet); otherwise there is a
        // hole or a hanging-node mismatch.
        bool at_t0 = true, at_t1 = true;
        for (int n : facet) {
            at_t0 = at_t0 && mesh.time_of(n) == mesh.t0;
            at_t1 = at_t1 && mesh.time_of(n) == mesh.t1;
        }
        bool ok = at_t0 || at_t1;
        if (!ok && !mesh.column_of.empty()) {
            std::vector<int> cols;
            for (int n : facet)
                cols.push_back(mesh.column_of[n]);
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            ok = mesh.spatial_boundary_facets.count(cols) > 0;
        }
        if (ok)
            ++report.boundary_facet_count;
        else
            report.nonconforming_facets.push_back(facet);
    }
    return report;
}

}  // namespace stmesh

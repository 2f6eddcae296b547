#pragma once

#include "stmesh/spatial_mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace stmesh {

/// Nodal signed-distance values; negative inside the dispersed/filling
/// phase Omega_2.
struct LevelSetField {
    std::vector<double> values;

    double operator[](int i) const { return values[i]; }
    double& operator[](int i) { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }
};

/// Analytic initial shapes.  A composite takes the minimum signed distance
/// over its members (union of interiors).
struct ShapePrimitive {
    enum class Kind { circle, sphere, half_plane } kind = Kind::circle;
    // circle: center (cx, cy), radius r
    // sphere: center (cx, cy, cz), radius r
    // half_plane: interior where n . x < offset, |n| = 1
    double cx = 0, cy = 0, cz = 0, r = 0;
    double nx = 1, ny = 0, nz = 0, offset = 0;

    double signed_distance(const double* x, int dim) const
    {
        switch (kind) {
        case Kind::circle: {
            double dx = x[0] - cx, dy = x[1] - cy;
            return std::sqrt(dx * dx + dy * dy) - r;
        }
        case Kind::sphere: {
            double dx = x[0] - cx, dy = x[1] - cy, dz = (dim > 2 ? x[2] : 0.0) - cz;
            return std::sqrt(dx * dx + dy * dy + dz * dz) - r;
        }
        case Kind::half_plane:
            return nx * x[0] + ny * x[1] + (dim > 2 ? nz * x[2] : 0.0) - offset;
        }
        return 0.0;
    }

    static ShapePrimitive circle(double cx, double cy, double r)
    {
        ShapePrimitive s;
        s.kind = Kind::circle;
        s.cx = cx;
        s.cy = cy;
        s.r = r;
        return s;
    }
    static ShapePrimitive sphere(double cx, double cy, double cz, double r)
    {
        ShapePrimitive s;
        s.kind = Kind::sphere;
        s.cx = cx;
        s.cy = cy;
        s.cz = cz;
        s.r = r;
        return s;
    }
    static ShapePrimitive half_plane(double nx, double ny, double nz, double offset)
    {
        ShapePrimitive s;
        s.kind = Kind::half_plane;
        double n = std::sqrt(nx * nx + ny * ny + nz * nz);
        s.nx = nx / n;
        s.ny = ny / n;
        s.nz = nz / n;
        s.offset = offset / n;
        return s;
    }
};

struct Shape {
    std::vector<ShapePrimitive> members;

    double signed_distance(const double* x, int dim) const
    {
        double phi = std::numeric_limits<double>::max();
        for (const auto& m : members)
            phi = std::min(phi, m.signed_distance(x, dim));
        return phi;
    }
};

inline LevelSetField init_signed_distance(const Shape& shape, const SpatialMesh& mesh)
{
    if (shape.members.empty())
        throw std::invalid_argument("empty shape");
    LevelSetField field;
    field.values.resize(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i)
        field.values[i] = shape.signed_distance(&mesh.coords[static_cast<std::size_t>(i) * mesh.dim],
                                                mesh.dim);
    return field;
}

// ---------------------------------------------------------------------------
// Narrow-band classification

enum class BandMode { uniform, graded };

/// Per-spatial-node temporal subdivision level (number of temporal elements
/// along the node's column).
struct RefinementMap {
    std::vector<int> level;

    int at(int node) const { return level[node]; }
    int max_level() const
    {
        int m = 1;
        for (int l : level)
            m = std::max(m, l);
        return m;
    }

    static RefinementMap uniform(int node_count, int lvl = 1)
    {
        RefinementMap r;
        r.level.assign(node_count, lvl);
        return r;
    }
};

/// Nodes with |phi| <= band_width get max_level (uniform mode) or a level
/// graded linearly from max_level at the interface down to 2 at the band
/// edge: level = round(max_level - (max_level - 2) * |phi| / band_width).
inline RefinementMap classify_narrow_band(const LevelSetField& field, double band_width,
                                          int max_level, BandMode mode = BandMode::uniform)
{
    if (band_width <= 0.0)
        throw std::invalid_argument("band_width must be positive");
    RefinementMap map;
    map.level.assign(field.size(), 1);
    for (int i = 0; i < field.size(); ++i) {
        double a = std::abs(field[i]);
        if (a > band_width)
            continue;
        if (mode == BandMode::uniform || max_level <= 2)
            map.level[i] = max_level;
        else
            map.level[i] = static_cast<int>(std::lround(max_level - (max_level - 2.0) * a / band_width));
    }
    return map;
}

// ---------------------------------------------------------------------------
// Cut-element sub-triangulation of the negative phase

namespace detail {

// Edge crossing point between vertices with opposite strict signs.
template <int D>
Vec<D> cut_point(const Vec<D>& a, double fa, const Vec<D>& b, double fb)
{
    double s = fa / (fa - fb);
    return a + s * (b - a);
}

// Sub-simplices (as vertex lists) covering {phi < 0} within one simplex.
// Values equal to zero count as the positive side.
template <int D>
void negative_region(const std::array<Vec<D>, D + 1>& v, const std::array<double, D + 1>& f,
                     std::vector<std::array<Vec<D>, D + 1>>& out)
{
    std::vector<int> neg, pos;
    for (int i = 0; i <= D; ++i)
        (f[i] < 0.0 ? neg : pos).push_back(i);
    if (neg.empty())
        return;
    if (pos.empty()) {
        out.push_back(v);
        return;
    }

    if constexpr (D == 2) {
        if (neg.size() == 1) {
            int a = neg[0];
            out.push_back({v[a], cut_point<2>(v[a], f[a], v[pos[0]], f[pos[0]]),
                           cut_point<2>(v[a], f[a], v[pos[1]], f[pos[1]])});
        } else {  // 2 negative, 1 positive: quad split into 2 triangles
            int a = neg[0], b = neg[1], c = pos[0];
            Vec2 pac = cut_point<2>(v[a], f[a], v[c], f[c]);
            Vec2 pbc = cut_point<2>(v[b], f[b], v[c], f[c]);
            out.push_back({v[a], v[b], pbc});
            out.push_back({v[a], pbc, pac});
        }
    } else {
        static_assert(D == 2 || D == 3);
        if (neg.size() == 1) {
            int a = neg[0];
            out.push_back({v[a], cut_point<3>(v[a], f[a], v[pos[0]], f[pos[0]]),
                           cut_point<3>(v[a], f[a], v[pos[1]], f[pos[1]]),
                           cut_point<3>(v[a], f[a], v[pos[2]], f[pos[2]])});
        } else if (neg.size() == 2) {
            // Wedge with vertices a, b and the planar cut quad; prism split.
            int a = neg[0], b = neg[1], c = pos[0], d = pos[1];
            Vec3 pac = cut_point<3>(v[a], f[a], v[c], f[c]);
            Vec3 pad = cut_point<3>(v[a], f[a], v[d], f[d]);
            Vec3 pbc = cut_point<3>(v[b], f[b], v[c], f[c]);
            Vec3 pbd = cut_point<3>(v[b], f[b], v[d], f[d]);
            out.push_back({v[a], v[b], pbc, pbd});
            out.push_back({v[a], pbc, pbd, pad});
            out.push_back({v[a], pbc, pad, pac});
        } else {  // 3 negative, 1 positive: whole tet minus the positive corner
            int a = pos[0];
            Vec3 p0 = cut_point<3>(v[a], f[a], v[neg[0]], f[neg[0]]);
            Vec3 p1 = cut_point<3>(v[a], f[a], v[neg[1]], f[neg[1]]);
            Vec3 p2 = cut_point<3>(v[a], f[a], v[neg[2]], f[neg[2]]);
            // Complement wedge: the three negative vertices plus cut triangle.
            out.push_back({v[neg[0]], v[neg[1]], v[neg[2]], p0});
            out.push_back({v[neg[1]], v[neg[2]], p0, p1});
            out.push_back({v[neg[2]], p0, p1, p2});
        }
    }
}

template <int D>
void accumulate_phase(const SpatialMesh& mesh, const LevelSetField& field, double& measure,
                      Vec<D>& moment)
{
    std::vector<std::array<Vec<D>, D + 1>> pieces;
    for (int e = 0; e < mesh.element_count(); ++e) {
        const int* el = mesh.element(e);
        std::array<Vec<D>, D + 1> v;
        std::array<double, D + 1> f;
        for (int i = 0; i <= D; ++i) {
            for (int c = 0; c < D; ++c)
                v[i][c] = mesh.coord(el[i], c);
            f[i] = field[el[i]];
        }
        pieces.clear();
        negative_region<D>(v, f, pieces);
        for (const auto& piece : pieces) {
            double vol = std::abs(simplex_volume<D>(piece));
            Vec<D> centroid = Vec<D>::Zero();
            for (const auto& p : piece)
                centroid += p;
            centroid /= D + 1;
            measure += vol;
            moment += vol * centroid;
        }
    }
}

}  // namespace detail

/// Measure of Omega_2 = {phi < 0}, by exact integration of the linear
/// interpolant's sign region.
inline double phase_measure(const SpatialMesh& mesh, const LevelSetField& field)
{
    double measure = 0.0;
    if (mesh.dim == 2) {
        Vec2 moment = Vec2::Zero();
        detail::accumulate_phase<2>(mesh, field, measure, moment);
    } else {
        Vec3 moment = Vec3::Zero();
        detail::accumulate_phase<3>(mesh, field, measure, moment);
    }
    return measure;
}

/// Centroid of Omega_2: integral of x over {phi < 0} divided by its measure.
inline Eigen::VectorXd centroid(const SpatialMesh& mesh, const LevelSetField& field)
{
    double measure = 0.0;
    Eigen::VectorXd c(mesh.dim);
    if (mesh.dim == 2) {
        Vec2 moment = Vec2::Zero();
        detail::accumulate_phase<2>(mesh, field, measure, moment);
        if (measure <= 0.0)
            throw std::runtime_error("centroid: empty phase");
        c = moment / measure;
    } else {
        Vec3 moment = Vec3::Zero();
        detail::accumulate_phase<3>(mesh, field, measure, moment);
        if (measure <= 0.0)
            throw std::runtime_error("centroid: empty phase");
        c = moment / measure;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Spatial interface extraction and geometric redistancing

/// Zero-level-set facets of the spatial linear interpolant: segments in 2D,
/// triangles in 3D.  Vertex coordinates only; used for distance queries.
struct SpatialInterface {
    int dim = 2;
    std::vector<double> verts;  // dim coordinates per vertex, facet-major
    int facet_count() const { return static_cast<int>(verts.size()) / (dim * dim); }
};

inline SpatialInterface extract_spatial_interface(const SpatialMesh& mesh,
                                                  const LevelSetField& field)
{
    SpatialInterface iface;
    iface.dim = mesh.dim;
    auto push2 = [&](const Vec2& a, const Vec2& b) {
        iface.verts.insert(iface.verts.end(), {a.x(), a.y(), b.x(), b.y()});
    };
    auto push3 = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
        iface.verts.insert(iface.verts.end(),
                           {a.x(), a.y(), a.z(), b.x(), b.y(), b.z(), c.x(), c.y(), c.z()});
    };
    for (int e = 0; e < mesh.element_count(); ++e) {
        const int* el = mesh.element(e);
        if (mesh.dim == 2) {
            std::array<Vec2, 3> v{mesh.node2(el[0]), mesh.node2(el[1]), mesh.node2(el[2])};
            std::array<double, 3> f{field[el[0]], field[el[1]], field[el[2]]};
            std::vector<Vec2> pts;
            for (int i = 0; i < 3; ++i)
                for (int j = i + 1; j < 3; ++j)
                    if (f[i] * f[j] < 0.0)
                        pts.push_back(detail::cut_point<2>(v[i], f[i], v[j], f[j]));
            for (int i = 0; i < 3; ++i)
                if (f[i] == 0.0)
                    pts.push_back(v[i]);
            if (pts.size() == 2)
                push2(pts[0], pts[1]);
        } else {
            std::array<Vec3, 4> v{mesh.node3(el[0]), mesh.node3(el[1]), mesh.node3(el[2]),
                                  mesh.node3(el[3])};
            std::array<double, 4> f{field[el[0]], field[el[1]], field[el[2]], field[el[3]]};
            std::vector<int> neg, pos;
            for (int i = 0; i < 4; ++i)
                (f[i] < 0.0 ? neg : pos).push_back(i);
            if (neg.empty() || pos.empty())
                continue;
            if (neg.size() == 1 || pos.size() == 1) {
                int a = neg.size() == 1 ? neg[0] : pos[0];
                const auto& others = neg.size() == 1 ? pos : neg;
                push3(detail::cut_point<3>(v[a], f[a], v[others[0]], f[others[0]]),
                      detail::cut_point<3>(v[a], f[a], v[others[1]], f[others[1]]),
                      detail::cut_point<3>(v[a], f[a], v[others[2]], f[others[2]]));
            } else {
                int a = neg[0], b = neg[1], c = pos[0], d = pos[1];
                Vec3 pac = detail::cut_point<3>(v[a], f[a], v[c], f[c]);
                Vec3 pad = detail::cut_point<3>(v[a], f[a], v[d], f[d]);
                Vec3 pbc = detail::cut_point<3>(v[b], f[b], v[c], f[c]);
                Vec3 pbd = detail::cut_point<3>(v[b], f[b], v[d], f[d]);
                push3(pac, pad, pbd);
                push3(pac, pbd, pbc);
            }
        }
    }
    return iface;
}

namespace detail {

inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b)
{
    Vec2 ab = b - a;
    double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

inline double dist_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    // Projection onto the plane, then barycentric containment; fall back to
    // edge distances.
    Vec3 n = (b - a).cross(c - a);
    double n2 = n.squaredNorm();
    if (n2 > 0.0) {
        double d = (p - a).dot(n) / std::sqrt(n2);
        Vec3 q = p - d * n / std::sqrt(n2);
        Vec3 v0 = b - a, v1 = c - a, v2 = q - a;
        double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
        double d20 = v2.dot(v0), d21 = v2.dot(v1);
        double denom = d00 * d11 - d01 * d01;
        if (denom > 0.0) {
            double v = (d11 * d20 - d01 * d21) / denom;
            double w = (d00 * d21 - d01 * d20) / denom;
            if (v >= 0.0 && w >= 0.0 && v + w <= 1.0)
                return std::abs(d);
        }
    }
    auto edge = [&](const Vec3& u, const Vec3& w) {
        Vec3 uw = w - u;
        double len2 = uw.squaredNorm();
        double t = len2 > 0.0 ? std::clamp((p - u).dot(uw) / len2, 0.0, 1.0) : 0.0;
        return (p - (u + t * uw)).norm();
    };
    return std::min({edge(a, b), edge(b, c), edge(c, a)});
}

}  // namespace detail

inline double distance_to_interface(const SpatialInterface& iface, const double* x)
{
    double best = std::numeric_limits<double>::max();
    if (iface.dim == 2) {
        Vec2 p(x[0], x[1]);
        for (int f = 0; f < iface.facet_count(); ++f) {
            const double* v = iface.verts.data() + static_cast<std::size_t>(f) * 4;
            best = std::min(best, detail::dist_point_segment(p, Vec2(v[0], v[1]), Vec2(v[2], v[3])));
        }
    } else {
        Vec3 p(x[0], x[1], x[2]);
        for (int f = 0; f < iface.facet_count(); ++f) {
            const double* v = iface.verts.data() + static_cast<std::size_t>(f) * 9;
            best = std::min(best, detail::dist_point_triangle(p, Vec3(v[0], v[1], v[2]),
                                                              Vec3(v[3], v[4], v[5]),
                                                              Vec3(v[6], v[7], v[8])));
        }
    }
    return best;
}

/// Replace phi with the exact distance to the extracted piecewise-linear
/// interface, sign preserved.  If the interface is empty the field is
/// returned unchanged.
inline LevelSetField redistance(const LevelSetField& field, const SpatialMesh& mesh)
{
    SpatialInterface iface = extract_spatial_interface(mesh, field);
    if (iface.facet_count() == 0)
        return field;
    LevelSetField out = field;
    for (int i = 0; i < mesh.node_count(); ++i) {
        double d = distance_to_interface(iface, &mesh.coords[static_cast<std::size_t>(i) * mesh.dim]);
        out[i] = field[i] < 0.0 ? -d : d;
    }
    return out;
}

}  // namespace stmesh

#pragma once

#include "stmesh/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmesh {

struct mesh_parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct mesh_topology_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Simplicial spatial mesh: triangles (dim 2) or tetrahedra (dim 3).
/// Elements are stored positively oriented; loaders re-orient on input.
class SpatialMesh {
public:
    int dim = 2;
    std::vector<double> coords;              // node-major, dim entries per node
    std::vector<int> elems;                  // (dim+1) entries per element
    std::map<std::vector<int>, std::string> boundary_tags;  // sorted facet -> tag

    int node_count() const { return static_cast<int>(coords.size()) / dim; }
    int element_count() const { return static_cast<int>(elems.size()) / (dim + 1); }

    const int* element(int e) const { return elems.data() + static_cast<std::size_t>(e) * (dim + 1); }

    Vec2 node2(int i) const { return Vec2(coords[2 * i], coords[2 * i + 1]); }
    Vec3 node3(int i) const { return Vec3(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]); }

    double coord(int i, int c) const { return coords[static_cast<std::size_t>(i) * dim + c]; }

    double element_volume(int e) const
    {
        const int* el = element(e);
        if (dim == 2) {
            std::array<Vec2, 3> v{node2(el[0]), node2(el[1]), node2(el[2])};
            return simplex_volume<2>(v);
        }
        std::array<Vec3, 4> v{node3(el[0]), node3(el[1]), node3(el[2]), node3(el[3])};
        return simplex_volume<3>(v);
    }

    double total_measure() const
    {
        double s = 0.0;
        for (int e = 0; e < element_count(); ++e)
            s += element_volume(e);
        return s;
    }

    double mean_edge_length() const
    {
        double sum = 0.0;
        long n = 0;
        for (int e = 0; e < element_count(); ++e) {
            const int* el = element(e);
            for (int i = 0; i <= dim; ++i)
                for (int j = i + 1; j <= dim; ++j) {
                    double d2 = 0.0;
                    for (int c = 0; c < dim; ++c) {
                        double d = coord(el[i], c) - coord(el[j], c);
                        d2 += d * d;
                    }
                    sum += std::sqrt(d2);
                    ++n;
                }
        }
        return n ? sum / n : 0.0;
    }

    /// Flip negatively oriented elements in place.
    void orient_positively()
    {
        for (int e = 0; e < element_count(); ++e) {
            if (element_volume(e) < 0.0)
                std::swap(elems[static_cast<std::size_t>(e) * (dim + 1)],
                          elems[static_cast<std::size_t>(e) * (dim + 1) + 1]);
        }
    }

    /// Facet incidence counts keyed by sorted node tuple.
    std::map<std::vector<int>, int> facet_census() const
    {
        std::map<std::vector<int>, int> census;
        const int nv = dim + 1;
        for (int e = 0; e < element_count(); ++e) {
            const int* el = element(e);
            for (int drop = 0; drop < nv; ++drop) {
                std::vector<int> f;
                f.reserve(nv - 1);
                for (int i = 0; i < nv; ++i)
                    if (i != drop)
                        f.push_back(el[i]);
                std::sort(f.begin(), f.end());
                ++census[f];
            }
        }
        return census;
    }

    void validate() const
    {
        const int n = node_count();
        for (int idx : elems)
            if (idx < 0 || idx >= n)
                throw mesh_topology_error("element references node " + std::to_string(idx) +
                                          " of a " + std::to_string(n) + "-node mesh");
        for (int e = 0; e < element_count(); ++e)
            if (element_volume(e) <= 0.0)
                throw mesh_topology_error("element " + std::to_string(e) + " has non-positive volume");
        for (const auto& [facet, count] : facet_census())
            if (count > 2)
                throw mesh_topology_error("facet shared by " + std::to_string(count) + " elements");
    }

    /// Node indices lying on boundary facets carrying the given tag.
    std::vector<int> tagged_nodes(const std::string& tag) const
    {
        std::vector<int> out;
        for (const auto& [facet, t] : boundary_tags)
            if (t == tag)
                out.insert(out.end(), facet.begin(), facet.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

/// Plain-text mesh format:
///   dim <d>
///   nodes <n>      followed by n coordinate lines
///   elements <m>   followed by m 0-based index tuples
///   boundary <k>   optional; k lines of facet tuple + tag
inline SpatialMesh load_spatial_mesh(std::istream& in)
{
    SpatialMesh mesh;
    std::string key;
    if (!(in >> key) || key != "dim")
        throw mesh_parse_error("expected 'dim'");
    if (!(in >> mesh.dim) || (mesh.dim != 2 && mesh.dim != 3))
        throw mesh_parse_error("dim must be 2 or 3");

    int n = 0;
    if (!(in >> key >> n) || key != "nodes" || n < 0)
        throw mesh_parse_error("expected 'nodes <n>'");
    mesh.coords.resize(static_cast<std::size_t>(n) * mesh.dim);
    for (double& c : mesh.coords)
        if (!(in >> c))
            throw mesh_parse_error("truncated node block");

    int m = 0;
    if (!(in >> key >> m) || key != "elements" || m < 0)
        throw mesh_parse_error("expected 'elements <m>'");
    mesh.elems.resize(static_cast<std::size_t>(m) * (mesh.dim + 1));
    for (int& idx : mesh.elems)
        if (!(in >> idx))
            throw mesh_parse_error("truncated element block");

    if (in >> key) {
        if (key != "boundary")
            throw mesh_parse_error("unexpected trailing block '" + key + "'");
        int k = 0;
        if (!(in >> k) || k < 0)
            throw mesh_parse_error("expected 'boundary <k>'");
        for (int i = 0; i < k; ++i) {
            std::vector<int> facet(mesh.dim);
            for (int& idx : facet)
                if (!(in >> idx))
                    throw mesh_parse_error("truncated boundary block");
            std::string tag;
            if (!(in >> tag))
                throw mesh_parse_error("missing boundary tag");
            std::sort(facet.begin(), facet.end());
            mesh.boundary_tags[facet] = tag;
        }
    }

    mesh.orient_positively();
    mesh.validate();
    return mesh;
}

inline SpatialMesh load_spatial_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw mesh_parse_error("cannot open mesh file: " + path);
    return load_spatial_mesh(in);
}

inline void save_spatial_mesh(const SpatialMesh& mesh, std::ostream& out)
{
    out << "dim " << mesh.dim << "\n";
    out << "nodes " << mesh.node_count() << "\n";
    out.precision(17);
    for (int i = 0; i < mesh.node_count(); ++i) {
        for (int c = 0; c < mesh.dim; ++c)
            out << (c ? " " : "") << mesh.coord(i, c);
        out << "\n";
    }
    out << "elements " << mesh.element_count() << "\n";
    for (int e = 0; e < mesh.element_count(); ++e) {
        const int* el = mesh.element(e);
        for (int i = 0; i <= mesh.dim; ++i)
            out << (i ? " " : "") << el[i];
        out << "\n";
    }
    if (!mesh.boundary_tags.empty()) {
        out << "boundary " << mesh.boundary_tags.size() << "\n";
        for (const auto& [facet, tag] : mesh.boundary_tags) {
            for (std::size_t i = 0; i < facet.size(); ++i)
                out << (i ? " " : "") << facet[i];
            out << " " << tag << "\n";
        }
    }
}

inline void save_spatial_mesh(const SpatialMesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write mesh file: " + path);
    save_spatial_mesh(mesh, out);
}

namespace detail {

inline void tag_boundary_edges(SpatialMesh& mesh,
                               const std::function<std::string(const Vec2&, const Vec2&)>& tagger)
{
    for (const auto& [facet, count] : mesh.facet_census()) {
        if (count != 1)
            continue;
        std::string tag = tagger(mesh.node2(facet[0]), mesh.node2(facet[1]));
        mesh.boundary_tags[facet] = tag;
    }
}

}  // namespace detail

/// Structured triangulation of [x0, x0+lx] x [y0, y0+ly]: nx*ny quads, each
/// split along the lower-left/upper-right diagonal.
inline SpatialMesh make_rect_mesh(int nx, int ny, double lx, double ly,
                                  double x0 = 0.0, double y0 = 0.0)
{
    SpatialMesh mesh;
    mesh.dim = 2;
    const double hx = lx / nx, hy = ly / ny;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            mesh.coords.push_back(x0 + i * hx);
            mesh.coords.push_back(y0 + j * hy);
        }
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            mesh.elems.insert(mesh.elems.end(), {a, b, c});
            mesh.elems.insert(mesh.elems.end(), {a, c, d});
        }
    const double tol = 1e-12 * std::max(lx, ly);
    detail::tag_boundary_edges(mesh, [&](const Vec2& p, const Vec2& q) -> std::string {
        if (std::abs(p.y() - y0) < tol && std::abs(q.y() - y0) < tol) return "bottom";
        if (std::abs(p.y() - (y0 + ly)) < tol && std::abs(q.y() - (y0 + ly)) < tol) return "top";
        if (std::abs(p.x() - x0) < tol && std::abs(q.x() - x0) < tol) return "left";
        if (std::abs(p.x() - (x0 + lx)) < tol && std::abs(q.x() - (x0 + lx)) < tol) return "right";
        return "wall";
    });
    mesh.validate();
    return mesh;
}

/// Structured tetrahedralization of [x0,x0+lx] x [y0,y0+ly] x [z0,z0+lz]:
/// each cube split into the 6 Kuhn tetrahedra (diagonal paths from the low
/// to the high corner), which is conforming across cube faces.
inline SpatialMesh make_box_mesh(int nx, int ny, int nz, double lx, double ly, double lz,
                                 double x0 = 0.0, double y0 = 0.0, double z0 = 0.0)
{
    SpatialMesh mesh;
    mesh.dim = 3;
    const double hx = lx / nx, hy = ly / ny, hz = lz / nz;
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) {
                mesh.coords.push_back(x0 + i * hx);
                mesh.coords.push_back(y0 + j * hy);
                mesh.coords.push_back(z0 + k * hz);
            }
    auto id = [nx, ny](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (const auto& perm : perms) {
                    int d[3] = {0, 0, 0};
                    mesh.elems.push_back(id(i, j, k));
                    for (int step = 0; step < 3; ++step) {
                        d[perm[step]] = 1;
                        mesh.elems.push_back(id(i + d[0], j + d[1], k + d[2]));
                    }
                }
    mesh.orient_positively();

    const double tol = 1e-12 * std::max({lx, ly, lz});
    for (const auto& [facet, count] : mesh.facet_census()) {
        if (count != 1)
            continue;
        auto all_at = [&](int c, double v) {
            for (int n : facet)
                if (std::abs(mesh.coord(n, c) - v) > tol)
                    return false;
            return true;
        };
        std::string tag = "wall";
        if (all_at(0, x0)) tag = "left";
        else if (all_at(0, x0 + lx)) tag = "right";
        else if (all_at(1, y0)) tag = "front";
        else if (all_at(1, y0 + ly)) tag = "back";
        else if (all_at(2, z0)) tag = "bottom";
        else if (all_at(2, z0 + lz)) tag = "top";
        mesh.boundary_tags[facet] = tag;
    }
    mesh.validate();
    return mesh;
}

/// Step-cavity filling domain: inflow channel [0,1.4]x[0,0.3] joined to an
/// elevated outflow channel [0.8,2.0]x[0.3,0.6].  With the default spacing
/// h = 0.05 the triangulation has 365 nodes and 624 elements.
inline SpatialMesh make_step_cavity_mesh(double h = 0.05)
{
    SpatialMesh mesh;
    mesh.dim = 2;
    auto cell_count = [h](double len) { return static_cast<int>(std::lround(len / h)); };

    std::map<std::pair<std::int64_t, std::int64_t>, int> node_id;
    auto key = [h](double x, double y) {
        return std::make_pair(static_cast<std::int64_t>(std::llround(x / h * 2)),
                              static_cast<std::int64_t>(std::llround(y / h * 2)));
    };
    auto get_node = [&](double x, double y) {
        auto it = node_id.find(key(x, y));
        if (it != node_id.end())
            return it->second;
        int id = mesh.node_count();
        mesh.coords.push_back(x);
        mesh.coords.push_back(y);
        node_id[key(x, y)] = id;
        return id;
    };
    auto add_block = [&](double x0, double y0, double lx, double ly) {
        const int nx = cell_count(lx), ny = cell_count(ly);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                double x = x0 + i * h, y = y0 + j * h;
                int a = get_node(x, y), b = get_node(x + h, y);
                int c = get_node(x + h, y + h), d = get_node(x, y + h);
                mesh.elems.insert(mesh.elems.end(), {a, b, c});
                mesh.elems.insert(mesh.elems.end(), {a, c, d});
            }
    };
    add_block(0.0, 0.0, 1.4, 0.3);
    add_block(0.8, 0.3, 1.2, 0.3);

    const double tol = 1e-9;
    detail::tag_boundary_edges(mesh, [&](const Vec2& p, const Vec2& q) -> std::string {
        if (std::abs(p.x()) < tol && std::abs(q.x()) < tol) return "inflow";
        if (std::abs(p.x() - 2.0) < tol && std::abs(q.x() - 2.0) < tol) return "outflow";
        return "wall";
    });
    mesh.validate();
    return mesh;
}

}  // namespace stmesh

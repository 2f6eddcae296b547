#pragma once

#include "stmesh/levelset.hpp"
#include "stmesh/spatial_mesh.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace stmesh {

/// Temporal node column over one spatial node: sorted times from t_n to
/// t_{n+1} with the matching global slab-node ids.
struct NodeColumn {
    int spatial_node = 0;
    std::vector<double> times;
    std::vector<int> slab_node_ids;

    int level() const { return static_cast<int>(times.size()) - 1; }
};

enum class PrismClass { unrefined, transition, fully_refined };

/// Extruded slab before simplex subdivision: one column per spatial node,
/// one prism per spatial element.  Neighboring prisms share column objects
/// through the common spatial node indexing.
struct PrismComplex {
    const SpatialMesh* mesh = nullptr;
    double t0 = 0.0, t1 = 0.0;
    std::vector<NodeColumn> columns;          // indexed by spatial node
    std::vector<PrismClass> prism_class;      // per spatial element; filled by transition_closure

    int prism_count() const { return mesh->element_count(); }

    int slab_node_count() const
    {
        int n = 0;
        for (const auto& c : columns)
            n += static_cast<int>(c.times.size());
        return n;
    }

    /// Column node counts of one prism, in spatial-element vertex order.
    std::vector<int> prism_edge_node_counts(int p) const
    {
        std::vector<int> counts;
        const int* el = mesh->element(p);
        for (int i = 0; i <= mesh->dim; ++i)
            counts.push_back(static_cast<int>(columns[el[i]].times.size()));
        return counts;
    }
};

namespace detail {

// Counter-based generator: one independent draw per (seed, node, k).
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double unit_draw(std::uint64_t seed, std::uint64_t node, std::uint64_t k)
{
    std::uint64_t h = splitmix64(seed ^ splitmix64(node ^ splitmix64(k + 0x51ab3ULL)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace detail

/// Extrude the spatial mesh over (t_n, t_n + dt) with level(node)+1 equally
/// spaced times per column.
inline PrismComplex extrude_slab(const SpatialMesh& mesh, double t_n, double dt,
                                 const RefinementMap& refinement)
{
    if (dt <= 0.0)
        throw std::invalid_argument("dt must be positive");
    if (static_cast<int>(refinement.level.size()) != mesh.node_count())
        throw std::invalid_argument("refinement map does not cover the mesh");

    PrismComplex complex;
    complex.mesh = &mesh;
    complex.t0 = t_n;
    complex.t1 = t_n + dt;
    complex.columns.resize(mesh.node_count());
    int next_id = 0;
    for (int i = 0; i < mesh.node_count(); ++i) {
        NodeColumn& col = complex.columns[i];
        col.spatial_node = i;
        const int level = refinement.at(i);
        if (level < 1)
            throw std::invalid_argument("refinement level must be >= 1");
        col.times.resize(level + 1);
        col.slab_node_ids.resize(level + 1);
        for (int k = 0; k <= level; ++k) {
            // Endpoints exact so consecutive slabs stack bitwise.
            col.times[k] = k == 0 ? t_n : (k == level ? complex.t1 : t_n + dt * k / level);
            col.slab_node_ids[k] = next_id++;
        }
    }
    return complex;
}

/// Shift every interior column time by a deterministic uniform draw in
/// +-magnitude x (local sub-step).  Slab-boundary times are untouched.
inline PrismComplex perturb_times(const PrismComplex& complex, double magnitude, std::uint64_t seed)
{
    if (magnitude < 0.0 || magnitude >= 0.5)
        throw std::invalid_argument("perturbation magnitude must be in [0, 0.5)");
    PrismComplex out = complex;
    if (magnitude == 0.0)
        return out;
    for (auto& col : out.columns) {
        const int level = col.level();
        for (int k = 1; k < level; ++k) {
            double sub = (complex.t1 - complex.t0) / level;
            double draw = 2.0 * detail::unit_draw(seed, col.spatial_node, k) - 1.0;
            col.times[k] += magnitude * sub * draw;
        }
        for (int k = 0; k < level; ++k)
            if (!(col.times[k] < col.times[k + 1]))
                throw std::runtime_error("perturbation violated column monotonicity");
    }
    return out;
}

/// Classify prisms by their column node counts; no nodes are added or moved.
inline PrismComplex transition_closure(const PrismComplex& complex)
{
    PrismComplex out = complex;
    out.prism_class.resize(out.prism_count());
    for (int p = 0; p < out.prism_count(); ++p) {
        auto counts = out.prism_edge_node_counts(p);
        int lo = counts[0], hi = counts[0];
        for (int c : counts) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        if (hi == 2)
            out.prism_class[p] = PrismClass::unrefined;
        else if (lo == hi)
            out.prism_class[p] = PrismClass::fully_refined;
        else
            out.prism_class[p] = PrismClass::transition;
    }
    return out;
}

}  // namespace stmesh

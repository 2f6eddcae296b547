#pragma once

#include "stmesh/delaunay.hpp"
#include "stmesh/slab_builder.hpp"
#include "stmesh/slab_mesh.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace stmesh {

struct SubdivisionConfig {
    double sliver_threshold_rel = 1e-9;   // fraction of the local prism volume
    double perturb_magnitude = 0.05;      // fraction of the local sub-step
    std::uint64_t seed = 1;
    bool deterministic_mode = false;      // magnitude 0, diagonals by global node index
    int max_retries = 8;
};

struct QualityStats {
    int element_count = 0;
    int node_count = 0;
    double min_volume = 0.0;
    double mean_volume = 0.0;
    double max_volume = 0.0;
    int slivers_removed = 0;
    std::map<int, int> simplices_per_prism_histogram;
};

struct subdivision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Staircase (Kuhn) subdivision of an unrefined prism, with the spatial
// vertices ordered by global node index so that shared-facet diagonals agree
// between neighbors without perturbation.
inline std::vector<std::vector<int>> kuhn_subdivide(const PrismComplex& complex, int prism)
{
    const int dim = complex.mesh->dim;
    const int* el = complex.mesh->element(prism);
    std::vector<int> order(el, el + dim + 1);
    std::sort(order.begin(), order.end());

    std::vector<std::vector<int>> out;
    for (int k = 0; k <= dim; ++k) {
        std::vector<int> simplex;
        for (int i = 0; i <= k; ++i)
            simplex.push_back(complex.columns[order[i]].slab_node_ids.front());
        for (int i = k; i <= dim; ++i)
            simplex.push_back(complex.columns[order[i]].slab_node_ids.back());
        out.push_back(std::move(simplex));
    }
    return out;
}

template <int D>
std::vector<std::vector<int>> delaunay_subdivide(const PrismComplex& complex, int prism)
{
    const int dim = D - 1;
    const int* el = complex.mesh->element(prism);
    std::vector<Vec<D>> pts;
    std::vector<int> global_id;
    Vec<D> shift = Vec<D>::Zero();
    for (int i = 0; i <= dim; ++i) {
        const NodeColumn& col = complex.columns[el[i]];
        for (std::size_t k = 0; k < col.times.size(); ++k) {
            Vec<D> p;
            for (int c = 0; c < dim; ++c)
                p[c] = complex.mesh->coord(el[i], c);
            p[dim] = col.times[k];
            pts.push_back(p);
            global_id.push_back(col.slab_node_ids[k]);
        }
    }
    for (const auto& p : pts)
        shift += p;
    shift /= static_cast<double>(pts.size());
    for (auto& p : pts)
        p -= shift;

    // Symbolic tie-breaking weights keyed on the global node id: slab-boundary
    // prism corners are exactly cospherical, and global keys make the broken
    // ties agree on both sides of a shared prism facet.
    std::vector<double> weights(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        weights[i] = static_cast<double>(splitmix64(0x5eedULL +
                                                    static_cast<std::uint64_t>(global_id[i]))) /
                     18446744073709551616.0;

    auto local = delaunay_triangulate<D>(pts, weights);
    std::vector<std::vector<int>> out;
    for (const auto& s : local) {
        std::vector<int> simplex;
        for (int v : s)
            simplex.push_back(global_id[v]);
        out.push_back(std::move(simplex));
    }
    return out;
}

}  // namespace detail

/// Subdivide one prism into (n_sd+1)-simplices.  Delaunay on the perturbed
/// node set, or the index-ordered staircase split in deterministic mode
/// (level-1 columns only).  Returned simplices carry global slab node ids.
inline std::vector<std::vector<int>> subdivide_prism(const PrismComplex& complex, int prism,
                                                     const SubdivisionConfig& config)
{
    auto counts = complex.prism_edge_node_counts(prism);
    const bool unrefined = std::all_of(counts.begin(), counts.end(), [](int c) { return c == 2; });
    if (config.deterministic_mode) {
        if (!unrefined)
            throw subdivision_error("deterministic mode supports only level-1 columns");
        return detail::kuhn_subdivide(complex, prism);
    }
    if (complex.mesh->dim == 2)
        return detail::delaunay_subdivide<3>(complex, prism);
    return detail::delaunay_subdivide<4>(complex, prism);
}

namespace detail {

inline double slab_simplex_volume(const PrismComplex& complex, const std::vector<double>& coords,
                                  const std::vector<int>& simplex)
{
    const int d = complex.mesh->dim + 1;
    if (d == 3) {
        std::array<Vec3, 4> v;
        for (int i = 0; i < 4; ++i)
            v[i] = Vec3(coords[3 * simplex[i]], coords[3 * simplex[i] + 1],
                        coords[3 * simplex[i] + 2]);
        return simplex_volume<3>(v);
    }
    std::array<Vec4, 5> v;
    for (int i = 0; i < 5; ++i)
        v[i] = Vec4(coords[4 * simplex[i]], coords[4 * simplex[i] + 1], coords[4 * simplex[i] + 2],
                    coords[4 * simplex[i] + 3]);
    return simplex_volume<4>(v);
}

}  // namespace detail

/// Drop simplices whose |volume| falls below the relative threshold.  The
/// removed volume must stay negligible; a defect above 10x the threshold
/// indicates a genuine gap and is an error.
inline std::vector<std::vector<int>> eliminate_slivers(std::vector<std::vector<int>> simplices,
                                                       const std::vector<double>& volumes,
                                                       double prism_volume,
                                                       const SubdivisionConfig& config,
                                                       int* removed_count = nullptr)
{
    if (config.sliver_threshold_rel <= 0.0 || config.sliver_threshold_rel >= 1e-3)
        throw std::invalid_argument("sliver_threshold_rel out of range");
    std::vector<std::vector<int>> kept;
    double kept_volume = 0.0;
    int removed = 0;
    for (std::size_t i = 0; i < simplices.size(); ++i) {
        if (std::abs(volumes[i]) < config.sliver_threshold_rel * prism_volume) {
            ++removed;
        } else {
            kept_volume += std::abs(volumes[i]);
            kept.push_back(std::move(simplices[i]));
        }
    }
    double defect = std::abs(kept_volume - prism_volume) / prism_volume;
    if (defect > 10.0 * config.sliver_threshold_rel)
        throw subdivision_error("volume defect " + std::to_string(defect) +
                                " after sliver removal indicates a gap, not a sliver");
    if (removed_count)
        *removed_count += removed;
    return kept;
}

/// Subdivide every prism, eliminate slivers, and merge into a conforming
/// slab mesh.  Columns are shared between prisms, so facet triangulations of
/// the (unique, generic-position) Delaunay agree between neighbors; prisms
/// whose point set is still degenerate are re-perturbed locally with an
/// incremented seed, bounded by config.max_retries.
inline std::pair<SpaceTimeSlabMesh, QualityStats> build_slab_mesh(const PrismComplex& complex_in,
                                                                  const SubdivisionConfig& config)
{
    PrismComplex complex = complex_in;
    const SpatialMesh& mesh = *complex.mesh;
    const int dim = mesh.dim;
    const int d_st = dim + 1;
    const double dt = complex.t1 - complex.t0;

    // Global node table from the shared columns.
    const int n_nodes = complex.slab_node_count();
    std::vector<double> coords(static_cast<std::size_t>(n_nodes) * d_st);
    auto fill_coords = [&]() {
        for (const auto& col : complex.columns)
            for (std::size_t k = 0; k < col.times.size(); ++k) {
                const std::size_t base = static_cast<std::size_t>(col.slab_node_ids[k]) * d_st;
                for (int c = 0; c < dim; ++c)
                    coords[base + c] = mesh.coord(col.spatial_node, c);
                coords[base + dim] = col.times[k];
            }
    };
    fill_coords();

    // Spatial node -> prisms touching it, for local retry invalidation.
    std::vector<std::vector<int>> prisms_of_node(mesh.node_count());
    for (int p = 0; p < mesh.element_count(); ++p)
        for (int i = 0; i <= dim; ++i)
            prisms_of_node[mesh.element(p)[i]].push_back(p);

    std::vector<int> retry(mesh.node_count(), 0);
    auto reperturb_column = [&](int node) {
        NodeColumn& col = complex.columns[node];
        const int level = col.level();
        ++retry[node];
        for (int k = 1; k < level; ++k) {
            double base = complex.t0 + dt * k / level;
            double draw = 2.0 * detail::unit_draw(config.seed + 0x100000ULL * retry[node],
                                                  static_cast<std::uint64_t>(node),
                                                  static_cast<std::uint64_t>(k)) -
                          1.0;
            col.times[k] = base + config.perturb_magnitude * (dt / level) * draw;
        }
    };

    QualityStats stats;
    std::vector<std::vector<std::vector<int>>> per_prism(mesh.element_count());
    std::vector<int> slivers_of_prism(mesh.element_count(), 0);
    std::vector<int> pending(mesh.element_count());
    std::iota(pending.begin(), pending.end(), 0);

    int round = 0;
    while (!pending.empty()) {
        if (round++ > config.max_retries)
            throw subdivision_error("prism subdivision failed after max retries; reseed the run");
        std::set<int> failed_nodes;
        std::vector<int> next;
        for (int p : pending) {
            double prism_volume = mesh.element_volume(p) * dt;
            try {
                auto simplices = subdivide_prism(complex, p, config);
                std::vector<double> volumes;
                double total = 0.0;
                for (auto& s : simplices) {
                    double v = detail::slab_simplex_volume(complex, coords, s);
                    if (v < 0.0) {
                        std::swap(s[0], s[1]);
                        v = -v;
                    }
                    volumes.push_back(v);
                    total += v;
                }
                if (std::abs(total - prism_volume) / prism_volume > 1e-9)
                    throw subdivision_error("prism volume defect before sliver removal");
                slivers_of_prism[p] = 0;
                per_prism[p] = eliminate_slivers(std::move(simplices), volumes, prism_volume,
                                                 config, &slivers_of_prism[p]);
            } catch (const std::exception&) {
                if (config.deterministic_mode || config.perturb_magnitude == 0.0)
                    throw;
                const int* el = mesh.element(p);
                for (int i = 0; i <= dim; ++i)
                    if (complex.columns[el[i]].level() > 1)
                        failed_nodes.insert(el[i]);
                // Level-1 prisms can still be cospherical; wiggle via a
                // vanishing set is impossible, so fail loudly.
                if (failed_nodes.empty())
                    throw;
                next.push_back(p);
            }
        }
        std::set<int> dirty(next.begin(), next.end());
        for (int node : failed_nodes) {
            reperturb_column(node);
            for (int p : prisms_of_node[node])
                dirty.insert(p);
        }
        fill_coords();
        pending.assign(dirty.begin(), dirty.end());
    }

    SpaceTimeSlabMesh slab;
    slab.dim_st = d_st;
    slab.t0 = complex.t0;
    slab.t1 = complex.t1;
    slab.coords = std::move(coords);
    slab.bottom_trace.resize(mesh.node_count());
    slab.top_trace.resize(mesh.node_count());
    slab.column_of.resize(n_nodes);
    for (const auto& col : complex.columns) {
        slab.bottom_trace[col.spatial_node] = col.slab_node_ids.front();
        slab.top_trace[col.spatial_node] = col.slab_node_ids.back();
        for (int id : col.slab_node_ids)
            slab.column_of[id] = col.spatial_node;
    }
    for (const auto& [facet, count] : mesh.facet_census())
        if (count == 1)
            slab.spatial_boundary_facets.insert(facet);

    for (int p = 0; p < mesh.element_count(); ++p) {
        ++stats.simplices_per_prism_histogram[static_cast<int>(per_prism[p].size())];
        stats.slivers_removed += slivers_of_prism[p];
        for (const auto& s : per_prism[p])
            slab.simplices.insert(slab.simplices.end(), s.begin(), s.end());
    }

    stats.element_count = slab.simplex_count();
    stats.node_count = slab.node_count();
    double vmin = std::numeric_limits<double>::max(), vmax = 0.0, vsum = 0.0;
    for (int e = 0; e < slab.simplex_count(); ++e) {
        double v = slab.simplex_volume_at(e);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        vsum += v;
    }
    stats.min_volume = slab.simplex_count() ? vmin : 0.0;
    stats.max_volume = vmax;
    stats.mean_volume = slab.simplex_count() ? vsum / slab.simplex_count() : 0.0;

    ConformityReport report = validate_conformity(slab, mesh.total_measure() * dt);
    if (!report.valid()) {
        std::ostringstream msg;
        msg << "slab mesh is nonconforming; offending facets:";
        for (const auto& f : report.nonconforming_facets) {
            msg << " (";
            for (std::size_t i = 0; i < f.size(); ++i)
                msg << (i ? "," : "") << f[i];
            msg << ")";
        }
        throw subdivision_error(msg.str());
    }
    return {std::move(slab), std::move(stats)};
}

/// Aggregate statistics of an already-built slab, with the simplex-to-prism
/// association recorded at build time.
inline QualityStats quality_report(const SpaceTimeSlabMesh& mesh,
                                   const std::map<int, int>& histogram = {})
{
    QualityStats stats;
    stats.element_count = mesh.simplex_count();
    stats.node_count = mesh.node_count();
    stats.simplices_per_prism_histogram = histogram;
    double vmin = std::numeric_limits<double>::max(), vmax = 0.0, vsum = 0.0;
    for (int e = 0; e < mesh.simplex_count(); ++e) {
        double v = mesh.simplex_volume_at(e);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        vsum += v;
    }
    stats.min_volume = mesh.simplex_count() ? vmin : 0.0;
    stats.max_volume = vmax;
    stats.mean_volume = mesh.simplex_count() ? vsum / mesh.simplex_count() : 0.0;
    return stats;
}

}  // namespace stmesh

#pragma once

#include "stmesh/fem_common.hpp"
#include "stmesh/linear_solver.hpp"
#include "stmesh/spatial_mesh.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace stmesh {

/// Level-set solution on one slab: nodal phi plus the extracted top trace
/// that seeds the next slab's jump term.
struct SlabScalarSolution {
    std::vector<double> phi;        // per slab node
    std::vector<double> trace_top;  // per spatial node
    SolveInfo solve_info;
};

/// Transient-advective composite stabilization parameter,
/// tau = [ (2/dt)^2 + (2|u|/h)^2 ]^(-1/2).  An infinite or non-positive
/// dt_local drops the transient term (steady/advective limit).
inline double tau_lev(double unorm, double h, double dt_local)
{
    double sum = 0.0;
    if (dt_local > 0.0 && std::isfinite(dt_local))
        sum += 4.0 / (dt_local * dt_local);
    if (unorm > 0.0 && h > 0.0)
        sum += 4.0 * unorm * unorm / (h * h);
    if (sum == 0.0)
        return 0.0;
    return 1.0 / std::sqrt(sum);
}

struct LevelSetSystem {
    SparseMatrix a;
    Eigen::VectorXd b;
};

/// Space-time DG assembly of the level-set transport weak form:
/// Galerkin  int w (phi_t + u . grad phi),
/// jump      int_{Omega_n} w+ (phi+ - phi-),
/// SUPG      sum_e int tau_LEV (w_t + u . grad w)(phi_t + u . grad phi).
/// `u` holds dim spatial velocity components per slab node; `phi_minus` is
/// the previous slab's top trace per spatial node.  `dirichlet` (slab node ->
/// value) pins inflow-boundary nodes, where characteristics enter the domain
/// and the transport operator alone leaves the unknown undetermined.
inline LevelSetSystem assemble_levelset(const SpaceTimeSlabMesh& slab, const SpatialMesh& spatial,
                                        const std::vector<double>& u,
                                        const std::vector<double>& phi_minus,
                                        const std::map<int, double>* dirichlet = nullptr)
{
    const int d_st = slab.dim_st;
    const int dim = d_st - 1;
    const int nv = d_st + 1;
    const int n = slab.node_count();
    if (static_cast<int>(u.size()) != n * dim)
        throw std::invalid_argument("assemble_levelset: velocity size mismatch");
    if (static_cast<int>(phi_minus.size()) != spatial.node_count())
        throw std::invalid_argument("assemble_levelset: trace size mismatch");

    const QuadRule& rule = slab_quadrature(d_st);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(slab.simplex_count()) * nv * nv + 64);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);

    Eigen::MatrixXd ae(nv, nv);
    Eigen::VectorXd op(nv);
    for (int e = 0; e < slab.simplex_count(); ++e) {
        const int* s = slab.simplex(e);
        ElementGeom g = element_geometry(slab, e);

        // tau from the mean nodal velocity (frozen per element).
        Eigen::VectorXd u_mean = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < nv; ++i)
            for (int c = 0; c < dim; ++c)
                u_mean[c] += u[static_cast<std::size_t>(s[i]) * dim + c];
        u_mean /= nv;
        const double tau = tau_lev(u_mean.norm(), g.h_spatial, g.dt_local);

        ae.setZero();
        for (int q = 0; q < rule.npts; ++q) {
            const double* bq = rule.point(q);
            Eigen::VectorXd uq = Eigen::VectorXd::Zero(dim);
            for (int i = 0; i < nv; ++i)
                for (int c = 0; c < dim; ++c)
                    uq[c] += bq[i] * u[static_cast<std::size_t>(s[i]) * dim + c];
            for (int i = 0; i < nv; ++i) {
                op[i] = g.grads(i, dim);  // d/dt
                for (int c = 0; c < dim; ++c)
                    op[i] += uq[c] * g.grads(i, c);
            }
            const double w = rule.weights[q] * g.volume;
            for (int i = 0; i < nv; ++i)
                for (int j = 0; j < nv; ++j)
                    ae(i, j) += w * (bq[i] + tau * op[i]) * op[j];
        }
        for (int i = 0; i < nv; ++i) {
            if (dirichlet && dirichlet->count(s[i]))
                continue;
            for (int j = 0; j < nv; ++j)
                trips.emplace_back(s[i], s[j], ae(i, j));
        }
    }

    // DG jump over the slab bottom: spatial P1 mass matrix on the trace.
    const int sd = spatial.dim;
    const double mass_diag = 2.0 / ((sd + 1.0) * (sd + 2.0));
    const double mass_off = 1.0 / ((sd + 1.0) * (sd + 2.0));
    for (int e = 0; e < spatial.element_count(); ++e) {
        const int* el = spatial.element(e);
        const double vol = spatial.element_volume(e);
        for (int i = 0; i <= sd; ++i) {
            const int bi = slab.bottom_trace[el[i]];
            if (dirichlet && dirichlet->count(bi))
                continue;
            for (int j = 0; j <= sd; ++j) {
                const double m = vol * (i == j ? mass_diag : mass_off);
                trips.emplace_back(bi, slab.bottom_trace[el[j]], m);
                b[bi] += m * phi_minus[el[j]];
            }
        }
    }

    if (dirichlet) {
        // Row replacement scaled to the mean mass-matrix diagonal so the
        // pinned rows do not skew the Krylov conditioning.
        const double scale = spatial.total_measure() / spatial.node_count();
        for (const auto& [node, value] : *dirichlet) {
            trips.emplace_back(node, node, scale);
            b[node] = scale * value;
        }
    }

    LevelSetSystem sys;
    sys.a.resize(n, n);
    sys.a.setFromTriplets(trips.begin(), trips.end());
    sys.b = std::move(b);
    return sys;
}

inline SlabScalarSolution solve_slab_levelset(const LevelSetSystem& system,
                                              const SpaceTimeSlabMesh& slab,
                                              const SolverOptions& opts = {})
{
    SlabScalarSolution sol;
    Eigen::VectorXd x = solve_gmres(system.a, system.b, opts, &sol.solve_info);
    sol.phi.assign(x.data(), x.data() + x.size());
    sol.trace_top.resize(slab.top_trace.size());
    for (std::size_t i = 0; i < slab.top_trace.size(); ++i)
        sol.trace_top[i] = sol.phi[slab.top_trace[i]];
    return sol;
}

/// One-call transport of phi_minus through a slab under a nodal velocity.
inline SlabScalarSolution advect_levelset(const SpaceTimeSlabMesh& slab,
                                          const SpatialMesh& spatial, const std::vector<double>& u,
                                          const std::vector<double>& phi_minus,
                                          const SolverOptions& opts = {},
                                          const std::map<int, double>* dirichlet = nullptr)
{
    return solve_slab_levelset(assemble_levelset(slab, spatial, u, phi_minus, dirichlet), slab,
                               opts);
}

/// Slab nodes on inflow portions of the lateral boundary (u . n < 0 for the
/// outward normal of some adjacent spatial boundary facet), the set that
/// needs Dirichlet data in pure transport runs.
inline std::vector<int> inflow_nodes(const SpaceTimeSlabMesh& slab, const SpatialMesh& spatial,
                                     const std::vector<double>& u)
{
    const int dim = slab.dim_st - 1;
    // Outward normals per spatial boundary facet, keyed by sorted facet.
    std::map<int, std::vector<const std::vector<int>*>> facets_of_node;
    for (const auto& facet : slab.spatial_boundary_facets)
        for (int n : facet)
            facets_of_node[n].push_back(&facet);

    // Facet -> outward normal, from the adjacent element's opposite vertex.
    std::map<const std::vector<int>*, Eigen::VectorXd> normal_of;
    for (int e = 0; e < spatial.element_count(); ++e) {
        const int* el = spatial.element(e);
        for (int drop = 0; drop <= dim; ++drop) {
            std::vector<int> f;
            for (int i = 0; i <= dim; ++i)
                if (i != drop)
                    f.push_back(el[i]);
            std::sort(f.begin(), f.end());
            auto it = slab.spatial_boundary_facets.find(f);
            if (it == slab.spatial_boundary_facets.end())
                continue;
            Eigen::VectorXd normal(dim);
            if (dim == 2) {
                Vec2 a = spatial.node2(f[0]), b = spatial.node2(f[1]);
                normal << (b - a).y(), -(b - a).x();
            } else {
                Vec3 a = spatial.node3(f[0]), b = spatial.node3(f[1]), c = spatial.node3(f[2]);
                Vec3 cr = (b - a).cross(c - a);
                normal << cr.x(), cr.y(), cr.z();
            }
            Eigen::VectorXd opp(dim);
            for (int c = 0; c < dim; ++c)
                opp[c] = spatial.coord(el[drop], c) - spatial.coord(f[0], c);
            if (normal.dot(opp) > 0.0)
                normal = -normal;
            normal_of[&*it] = normal.normalized();
        }
    }

    std::vector<int> out;
    for (int i = 0; i < slab.node_count(); ++i) {
        auto it = facets_of_node.find(slab.column_of[i]);
        if (it == facets_of_node.end())
            continue;
        Eigen::VectorXd ui(dim);
        for (int c = 0; c < dim; ++c)
            ui[c] = u[static_cast<std::size_t>(i) * dim + c];
        for (const auto* facet : it->second) {
            auto nit = normal_of.find(facet);
            if (nit != normal_of.end() && ui.dot(nit->second) < 0.0) {
                out.push_back(i);
                break;
            }
        }
    }
    return out;
}

/// Nodal sampling of an analytic velocity field u(x..., t) for the pure
/// transport benchmarks.
inline std::vector<double> sample_velocity(
    const SpaceTimeSlabMesh& slab,
    const std::function<void(const double* xt, double* u)>& field)
{
    const int dim = slab.dim_st - 1;
    std::vector<double> u(static_cast<std::size_t>(slab.node_count()) * dim);
    std::vector<double> xt(slab.dim_st);
    for (int i = 0; i < slab.node_count(); ++i) {
        for (int c = 0; c < slab.dim_st; ++c)
            xt[c] = slab.coord(i, c);
        field(xt.data(), &u[static_cast<std::size_t>(i) * dim]);
    }
    return u;
}

}  // namespace stmesh

#pragma once

#include "stmesh/fem_common.hpp"
#include "stmesh/fem_levelset.hpp"
#include "stmesh/interface.hpp"
#include "stmesh/linear_solver.hpp"
#include "stmesh/spatial_mesh.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace stmesh {

/// Two-phase material data.  Phase 1 is the phi > 0 side, phase 2 the
/// phi < 0 side; eps is the half-width of the Heaviside smoothing band.
struct MaterialPair {
    double rho1 = 1.0, rho2 = 1.0;  // densities
    double mu1 = 1.0, mu2 = 1.0;    // dynamic viscosities
    double gamma = 0.0;             // surface tension coefficient
    Eigen::Vector2d f = Eigen::Vector2d::Zero();  // body force (acceleration)
    double eps = 1.0;               // smoothing half-width

    void validate() const
    {
        if (rho1 <= 0.0 || rho2 <= 0.0 || mu1 <= 0.0 || mu2 <= 0.0 || eps <= 0.0)
            throw std::invalid_argument("MaterialPair: non-positive density/viscosity/eps");
    }
};

inline double smoothed_heaviside(double phi, double eps)
{
    if (phi < -eps)
        return 0.0;
    if (phi > eps)
        return 1.0;
    return 0.5 * (1.0 + phi / eps + std::sin(M_PI * phi / eps) / M_PI);
}

/// (rho, mu) blended across the interface.
inline std::pair<double, double> material_at(double phi, const MaterialPair& m)
{
    const double h = smoothed_heaviside(phi, m.eps);
    return {m.rho2 + (m.rho1 - m.rho2) * h, m.mu2 + (m.mu1 - m.mu2) * h};
}

/// eps = 1.5 x mean edge length of interface-cut elements; falls back to the
/// global mean edge length when nothing is cut.
inline double interface_smoothing_width(const SpatialMesh& mesh, const std::vector<double>& phi)
{
    double sum = 0.0;
    int count = 0;
    auto accumulate = [&](int e) {
        const int* el = mesh.element(e);
        for (int i = 0; i <= mesh.dim; ++i)
            for (int j = i + 1; j <= mesh.dim; ++j) {
                double d2 = 0.0;
                for (int c = 0; c < mesh.dim; ++c) {
                    double d = mesh.coord(el[i], c) - mesh.coord(el[j], c);
                    d2 += d * d;
                }
                sum += std::sqrt(d2);
                ++count;
            }
    };
    for (int e = 0; e < mesh.element_count(); ++e) {
        const int* el = mesh.element(e);
        bool has_neg = false, has_pos = false;
        for (int i = 0; i <= mesh.dim; ++i)
            (phi[el[i]] < 0.0 ? has_neg : has_pos) = true;
        if (has_neg && has_pos)
            accumulate(e);
    }
    if (count == 0)
        for (int e = 0; e < mesh.element_count(); ++e)
            accumulate(e);
    return count ? 1.5 * sum / count : 1.5;
}

/// tau_MOM = [ (2/dt)^2 + (2|u|/h)^2 + (4 nu/h^2)^2 ]^(-1/2) / rho.
inline double tau_mom(double unorm, double h, double dt_local, double rho, double mu)
{
    const double nu = mu / rho;
    double sum = 0.0;
    if (dt_local > 0.0 && std::isfinite(dt_local))
        sum += 4.0 / (dt_local * dt_local);
    if (h > 0.0) {
        sum += 4.0 * unorm * unorm / (h * h);
        sum += 16.0 * nu * nu / (h * h * h * h);
    }
    if (sum == 0.0)
        return 0.0;
    return 1.0 / (rho * std::sqrt(sum));
}

/// tau_CONT = h |u| / 2 * min(1, Re_elem / 3), Re_elem = |u| h rho / (2 mu).
inline double tau_cont(double unorm, double h, double rho, double mu)
{
    if (unorm <= 0.0 || h <= 0.0)
        return 0.0;
    const double re = unorm * h * rho / (2.0 * mu);
    return 0.5 * h * unorm * std::min(1.0, re / 3.0);
}

// ---------------------------------------------------------------------------
// Surface tension (Laplace-Beltrami form)
// ---------------------------------------------------------------------------

/// RHS force from the tangential-gradient identity on the space-time interface
/// patch: F(i,a) = -gamma sum_facets area * (P grad N_i)_a with P = I - n n^T.
/// Per facet the nodal forces sum to zero exactly (P sum_i grad N_i = 0), so a
/// closed interface exerts no net force by construction.  `ndof_per_node` dofs
/// per slab node, velocity components first.
inline Eigen::VectorXd laplace_beltrami_rhs(const SpaceTimeSlabMesh& slab,
                                            const InterfaceFacets& iface, double gamma,
                                            int ndof_per_node = 3, int* skipped = nullptr)
{
    const int d = slab.dim_st;
    const int dim = d - 1;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(slab.node_count()) * ndof_per_node);
    if (gamma == 0.0)
        return rhs;
    int skip = 0;
    for (int f = 0; f < iface.facet_count(); ++f) {
        const double area = iface.facet_measure(f);
        if (!(area > 1e-300)) {
            ++skip;
            continue;
        }
        // Facet unit normal in space-time (sign irrelevant: P is even in n).
        Eigen::VectorXd n(d);
        if (d == 3) {
            const double* a = iface.facet_vertex(f, 0);
            const double* b = iface.facet_vertex(f, 1);
            const double* c = iface.facet_vertex(f, 2);
            Vec3 e1(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
            Vec3 e2(c[0] - a[0], c[1] - a[1], c[2] - a[2]);
            Vec3 cr = e1.cross(e2);
            n << cr.x(), cr.y(), cr.z();
        } else {
            // Null space of the three edge vectors.
            Eigen::MatrixXd edges(3, d);
            const double* a = iface.facet_vertex(f, 0);
            for (int j = 1; j < d; ++j) {
                const double* vj = iface.facet_vertex(f, j);
                for (int c = 0; c < d; ++c)
                    edges(j - 1, c) = vj[c] - a[c];
            }
            n = edges.fullPivLu().kernel().col(0);
        }
        const double nn = n.norm();
        if (nn == 0.0) {
            ++skip;
            continue;
        }
        n /= nn;
        const int e = iface.parent[f];
        ElementGeom g = element_geometry(slab, e);
        const int* s = slab.simplex(e);
        for (int i = 0; i <= d; ++i) {
            Eigen::VectorXd grad = g.grads.row(i).transpose();
            Eigen::VectorXd tangential = grad - n * n.dot(grad);
            for (int a = 0; a < dim; ++a)
                rhs[static_cast<Eigen::Index>(s[i]) * ndof_per_node + a] -=
                    gamma * area * tangential[a];
        }
    }
    if (skipped)
        *skipped = skip;
    return rhs;
}

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

struct VelocityBc {
    enum class Kind { noslip, slip, inflow, traction_free };
    Kind kind = Kind::noslip;
    // Required for Kind::inflow: velocity as a function of (x, y, t).
    std::function<void(const double* xt, double* u)> inflow;
    // Pin p = 0 on this boundary (pressure reference).
    bool zero_pressure = false;
};
using BcMap = std::map<std::string, VelocityBc>;

/// Dirichlet dof -> value map for the extruded lateral boundary.  dofs are
/// 3*node + {0,1} velocity, 3*node + 2 pressure.  Slip pins the wall-normal
/// component (walls must be axis-aligned); at corners the stronger condition
/// wins (noslip > inflow > slip).
inline std::map<int, double> ns_constraints(const SpaceTimeSlabMesh& slab,
                                            const SpatialMesh& spatial, const BcMap& bcs)
{
    struct NodeBc {
        bool noslip = false;
        const VelocityBc* inflow = nullptr;
        std::set<int> slip_axes;
        bool zero_pressure = false;
    };
    std::map<int, NodeBc> per_node;
    for (const auto& [facet, tag] : spatial.boundary_tags) {
        auto it = bcs.find(tag);
        if (it == bcs.end())
            throw std::invalid_argument("ns_constraints: no boundary condition for tag '" + tag +
                                        "'");
        const VelocityBc& bc = it->second;
        int axis = 0;
        if (bc.kind == VelocityBc::Kind::slip) {
            // 2D edge normal; dominant component picks the pinned axis.
            const double dx = spatial.coord(facet[1], 0) - spatial.coord(facet[0], 0);
            const double dy = spatial.coord(facet[1], 1) - spatial.coord(facet[0], 1);
            axis = std::abs(dy) >= std::abs(dx) ? 0 : 1;
        }
        for (int nd : facet) {
            NodeBc& nb = per_node[nd];
            switch (bc.kind) {
                case VelocityBc::Kind::noslip: nb.noslip = true; break;
                case VelocityBc::Kind::inflow:
                    if (!bc.inflow)
                        throw std::invalid_argument("ns_constraints: inflow without profile");
                    nb.inflow = &bc;
                    break;
                case VelocityBc::Kind::slip: nb.slip_axes.insert(axis); break;
                case VelocityBc::Kind::traction_free: break;
            }
            nb.zero_pressure = nb.zero_pressure || bc.zero_pressure;
        }
    }

    std::map<int, double> out;
    double xt[3], uval[2];
    for (int i = 0; i < slab.node_count(); ++i) {
        auto it = per_node.find(slab.column_of[i]);
        if (it == per_node.end())
            continue;
        const NodeBc& nb = it->second;
        if (nb.noslip) {
            out[3 * i] = 0.0;
            out[3 * i + 1] = 0.0;
        } else if (nb.inflow) {
            for (int c = 0; c < 3; ++c)
                xt[c] = slab.coord(i, c);
            nb.inflow->inflow(xt, uval);
            out[3 * i] = uval[0];
            out[3 * i + 1] = uval[1];
        } else {
            for (int a : nb.slip_axes)
                out[3 * i + a] = 0.0;
        }
        if (nb.zero_pressure)
            out[3 * i + 2] = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

struct NsSystem {
    SparseMatrix jac;
    Eigen::VectorXd residual;
};

/// Newton residual and consistent Jacobian of the stabilized space-time
/// two-phase flow slab problem.  `state` interleaves (u, v, p) per slab node;
/// `u_minus` is the previous slab's top velocity trace (2 per spatial node);
/// `phi_slab` the frozen level set per slab node.  tau is frozen from
/// `tau_state` (defaults to `state`), so the Jacobian is the exact derivative
/// of the residual at fixed stabilization parameters.  Rows in `dirichlet`
/// are replaced by scaled identity with residual scale*(state - value).
inline NsSystem assemble_ns(const SpaceTimeSlabMesh& slab, const SpatialMesh& spatial,
                            const Eigen::VectorXd& state, const std::vector<double>& u_minus,
                            const std::vector<double>& phi_slab, const MaterialPair& mat,
                            const InterfaceFacets* iface = nullptr,
                            const std::map<int, double>* dirichlet = nullptr,
                            const Eigen::VectorXd* tau_state = nullptr)
{
    mat.validate();
    if (slab.dim_st != 3)
        throw std::invalid_argument("assemble_ns: tetrahedral (2D+time) slabs only");
    const int n = slab.node_count();
    const int ndof = 3 * n;
    if (state.size() != ndof)
        throw std::invalid_argument("assemble_ns: state size mismatch");
    if (static_cast<int>(u_minus.size()) != 2 * spatial.node_count())
        throw std::invalid_argument("assemble_ns: trace size mismatch");
    if (static_cast<int>(phi_slab.size()) != n)
        throw std::invalid_argument("assemble_ns: phi size mismatch");
    if (!state.allFinite())
        throw std::invalid_argument("assemble_ns: non-finite state");
    const Eigen::VectorXd& ts = tau_state ? *tau_state : state;

    const QuadRule& rule = slab_quadrature(3);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(slab.simplex_count()) * 144 + 256);
    Eigen::VectorXd res = Eigen::VectorXd::Zero(ndof);

    auto pinned = [&](int dof) { return dirichlet && dirichlet->count(dof); };

    Eigen::MatrixXd ae(12, 12);
    Eigen::VectorXd re(12);
    double total_vol = 0.0;
    for (int e = 0; e < slab.simplex_count(); ++e) {
        const int* s = slab.simplex(e);
        ElementGeom g = element_geometry(slab, e);
        total_vol += g.volume;

        // Frozen stabilization parameters from tau_state element means.
        double phi_mean = 0.0;
        Eigen::Vector2d u_tau = Eigen::Vector2d::Zero();
        for (int i = 0; i < 4; ++i) {
            phi_mean += 0.25 * phi_slab[s[i]];
            for (int a = 0; a < 2; ++a)
                u_tau[a] += 0.25 * ts[3 * s[i] + a];
        }
        auto [rho_tau, mu_tau] = material_at(phi_mean, mat);
        const double tm = tau_mom(u_tau.norm(), g.h_spatial, g.dt_local, rho_tau, mu_tau);
        const double tc = tau_cont(u_tau.norm(), g.h_spatial, rho_tau, mu_tau);

        ae.setZero();
        re.setZero();
        for (int q = 0; q < rule.npts; ++q) {
            const double* bq = rule.point(q);
            const double w = rule.weights[q] * g.volume;

            Eigen::Vector2d uq = Eigen::Vector2d::Zero();
            Eigen::Vector2d ut = Eigen::Vector2d::Zero();   // time derivative
            Eigen::Matrix2d du = Eigen::Matrix2d::Zero();   // du(a,b) = d u_a / d x_b
            Eigen::Vector2d gp = Eigen::Vector2d::Zero();   // pressure gradient
            double pq = 0.0, phiq = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double uj0 = state[3 * s[j]], uj1 = state[3 * s[j] + 1];
                const double pj = state[3 * s[j] + 2];
                uq[0] += bq[j] * uj0;
                uq[1] += bq[j] * uj1;
                ut[0] += g.grads(j, 2) * uj0;
                ut[1] += g.grads(j, 2) * uj1;
                for (int b = 0; b < 2; ++b) {
                    du(0, b) += uj0 * g.grads(j, b);
                    du(1, b) += uj1 * g.grads(j, b);
                    gp[b] += pj * g.grads(j, b);
                }
                pq += bq[j] * pj;
                phiq += bq[j] * phi_slab[s[j]];
            }
            auto [rho, mu] = material_at(phiq, mat);
            const double divu = du(0, 0) + du(1, 1);

            // Strong momentum residual (viscous part vanishes for P1).
            Eigen::Vector2d conv = ut + du * uq;
            Eigen::Vector2d rs = rho * (conv - mat.f) + gp;

            // L_j = dN_j/dt + u . grad N_j (advective test/trial operator).
            double L[4];
            for (int j = 0; j < 4; ++j)
                L[j] = g.grads(j, 2) + uq[0] * g.grads(j, 0) + uq[1] * g.grads(j, 1);

            for (int i = 0; i < 4; ++i) {
                const Eigen::Vector2d gi(g.grads(i, 0), g.grads(i, 1));
                for (int a = 0; a < 2; ++a) {
                    double r = rho * bq[i] * (conv[a] - mat.f[a]);
                    for (int c = 0; c < 2; ++c)
                        r += mu * (du(a, c) + du(c, a)) * gi[c];
                    r += -pq * gi[a];
                    r += tm * rho * L[i] * rs[a];
                    r += tc * rho * gi[a] * divu;
                    re[3 * i + a] += w * r;
                }
                // Continuity row with its GLS (pressure-stabilizing) part.
                double rc = bq[i] * divu;
                rc += tm * (gi[0] * rs[0] + gi[1] * rs[1]);
                re[3 * i + 2] += w * rc;

                for (int j = 0; j < 4; ++j) {
                    const Eigen::Vector2d gj(g.grads(j, 0), g.grads(j, 1));
                    const double gij = gi.dot(gj);
                    for (int a = 0; a < 2; ++a) {
                        for (int b = 0; b < 2; ++b) {
                            double v = rho * bq[i] * (int(a == b) * L[j] + bq[j] * du(a, b));
                            v += mu * (int(a == b) * gij + gj[a] * gi[b]);
                            v += tm * rho *
                                 (L[i] * rho * (int(a == b) * L[j] + bq[j] * du(a, b)) +
                                  bq[j] * gi[b] * rs[a]);
                            v += tc * rho * gi[a] * gj[b];
                            ae(3 * i + a, 3 * j + b) += w * v;
                        }
                        // d momentum / dp and d continuity / du.
                        ae(3 * i + a, 3 * j + 2) += w * (-bq[j] * gi[a] + tm * rho * L[i] * gj[a]);
                        double cv = bq[i] * gj[a];
                        cv += tm * (gi[a] * rho * L[j]);
                        for (int c = 0; c < 2; ++c)
                            cv += tm * gi[c] * rho * bq[j] * du(c, a);
                        ae(3 * i + 2, 3 * j + a) += w * cv;
                    }
                    ae(3 * i + 2, 3 * j + 2) += w * tm * gij;
                }
            }
        }
        for (int i = 0; i < 4; ++i)
            for (int ca = 0; ca < 3; ++ca) {
                const int row = 3 * s[i] + ca;
                if (pinned(row))
                    continue;
                res[row] += re[3 * i + ca];
                for (int j = 0; j < 4; ++j)
                    for (int cb = 0; cb < 3; ++cb)
                        trips.emplace_back(row, 3 * s[j] + cb, ae(3 * i + ca, 3 * j + cb));
            }
    }

    // DG jump over the slab bottom with phase-dependent density.
    const QuadRule& tri = simplex_quadrature(2, 3);
    for (int e = 0; e < spatial.element_count(); ++e) {
        const int* el = spatial.element(e);
        const double vol = spatial.element_volume(e);
        int bi[3];
        for (int i = 0; i < 3; ++i)
            bi[i] = slab.bottom_trace[el[i]];
        for (int q = 0; q < tri.npts; ++q) {
            const double* bq = tri.point(q);
            const double w = tri.weights[q] * vol;
            double phiq = 0.0;
            Eigen::Vector2d jump = Eigen::Vector2d::Zero();
            for (int j = 0; j < 3; ++j) {
                phiq += bq[j] * phi_slab[bi[j]];
                for (int a = 0; a < 2; ++a)
                    jump[a] += bq[j] * (state[3 * bi[j] + a] -
                                        u_minus[static_cast<std::size_t>(el[j]) * 2 + a]);
            }
            const double rho = material_at(phiq, mat).first;
            for (int i = 0; i < 3; ++i)
                for (int a = 0; a < 2; ++a) {
                    const int row = 3 * bi[i] + a;
                    if (pinned(row))
                        continue;
                    res[row] += w * bq[i] * rho * jump[a];
                    for (int j = 0; j < 3; ++j)
                        trips.emplace_back(row, 3 * bi[j] + a, w * bq[i] * rho * bq[j]);
                }
        }
    }

    // Surface tension enters the residual with opposite sign (R = LHS - RHS).
    if (iface && mat.gamma != 0.0) {
        Eigen::VectorXd st = laplace_beltrami_rhs(slab, *iface, mat.gamma);
        for (int dof = 0; dof < ndof; ++dof)
            if (!pinned(dof))
                res[dof] -= st[dof];
    }

    if (dirichlet) {
        const double vscale = 0.5 * (mat.rho1 + mat.rho2) * total_vol / n;
        const double pscale = total_vol / n;
        for (const auto& [dof, value] : *dirichlet) {
            const double scale = dof % 3 == 2 ? pscale : vscale;
            trips.emplace_back(dof, dof, scale);
            res[dof] = scale * (state[dof] - value);
        }
    }

    NsSystem sys;
    sys.jac.resize(ndof, ndof);
    sys.jac.setFromTriplets(trips.begin(), trips.end());
    sys.residual = std::move(res);
    return sys;
}

// ---------------------------------------------------------------------------
// Newton and coupling drivers
// ---------------------------------------------------------------------------

struct SlabFlowSolution {
    std::vector<double> u;  // 2 per slab node
    std::vector<double> p;  // per slab node
    std::vector<double> trace_top_u;  // 2 per spatial node
    std::vector<double> residual_history;
    int iterations = 0;
    bool converged = false;
};

struct newton_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NewtonOptions {
    double tol = 1e-8;  // relative residual
    int max_iter = 15;
    int max_halvings = 4;
    bool pin_pressure_fallback = true;
    // Direct LU by default: Newton systems at these sizes factor faster than
    // ILUT+GMRES converges, and the cost is independent of conditioning.
    SolverOptions linear{1e-10, 4000, 60, true, true};
    PhaseTimers* timers = nullptr;  // optional formation/solution accounting
};

namespace detail {

/// Runs fn and adds its wall time to *acc when acc is set.
template <class F>
auto timed(double* acc, F&& fn) -> decltype(fn())
{
    if (!acc)
        return fn();
    const auto start = std::chrono::steady_clock::now();
    auto result = fn();
    *acc += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace detail

inline SlabFlowSolution newton_solve_slab(const SpaceTimeSlabMesh& slab,
                                          const SpatialMesh& spatial,
                                          const std::vector<double>& u_minus,
                                          const std::vector<double>& phi_slab,
                                          const MaterialPair& mat,
                                          std::map<int, double> dirichlet,
                                          const NewtonOptions& opts = {},
                                          const Eigen::VectorXd* initial_guess = nullptr)
{
    const int n = slab.node_count();
    const int ndof = 3 * n;

    // Without a pressure boundary the pressure is a gauge; pin one unknown.
    if (opts.pin_pressure_fallback) {
        bool has_pressure = false;
        for (const auto& [dof, value] : dirichlet)
            has_pressure = has_pressure || dof % 3 == 2;
        if (!has_pressure)
            dirichlet[2] = 0.0;
    }

    InterfaceFacets iface;
    if (mat.gamma != 0.0) {
        LevelSetField field;
        field.values = phi_slab;
        iface = extract_interface(slab, field);
    }

    Eigen::VectorXd x =
        initial_guess ? *initial_guess : Eigen::VectorXd::Zero(ndof);
    if (x.size() != ndof)
        throw std::invalid_argument("newton_solve_slab: bad initial guess size");

    double* form = opts.timers ? &opts.timers->formation_seconds : nullptr;
    double* solv = opts.timers ? &opts.timers->solution_seconds : nullptr;

    // tau is frozen from the initial guess for the whole solve: letting it
    // track the iterate makes the residual a moving target (its tau
    // sensitivity is not in the Jacobian) and Newton limit-cycles instead of
    // converging quadratically.  Coupling iterations restart Newton from the
    // previous velocity, which refreshes tau.
    const Eigen::VectorXd tau_ref = x;

    SlabFlowSolution sol;
    NsSystem sys = detail::timed(form, [&] {
        return assemble_ns(slab, spatial, x, u_minus, phi_slab, mat, &iface, &dirichlet,
                           &tau_ref);
    });
    double rnorm = sys.residual.norm();
    const double r0 = std::max(rnorm, 1e-300);
    sol.residual_history.push_back(rnorm);

    int grow_streak = 0;
    for (int it = 0; it < opts.max_iter && !sol.converged; ++it) {
        Eigen::VectorXd step = detail::timed(
            solv, [&] { return solve_gmres(sys.jac, Eigen::VectorXd(-sys.residual), opts.linear); });
        double alpha = 1.0;
        Eigen::VectorXd x_new;
        NsSystem sys_new;
        double rnew = 0.0;
        for (int half = 0;; ++half) {
            x_new = x + alpha * step;
            sys_new = detail::timed(form, [&] {
                return assemble_ns(slab, spatial, x_new, u_minus, phi_slab, mat, &iface,
                                   &dirichlet, &tau_ref);
            });
            rnew = sys_new.residual.norm();
            if (rnew < rnorm || half >= opts.max_halvings)
                break;
            alpha *= 0.5;
        }
        grow_streak = rnew >= rnorm ? grow_streak + 1 : 0;
        x = std::move(x_new);
        sys = std::move(sys_new);
        rnorm = rnew;
        sol.residual_history.push_back(rnorm);
        ++sol.iterations;
        if (rnorm / r0 < opts.tol || rnorm < 1e-14)
            sol.converged = true;
        if (grow_streak >= 3) {
            std::ostringstream msg;
            msg << "newton_solve_slab: diverging residual history:";
            for (double r : sol.residual_history)
                msg << " " << r;
            throw newton_error(msg.str());
        }
    }

    sol.u.resize(static_cast<std::size_t>(n) * 2);
    sol.p.resize(n);
    for (int i = 0; i < n; ++i) {
        sol.u[2 * i] = x[3 * i];
        sol.u[2 * i + 1] = x[3 * i + 1];
        sol.p[i] = x[3 * i + 2];
    }
    sol.trace_top_u.resize(slab.top_trace.size() * 2);
    for (std::size_t i = 0; i < slab.top_trace.size(); ++i) {
        sol.trace_top_u[2 * i] = sol.u[2 * slab.top_trace[i]];
        sol.trace_top_u[2 * i + 1] = sol.u[2 * slab.top_trace[i] + 1];
    }
    return sol;
}

struct CouplingOptions {
    double tol = 1e-6;   // max-norm change of nodal phi
    int max_iters = 5;
    bool allow_nonconverged = true;
    NewtonOptions newton;
    SolverOptions levelset_solver{1e-12, 2000, 60, false};
    PhaseTimers* timers = nullptr;  // shared with the Newton stage
};

struct SlabCoupledSolution {
    SlabFlowSolution flow;
    SlabScalarSolution scalar;
    std::vector<double> phi_slab;  // per slab node, converged
    int coupling_iters = 0;
    bool converged = false;
};

/// Strong flow <-> level-set coupling on one slab: solve flow with frozen phi,
/// re-advect phi with the new velocity, repeat.  Level-set inflow nodes
/// (u . n < 0 on the lateral boundary) are pinned to the incoming trace.
inline SlabCoupledSolution couple_slab(const SpaceTimeSlabMesh& slab, const SpatialMesh& spatial,
                                       const std::vector<double>& u_minus,
                                       const std::vector<double>& phi_minus,
                                       const MaterialPair& mat, const BcMap& bcs,
                                       const CouplingOptions& opts = {})
{
    const int n = slab.node_count();
    std::map<int, double> constraints = ns_constraints(slab, spatial, bcs);

    SlabCoupledSolution out;
    // Start from the incoming traces extended constant in time.
    out.phi_slab.resize(n);
    Eigen::VectorXd guess = Eigen::VectorXd::Zero(3 * n);
    for (int i = 0; i < n; ++i) {
        const int c = slab.column_of[i];
        out.phi_slab[i] = phi_minus[c];
        guess[3 * i] = u_minus[static_cast<std::size_t>(c) * 2];
        guess[3 * i + 1] = u_minus[static_cast<std::size_t>(c) * 2 + 1];
    }

    NewtonOptions newton_opts = opts.newton;
    if (opts.timers && !newton_opts.timers)
        newton_opts.timers = opts.timers;
    // A traction-free boundary already sets the pressure level weakly; the
    // single-node pin is only for fully velocity-constrained problems.
    for (const auto& [tag, bc] : bcs)
        if (bc.kind == VelocityBc::Kind::traction_free)
            newton_opts.pin_pressure_fallback = false;
    double* form = opts.timers ? &opts.timers->formation_seconds : nullptr;
    double* solv = opts.timers ? &opts.timers->solution_seconds : nullptr;

    for (int it = 0; it < opts.max_iters; ++it) {
        ++out.coupling_iters;
        out.flow = newton_solve_slab(slab, spatial, u_minus, out.phi_slab, mat, constraints,
                                     newton_opts, &guess);
        for (int i = 0; i < n; ++i) {
            guess[3 * i] = out.flow.u[2 * i];
            guess[3 * i + 1] = out.flow.u[2 * i + 1];
            guess[3 * i + 2] = out.flow.p[i];
        }
        std::map<int, double> phi_bc;
        for (int i : inflow_nodes(slab, spatial, out.flow.u))
            phi_bc[i] = phi_minus[slab.column_of[i]];
        LevelSetSystem ls = detail::timed(form, [&] {
            return assemble_levelset(slab, spatial, out.flow.u, phi_minus, &phi_bc);
        });
        out.scalar = detail::timed(
            solv, [&] { return solve_slab_levelset(ls, slab, opts.levelset_solver); });
        double delta = 0.0;
        for (int i = 0; i < n; ++i)
            delta = std::max(delta, std::abs(out.scalar.phi[i] - out.phi_slab[i]));
        out.phi_slab = out.scalar.phi;
        if (delta < opts.tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace stmesh

#pragma once

#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>
#include <stdexcept>
#include <string>

namespace stmesh {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct SolverOptions {
    double tol = 1e-10;        // relative residual
    int max_iterations = 2000;
    int restart = 60;
    bool ilu_preconditioner = false;  // default: diagonal
    bool direct = false;              // sparse LU instead of GMRES
};

struct SolveInfo {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Restarted GMRES.  Throws on non-convergence with the final residual in
/// the message.
inline Eigen::VectorXd solve_gmres(const SparseMatrix& a, const Eigen::VectorXd& b,
                                   const SolverOptions& opts = {}, SolveInfo* info = nullptr,
                                   const Eigen::VectorXd* guess = nullptr)
{
    if (a.rows() == 0 || a.rows() != a.cols() || a.rows() != b.size())
        throw solver_error("solve_gmres: empty or mismatched system");

    Eigen::VectorXd x;
    SolveInfo local;
    auto run = [&](auto& solver) {
        solver.setTolerance(opts.tol);
        solver.setMaxIterations(opts.max_iterations);
        solver.set_restart(opts.restart);
        solver.compute(a);
        if (solver.info() != Eigen::Success)
            throw solver_error("solve_gmres: preconditioner setup failed");
        x = guess ? solver.solveWithGuess(b, *guess).eval() : solver.solve(b).eval();
        local.iterations = static_cast<int>(solver.iterations());
        local.residual = solver.error();
        local.converged = solver.info() == Eigen::Success;
    };

    if (opts.direct) {
        Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success)
            throw solver_error("sparse LU factorization failed");
        x = lu.solve(b);
        local.iterations = 1;
        local.residual = b.norm() > 0.0 ? (a * x - b).norm() / b.norm() : (a * x).norm();
        local.converged = std::isfinite(local.residual);
        if (info)
            *info = local;
        if (!local.converged)
            throw solver_error("sparse LU produced a non-finite solution");
        return x;
    }
    if (opts.ilu_preconditioner) {
        Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<double>> solver;
        run(solver);
    } else {
        Eigen::GMRES<SparseMatrix, Eigen::DiagonalPreconditioner<double>> solver;
        run(solver);
    }
    if (info)
        *info = local;
    if (!local.converged)
        throw solver_error("GMRES did not converge: " + std::to_string(local.iterations) +
                           " iterations, residual " + std::to_string(local.residual));
    return x;
}

}  // namespace stmesh

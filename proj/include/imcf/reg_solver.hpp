#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imcf/geometry.hpp"
#include "imcf/weights.hpp"

namespace imcf::solver {

using geometry::Grid;
using geometry::NodeClass;
using geometry::ScalarField;
using geometry::Vec2;

struct SolveConfig {
    double epsilon = 1e-3;
    double delta = 0.05;
    double lambda = 0.9;     // outer ring at r = lambda*delta, 3/4 < lambda < 1
    double newton_tol = 1e-8;
    int max_newton_iters = 40;
    double damping = 1.0;    // first trial step length
    int picard_fallback_iters = 3;
    double linear_tol = 1e-10;
    int linear_max_iters = 20000;
    std::vector<double> continuation_steps;  // decreasing, last == epsilon
    int n = 2;

    void validate() const;
    /// halving ladder 0.5 -> epsilon (or {epsilon} when epsilon >= 0.5)
    static std::vector<double> default_ladder(double epsilon);
};

/// Explicit barriers of the approximating problem:
///   lower(x) = psi_delta(x) - psi_0(1/2) - (r(x)/delta - 1/2)
///   upper(x) = psi_delta(x) + r(x)/r_I
struct Barriers {
    std::function<double(Vec2)> lower;
    std::function<double(Vec2)> upper;
};

Barriers make_barriers(const geometry::DomainSpec& domain, const weights::WeightProfile& profile,
                       double delta, double lambda, double psi_max);

struct SolveReport {
    ScalarField field;
    double residual_linf = 0.0;  // scaled residual e^{-psi} * raw, sup over unknowns
    int newton_iters = 0;
    int bound_violations = 0;
    double bound_constant = 0.0;  // calibrated C of the C0 bounds
    double wall_time_sec = 0.0;
    bool converged = false;
    std::string message;
    std::vector<double> residual_history;
};

/// Raw residual div(flux) - source of the weighted regularized operator on
/// INTERIOR_PDE nodes (NaN elsewhere). `defined` marks nodes with a complete
/// stencil.
struct ResidualField {
    std::vector<double> values;
    std::vector<std::uint8_t> defined;
};

ResidualField assemble_residual(const ScalarField& u, const weights::WeightField& wf, double eps);

/// 9-point sparse Jacobian of the discrete residual, rows over INTERIOR_PDE
/// unknowns. include_source=false keeps only the divergence part (symmetric).
struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr, cols;
    std::vector<double> vals;
    std::vector<double> diag;

    void matvec(const std::vector<double>& x, std::vector<double>& y) const;
};

struct JacobianSystem {
    SparseMatrix mat;
    std::vector<int> unknown_nodes;          // node id per row
    std::vector<int> node_to_unknown;        // -1 where not an unknown
};

JacobianSystem assemble_jacobian(const ScalarField& u, const weights::WeightField& wf, double eps,
                                 bool include_source = true);

struct SolveOptions {
    const ScalarField* initial_guess = nullptr;
    // Dirichlet override for ring nodes that are not at the lambda*delta
    // cutoff (truncation side walls); checked before the barrier datum.
    std::function<std::optional<double>(Vec2)> side_dirichlet;
    // calibrated constant for the C0-bound check; 0 = calibrate from this run
    double bound_constant = 0.0;
};

/// Damped Newton with epsilon-continuation and Picard (frozen-coefficient)
/// fallback for the boundary value problem:  Dirichlet 0 on the E0 side
/// (imposed at the sub-cell interface crossing), barrier datum lower-2 on the
/// outer ring.
SolveReport solve_bvp(const Grid& grid, const geometry::DomainSpec& domain,
                      const geometry::DomainSpec& initial, const weights::WeightField& wf,
                      const SolveConfig& cfg, const SolveOptions& opts = {});

// --- 1D radial reduction -----------------------------------------------------

struct RadialResult {
    std::vector<double> r;
    std::vector<double> u;
    double residual_linf = 0.0;
    int newton_iters = 0;
    bool converged = false;
    std::string message;
};

/// Solves (f^{n-1} u'/sqrt(eps^2+u'^2))'/f^{n-1} = sqrt(eps^2+u'^2) on
/// [r0, r1] with u(r0)=0 and u(r1)=right_value (defaults to the maximal
/// radial branch (n-1) log[f(r1)/f(r0)]).
RadialResult radial_solve(const std::function<double(double)>& f_profile, double r0, double r1,
                          double h, const SolveConfig& cfg,
                          std::optional<double> right_value = std::nullopt);

}  // namespace imcf::solver

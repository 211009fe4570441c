#pragma once

#include <string>
#include <vector>

#include "massflow/equation.hpp"

namespace massflow {

struct SolveOptions {
    double tol = 1e-9;          // residual tolerance
    int max_iter = 50;          // Newton; SLP callers usually raise this
    int max_iter_slp = 200;
    double slp_step_bound = 0.2;  // trust box on intensive variables, per pass
    unsigned seed = 0;            // deterministic tie-breaking
    double tol_T = 1e-6;          // K, network outer-loop temperature tolerance
    double relax = 1.0;           // temperature update relaxation, 0 < relax <= 1
};

enum class SolveStatus { Converged, Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::IterationLimit;
    int iterations = 0;
    double residual_inf = 0.0;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> duals;  // row multipliers on Optimal LP reports
    std::vector<int> basis;     // basic variable per row, reusable as warm start
    bool warm_start_used = false;
    std::string message;

    bool ok() const {
        return status == SolveStatus::Converged || status == SolveStatus::Optimal;
    }
};

/// Square linear solve over the free variables after pinning fixed ones.
/// Throws std::invalid_argument when the system is not linear or not square.
SolveReport solve_linear(const EquationSystem& sys, const SolveOptions& opts = {});

/// Damped Newton (half-step backtracking, analytic Jacobian). Fixed
/// variables are pinned; the system must be square over the free ones.
SolveReport newton_solve(const EquationSystem& sys, const std::vector<double>& x0,
                         const SolveOptions& opts = {});

/// Bounded-variable primal simplex (Bland's rule, two phases) minimizing the
/// system's objective over its equality rows and variable bounds. Pass a
/// previous report's basis to warm start.
SolveReport simplex_lp(const EquationSystem& sys, const SolveOptions& opts = {},
                       const std::vector<int>* warm_basis = nullptr);

/// Successive LP for bilinear objectives/constraints: each pass linearizes
/// every bilinear term at the incumbent and boxes the designated frozen
/// (intensive) factors to ±slp_step_bound·max(|x|,1).
SolveReport slp_optimize(const EquationSystem& sys, const std::vector<double>& x0,
                         const SolveOptions& opts = {});

/// Reduced-cost sign certificate for an Optimal simplex report.
bool check_simplex_certificate(const EquationSystem& sys, const SolveReport& report,
                               double tol = 1e-7);

}  // namespace massflow

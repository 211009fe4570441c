#include "massflow/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace massflow {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::IterationLimit: return "IterationLimit";
    }
    return "?";
}

namespace {

bool is_inf(double v) { return std::abs(v) >= kInf; }

/// Rows that touch at least one free variable; rows over only fixed
/// variables are constants and get checked once, not solved.
std::vector<char> structural_free_rows(const EquationSystem& sys) {
    const auto& vars = sys.variables();
    auto free_var = [&](int v) { return !vars[static_cast<std::size_t>(v)].fixed(); };
    std::vector<char> has_free(sys.num_rows(), 0);
    for (std::size_t i = 0; i < sys.rows().size(); ++i) {
        for (const auto& t : sys.rows()[i].terms) {
            if (free_var(t.var)) has_free[i] = 1;
        }
    }
    for (const auto& b : sys.bilinear()) {
        if (free_var(b.a) || free_var(b.b)) has_free[static_cast<std::size_t>(b.row)] = 1;
    }
    for (std::size_t g = 0; g < sys.general().size(); ++g) {
        const auto& res = sys.general()[g];
        std::size_t row = sys.rows().size() + g;
        for (const auto& t : res.linear) {
            if (free_var(t.var)) has_free[row] = 1;
        }
        for (const auto& e : res.enthalpy) {
            if (free_var(e.f_var) || (e.t_var >= 0 && free_var(e.t_var))) has_free[row] = 1;
        }
    }
    return has_free;
}

std::vector<double> pinned_point(const EquationSystem& sys, const std::vector<double>& x0) {
    std::vector<double> x = x0;
    const auto& vars = sys.variables();
    x.resize(vars.size(), 0.0);
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].fixed()) x[i] = vars[i].lb;
    }
    return x;
}

double masked_norm(const std::vector<double>& r, const std::vector<char>& mask) {
    double m = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (mask[i]) m = std::max(m, std::abs(r[i]));
    }
    return m;
}

}  // namespace

SolveReport solve_linear(const EquationSystem& sys, const SolveOptions& opts) {
    if (!sys.is_linear()) {
        throw std::invalid_argument("solve_linear: system has nonlinear terms");
    }
    SolveReport rep;
    const auto& vars = sys.variables();
    std::vector<int> free_idx;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (!vars[i].fixed()) free_idx.push_back(static_cast<int>(i));
    }
    std::vector<char> keep = structural_free_rows(sys);

    std::vector<double> x(vars.size(), 0.0);
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (vars[i].fixed()) x[i] = vars[i].lb;
    }
    std::vector<double> r = sys.residuals(x);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!keep[i] && std::abs(r[i]) > opts.tol) {
            rep.status = SolveStatus::Infeasible;
            rep.message = "constant row violated: " + sys.rows()[i].node + "/" +
                          sys.rows()[i].tag;
            rep.x = x;
            rep.residual_inf = std::abs(r[i]);
            return rep;
        }
    }
    std::size_t m = 0;
    for (char k : keep) m += k ? 1 : 0;
    if (m != free_idx.size()) {
        throw std::invalid_argument("solve_linear: system not square (" + std::to_string(m) +
                                    " rows, " + std::to_string(free_idx.size()) +
                                    " free variables)");
    }

    Matrix jac = sys.jacobian(x);
    Matrix a(m, m);
    std::vector<double> b(m);
    std::size_t row = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        for (std::size_t j = 0; j < free_idx.size(); ++j) {
            a(row, j) = jac(i, static_cast<std::size_t>(free_idx[j]));
        }
        b[row] = -r[i];
        ++row;
    }
    bool singular = false;
    std::vector<double> d = solve_dense(a, b, &singular, 1e-12);
    if (singular) {
        rep.status = SolveStatus::Infeasible;
        rep.message = "singular linear system";
        rep.x = x;
        return rep;
    }
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
        x[static_cast<std::size_t>(free_idx[j])] = d[j];
    }
    rep.x = x;
    rep.iterations = 1;
    rep.residual_inf = masked_norm(sys.residuals(x), keep);
    rep.status = rep.residual_inf <= opts.tol ? SolveStatus::Converged
                                              : SolveStatus::Infeasible;
    rep.objective = sys.objective_value(x);
    return rep;
}

SolveReport newton_solve(const EquationSystem& sys, const std::vector<double>& x0,
                         const SolveOptions& opts) {
    SolveReport rep;
    const auto& vars = sys.variables();
    std::vector<int> free_idx;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (!vars[i].fixed()) free_idx.push_back(static_cast<int>(i));
    }
    std::vector<char> keep = structural_free_rows(sys);
    std::size_t m = 0;
    for (char k : keep) m += k ? 1 : 0;
    if (m != free_idx.size()) {
        throw std::invalid_argument("newton_solve: system not square (" + std::to_string(m) +
                                    " rows, " + std::to_string(free_idx.size()) +
                                    " free variables)");
    }

    std::vector<double> x = pinned_point(sys, x0);
    std::vector<double> r = sys.residuals(x);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!keep[i] && std::abs(r[i]) > opts.tol) {
            rep.status = SolveStatus::Infeasible;
            rep.message = "constant row violated";
            rep.x = x;
            rep.residual_inf = std::abs(r[i]);
            return rep;
        }
    }

    double rn = masked_norm(r, keep);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (rn <= opts.tol) {
            rep.status = SolveStatus::Converged;
            rep.iterations = it;
            rep.residual_inf = rn;
            rep.x = x;
            rep.objective = sys.objective_value(x);
            return rep;
        }
        Matrix jac = sys.jacobian(x);
        Matrix a(m, m);
        std::vector<double> b(m);
        std::size_t row = 0;
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (!keep[i]) continue;
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                a(row, j) = jac(i, static_cast<std::size_t>(free_idx[j]));
            }
            b[row] = -r[i];
            ++row;
        }
        bool singular = false;
        std::vector<double> d = solve_dense(a, b, &singular, 1e-12);
        if (singular) {
            // Degenerate point (e.g. a uniform starting guess can make two
            // balance rows coincide). Regularize the Jacobian slightly and
            // retry; the backtracking line search below keeps the step safe
            // and the next iterate normally leaves the degenerate manifold.
            double scale = 0.0;
            for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(a(i, i)));
            double lambda = std::max(scale, 1.0) * 1e-8;
            for (int attempt = 0; attempt < 8 && singular; ++attempt, lambda *= 100.0) {
                Matrix damped = a;
                for (std::size_t i = 0; i < m; ++i) damped(i, i) += lambda;
                singular = false;
                d = solve_dense(damped, b, &singular, 1e-14);
            }
            if (singular) {
                rep.status = SolveStatus::Infeasible;
                rep.message = "singular Jacobian at iteration " + std::to_string(it);
                rep.iterations = it;
                rep.residual_inf = rn;
                rep.x = x;
                return rep;
            }
        }
        // Half-step backtracking: accept the first step that reduces the
        // residual norm, or the smallest tried step after 10 halvings.
        double step = 1.0;
        std::vector<double> best_x = x;
        double best_rn = rn;
        std::vector<double> r_trial;
        for (int h = 0; h <= 10; ++h) {
            std::vector<double> xt = x;
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                xt[static_cast<std::size_t>(free_idx[j])] += step * d[j];
            }
            r_trial = sys.residuals(xt);
            double rt = masked_norm(r_trial, keep);
            if (rt < best_rn) {
                best_rn = rt;
                best_x = std::move(xt);
                break;
            }
            if (h == 10) {
                best_rn = rt;
                best_x = std::move(xt);
            }
            step *= 0.5;
        }
        x = std::move(best_x);
        r = sys.residuals(x);
        rn = masked_norm(r, keep);
    }
    rep.status = rn <= opts.tol ? SolveStatus::Converged : SolveStatus::IterationLimit;
    rep.iterations = opts.max_iter;
    rep.residual_inf = rn;
    rep.x = x;
    rep.objective = sys.objective_value(x);
    return rep;
}

namespace {

// ---------------------------------------------------------------------------
// Bounded-variable primal simplex, two phases, Bland's rule. Basis kept as a
// dense LU plus a product-form eta file, refactorized periodically so
// multi-period models solve in well under a second.
// ---------------------------------------------------------------------------
class Simplex {
  public:
    Simplex(const EquationSystem& sys, const SolveOptions& opts) : sys_(sys), opts_(opts) {
        n_ = sys.num_vars();
        m_ = sys.rows().size();
        lb_.resize(n_ + m_);
        ub_.resize(n_ + m_);
        cols_.assign(n_ + m_, {});
        for (std::size_t j = 0; j < n_; ++j) {
            lb_[j] = sys.variables()[j].lb;
            ub_[j] = sys.variables()[j].ub;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            for (const auto& t : sys.rows()[i].terms) {
                cols_[static_cast<std::size_t>(t.var)].push_back(
                    {static_cast<int>(i), t.coef});
            }
            b_.push_back(sys.rows()[i].rhs);
        }
    }

    SolveReport run(const std::vector<int>* warm_basis) {
        SolveReport rep;
        if (m_ == 0) return run_trivial();

        bool warm = false;
        if (warm_basis && warm_basis->size() == m_ && try_warm_start(*warm_basis)) {
            warm = true;
        } else {
            init_cold();
            if (!phase1(rep)) return rep;
        }
        rep.warm_start_used = warm;
        if (!phase2(rep)) return rep;
        if (!etas_.empty() && refactor()) recompute_basics();

        rep.status = SolveStatus::Optimal;
        rep.x.assign(values_.begin(), values_.begin() + static_cast<long>(n_));
        rep.objective = sys_.objective_value(rep.x);
        rep.residual_inf = row_residual(rep.x);
        rep.basis = basis_;
        rep.duals = duals_;
        return rep;
    }

  private:
    enum Status : char { AtLower, AtUpper, Free, Basic };

    struct Entry {
        int row;
        double coef;
    };

    SolveReport run_trivial() {
        SolveReport rep;
        values_.assign(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            double c = cost_of(j);
            if (c > 0.0) values_[j] = lb_[j];
            else if (c < 0.0) values_[j] = ub_[j];
            else values_[j] = is_inf(lb_[j]) ? std::min(ub_[j], 0.0) : lb_[j];
            if (is_inf(values_[j])) {
                rep.status = SolveStatus::Unbounded;
                return rep;
            }
        }
        rep.status = SolveStatus::Optimal;
        rep.x = values_;
        rep.objective = sys_.objective_value(rep.x);
        return rep;
    }

    double cost_of(std::size_t j) const {
        if (j >= n_) return 0.0;
        auto it = sys_.objective().find(static_cast<int>(j));
        return it == sys_.objective().end() ? 0.0 : it->second;
    }

    void column_into(std::size_t j, std::vector<double>& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        if (j < n_) {
            for (const auto& e : cols_[j]) out[static_cast<std::size_t>(e.row)] = e.coef;
        } else {
            out[j - n_] = art_sign_[j - n_];
        }
    }

    void init_cold() {
        status_.assign(n_ + m_, AtLower);
        values_.assign(n_ + m_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            if (!is_inf(lb_[j])) {
                status_[j] = AtLower;
                values_[j] = lb_[j];
            } else if (!is_inf(ub_[j])) {
                status_[j] = AtUpper;
                values_[j] = ub_[j];
            } else {
                status_[j] = Free;
                values_[j] = 0.0;
            }
        }
        art_sign_.assign(m_, 1.0);
        basis_.resize(m_);
        std::vector<double> r = b_;
        for (std::size_t j = 0; j < n_; ++j) {
            for (const auto& e : cols_[j]) r[static_cast<std::size_t>(e.row)] -=
                e.coef * values_[j];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            art_sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
            lb_[n_ + i] = 0.0;
            ub_[n_ + i] = kInf;
            basis_[i] = static_cast<int>(n_ + i);
            status_[n_ + i] = Basic;
            values_[n_ + i] = std::abs(r[i]);
        }
    }

    bool refactor() {
        Matrix bmat(m_, m_);
        std::vector<double> col(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            column_into(static_cast<std::size_t>(basis_[i]), col);
            for (std::size_t k = 0; k < m_; ++k) bmat(k, i) = col[k];
        }
        lu_ = lu_factor(bmat, 1e-12);
        etas_.clear();
        if (!lu_.singular) return true;
        if (!repair_basis(bmat)) return false;
        for (std::size_t i = 0; i < m_; ++i) {
            column_into(static_cast<std::size_t>(basis_[i]), col);
            for (std::size_t k = 0; k < m_; ++k) bmat(k, i) = col[k];
        }
        lu_ = lu_factor(bmat, 1e-12);
        return !lu_.singular;
    }

    /// A stale eta file can let a nearly dependent column into the basis;
    /// the next factorization then finds the basis singular. Recover by
    /// dropping dependent columns to a bound and covering their rows with
    /// artificial columns, instead of declaring the solve lost.
    bool repair_basis(Matrix e) {
        const double tol = 1e-9;
        std::vector<char> row_used(m_, 0);
        std::vector<std::size_t> dependent;
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t piv = m_;
            double best = tol;
            for (std::size_t r = 0; r < m_; ++r) {
                if (!row_used[r] && std::abs(e(r, c)) > best) {
                    best = std::abs(e(r, c));
                    piv = r;
                }
            }
            if (piv == m_) {
                dependent.push_back(c);
                continue;
            }
            row_used[piv] = 1;
            for (std::size_t c2 = c + 1; c2 < m_; ++c2) {
                double f = e(piv, c2) / e(piv, c);
                if (f == 0.0) continue;
                for (std::size_t r = 0; r < m_; ++r) e(r, c2) -= f * e(r, c);
            }
        }
        if (dependent.empty()) return false;
        std::vector<std::size_t> open_rows;
        for (std::size_t r = 0; r < m_; ++r) {
            if (!row_used[r]) open_rows.push_back(r);
        }
        if (open_rows.size() != dependent.size()) return false;
        for (std::size_t k = 0; k < dependent.size(); ++k) {
            std::size_t pos = dependent[k];
            std::size_t out = static_cast<std::size_t>(basis_[pos]);
            if (!is_inf(lb_[out]) &&
                (is_inf(ub_[out]) ||
                 std::abs(values_[out] - lb_[out]) <= std::abs(values_[out] - ub_[out]))) {
                status_[out] = AtLower;
                values_[out] = lb_[out];
            } else if (!is_inf(ub_[out])) {
                status_[out] = AtUpper;
                values_[out] = ub_[out];
            } else {
                status_[out] = Free;  // keeps its current value while nonbasic
            }
            std::size_t art = n_ + open_rows[k];
            basis_[pos] = static_cast<int>(art);
            status_[art] = Basic;
        }
        return true;
    }

    /// x := B^{-1} v via the base LU plus eta-file updates.
    std::vector<double> ftran(std::vector<double> v) const {
        std::vector<double> x = lu_solve(lu_, std::move(v));
        for (const auto& [r, w] : etas_) {
            std::size_t ur = static_cast<std::size_t>(r);
            double t = x[ur] / w[ur];
            for (std::size_t i = 0; i < m_; ++i) x[i] -= w[i] * t;
            x[ur] = t;
        }
        return x;
    }

    /// y := B^{-T} u via the eta file (reverse order) plus the base LU.
    std::vector<double> btran(std::vector<double> u) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            std::size_t r = static_cast<std::size_t>(it->first);
            const std::vector<double>& w = it->second;
            double s = u[r];
            for (std::size_t i = 0; i < m_; ++i) {
                if (i != r) s -= w[i] * u[i];
            }
            u[r] = s / w[r];
        }
        return lu_solve_transposed(lu_, u);
    }

    void recompute_basics() {
        std::vector<double> r = b_;
        for (std::size_t j = 0; j < n_ + m_; ++j) {
            if (status_[j] == Basic || values_[j] == 0.0) continue;
            if (j < n_) {
                for (const auto& e : cols_[j]) {
                    r[static_cast<std::size_t>(e.row)] -= e.coef * values_[j];
                }
            } else {
                r[j - n_] -= art_sign_[j - n_] * values_[j];
            }
        }
        std::vector<double> xb = ftran(std::move(r));
        for (std::size_t i = 0; i < m_; ++i) values_[static_cast<std::size_t>(basis_[i])] = xb[i];
    }

    std::vector<double> solve_duals(const std::vector<double>& c) {
        std::vector<double> cb(m_);
        for (std::size_t i = 0; i < m_; ++i) cb[i] = c[static_cast<std::size_t>(basis_[i])];
        return btran(std::move(cb));
    }

    double reduced_cost(std::size_t j, const std::vector<double>& c,
                        const std::vector<double>& y) const {
        double d = c[j];
        if (j < n_) {
            for (const auto& e : cols_[j]) d -= y[static_cast<std::size_t>(e.row)] * e.coef;
        } else {
            d -= y[j - n_] * art_sign_[j - n_];
        }
        return d;
    }

    // Returns false on iteration cap; rep untouched unless unbounded.
    enum class LoopResult { OptimalStop, Unbounded, Stalled };

    LoopResult iterate(const std::vector<double>& c, bool allow_artificials) {
        const double eps = 1e-9;
        const std::size_t eta_cap = 100;
        int cap = 200 + static_cast<int>(50 * (n_ + m_));
        if (!refactor()) return LoopResult::Stalled;
        recompute_basics();
        // Dantzig pricing for speed; after a long degenerate run, fall back
        // to Bland's smallest-index rule, which cannot cycle.
        int degenerate_run = 0;
        for (int it = 0; it < cap; ++it) {
            if (etas_.size() >= eta_cap) {
                if (!refactor()) return LoopResult::Stalled;
                recompute_basics();
            }
            std::vector<double> y = solve_duals(c);

            bool bland = degenerate_run > 100;
            int enter = -1;
            int dir = 0;
            double best = eps;
            for (std::size_t j = 0; j < n_ + m_; ++j) {
                if (status_[j] == Basic) continue;
                if (lb_[j] == ub_[j]) continue;
                if (j >= n_ && !allow_artificials) continue;
                double d = reduced_cost(j, c, y);
                int cand_dir = 0;
                if ((status_[j] == AtLower || status_[j] == Free) && d < -eps) cand_dir = 1;
                else if ((status_[j] == AtUpper || status_[j] == Free) && d > eps) cand_dir = -1;
                if (cand_dir == 0) continue;
                if (bland) {
                    enter = static_cast<int>(j);
                    dir = cand_dir;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    enter = static_cast<int>(j);
                    dir = cand_dir;
                }
            }
            if (enter < 0) {
                duals_ = y;
                return LoopResult::OptimalStop;
            }

            std::vector<double> a(m_);
            column_into(static_cast<std::size_t>(enter), a);
            std::vector<double> w = ftran(a);

            double theta = kInf;
            int leave_pos = -1;   // position in basis, -1 = own bound flip
            double own_range = ub_[static_cast<std::size_t>(enter)] -
                               lb_[static_cast<std::size_t>(enter)];
            if (!is_inf(own_range)) theta = own_range;
            for (std::size_t i = 0; i < m_; ++i) {
                double delta = -dir * w[i];  // basic change per unit entering move
                std::size_t bj = static_cast<std::size_t>(basis_[i]);
                double t = kInf;
                if (delta < -eps && !is_inf(lb_[bj])) {
                    t = (values_[bj] - lb_[bj]) / (-delta);
                } else if (delta > eps && !is_inf(ub_[bj])) {
                    t = (ub_[bj] - values_[bj]) / delta;
                }
                if (t < theta - eps ||
                    (t < theta + eps && leave_pos >= 0 &&
                     basis_[i] < basis_[static_cast<std::size_t>(leave_pos)])) {
                    theta = std::max(t, 0.0);
                    leave_pos = static_cast<int>(i);
                }
            }
            if (is_inf(theta)) return LoopResult::Unbounded;
            double wmax = 0.0;
            for (double v : w) wmax = std::max(wmax, std::abs(v));
            if (leave_pos >= 0 && etas_.size() >= 10 &&
                std::abs(w[static_cast<std::size_t>(leave_pos)]) <
                    1e-7 * std::max(1.0, wmax)) {
                // Unreliable pivot through a stale eta file: refactor and
                // reprice from a fresh basis.
                if (!refactor()) return LoopResult::Stalled;
                recompute_basics();
                continue;
            }

            // Apply the move.
            degenerate_run = theta > 1e-9 ? 0 : degenerate_run + 1;
            std::size_t ej = static_cast<std::size_t>(enter);
            values_[ej] += dir * theta;
            for (std::size_t i = 0; i < m_; ++i) {
                values_[static_cast<std::size_t>(basis_[i])] += -dir * w[i] * theta;
            }
            if (leave_pos < 0) {
                status_[ej] = (dir > 0) ? AtUpper : AtLower;
                values_[ej] = (dir > 0) ? ub_[ej] : lb_[ej];
            } else {
                std::size_t lj = static_cast<std::size_t>(basis_[static_cast<std::size_t>(
                    leave_pos)]);
                double dl = -dir * w[static_cast<std::size_t>(leave_pos)];
                status_[lj] = dl < 0 ? AtLower : AtUpper;
                values_[lj] = dl < 0 ? lb_[lj] : ub_[lj];
                if (is_inf(values_[lj])) values_[lj] = 0.0;  // free leaving at 0
                basis_[static_cast<std::size_t>(leave_pos)] = enter;
                status_[ej] = Basic;
                etas_.emplace_back(leave_pos, w);
            }
        }
        return LoopResult::Stalled;
    }

    bool phase1(SolveReport& rep) {
        std::vector<double> c(n_ + m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) c[n_ + i] = 1.0;
        LoopResult res = iterate(c, true);
        if (res == LoopResult::Stalled) {
            rep.status = SolveStatus::Infeasible;
            rep.message = "phase-1 stalled";
            return false;
        }
        double infeas = 0.0;
        for (std::size_t i = 0; i < m_; ++i) infeas += values_[n_ + i];
        double scale = 1.0;
        for (double v : b_) scale = std::max(scale, std::abs(v));
        if (infeas > 1e-7 * scale) {
            rep.status = SolveStatus::Infeasible;
            rep.message = "phase-1 infeasibility " + std::to_string(infeas);
            return false;
        }
        // Pin artificials to zero for phase 2; basic ones stay at 0.
        for (std::size_t i = 0; i < m_; ++i) {
            lb_[n_ + i] = 0.0;
            ub_[n_ + i] = 0.0;
            if (status_[n_ + i] != Basic) {
                status_[n_ + i] = AtLower;
                values_[n_ + i] = 0.0;
            }
        }
        return true;
    }

    bool phase2(SolveReport& rep) {
        std::vector<double> c(n_ + m_, 0.0);
        for (const auto& [var, coef] : sys_.objective()) c[static_cast<std::size_t>(var)] = coef;
        LoopResult res = iterate(c, true);
        if (res == LoopResult::Unbounded) {
            rep.status = SolveStatus::Unbounded;
            return false;
        }
        if (res == LoopResult::Stalled) {
            rep.status = SolveStatus::IterationLimit;
            rep.message = "simplex iteration cap";
            return false;
        }
        return true;
    }

    bool try_warm_start(const std::vector<int>& warm) {
        for (int j : warm) {
            if (j < 0 || static_cast<std::size_t>(j) >= n_) return false;
        }
        status_.assign(n_ + m_, AtLower);
        values_.assign(n_ + m_, 0.0);
        art_sign_.assign(m_, 1.0);
        for (std::size_t i = 0; i < m_; ++i) {
            lb_[n_ + i] = 0.0;
            ub_[n_ + i] = 0.0;
        }
        for (std::size_t j = 0; j < n_; ++j) {
            if (!is_inf(lb_[j])) {
                status_[j] = AtLower;
                values_[j] = lb_[j];
            } else if (!is_inf(ub_[j])) {
                status_[j] = AtUpper;
                values_[j] = ub_[j];
            } else {
                status_[j] = Free;
                values_[j] = 0.0;
            }
        }
        basis_ = warm;
        for (int j : warm) status_[static_cast<std::size_t>(j)] = Basic;
        if (!refactor()) return false;
        recompute_basics();
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t bj = static_cast<std::size_t>(basis_[i]);
            if (values_[bj] < lb_[bj] - 1e-9 || values_[bj] > ub_[bj] + 1e-9) return false;
        }
        return true;
    }

    double row_residual(const std::vector<double>& x) const {
        std::vector<double> r = sys_.residuals(x);
        double m = 0.0;
        for (std::size_t i = 0; i < m_; ++i) m = std::max(m, std::abs(r[i]));
        return m;
    }

    const EquationSystem& sys_;
    const SolveOptions& opts_;
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<double> lb_, ub_, b_;
    std::vector<std::vector<Entry>> cols_;
    std::vector<double> art_sign_;
    std::vector<int> basis_;
    std::vector<char> status_;
    std::vector<double> values_;
    std::vector<double> duals_;
    LuFactors lu_;
    std::vector<std::pair<int, std::vector<double>>> etas_;
};

}  // namespace

SolveReport simplex_lp(const EquationSystem& sys, const SolveOptions& opts,
                       const std::vector<int>* warm_basis) {
    if (!sys.is_linear()) {
        throw std::invalid_argument("simplex_lp: system has nonlinear terms");
    }
    Simplex s(sys, opts);
    return s.run(warm_basis);
}

bool check_simplex_certificate(const EquationSystem& sys, const SolveReport& report,
                               double tol) {
    if (report.status != SolveStatus::Optimal) return false;
    if (report.duals.size() != sys.rows().size()) return report.basis.empty();
    std::vector<char> basic(sys.num_vars(), 0);
    for (int j : report.basis) {
        if (j >= 0 && static_cast<std::size_t>(j) < sys.num_vars()) {
            basic[static_cast<std::size_t>(j)] = 1;
        }
    }
    std::vector<double> d(sys.num_vars(), 0.0);
    for (const auto& [var, coef] : sys.objective()) d[static_cast<std::size_t>(var)] = coef;
    for (std::size_t i = 0; i < sys.rows().size(); ++i) {
        for (const auto& t : sys.rows()[i].terms) {
            d[static_cast<std::size_t>(t.var)] -= report.duals[i] * t.coef;
        }
    }
    for (std::size_t j = 0; j < sys.num_vars(); ++j) {
        if (basic[j]) continue;
        const Variable& v = sys.variables()[j];
        if (v.lb == v.ub) continue;
        double xj = report.x[j];
        bool at_lower = !is_inf(v.lb) && std::abs(xj - v.lb) <= 1e-7 * (1.0 + std::abs(v.lb));
        bool at_upper = !is_inf(v.ub) && std::abs(xj - v.ub) <= 1e-7 * (1.0 + std::abs(v.ub));
        if (at_lower && d[j] >= -tol) continue;
        if (at_upper && d[j] <= tol) continue;
        if (std::abs(d[j]) <= tol) continue;  // free or degenerate
        return false;
    }
    return true;
}

SolveReport slp_optimize(const EquationSystem& sys, const std::vector<double>& x0,
                         const SolveOptions& opts) {
    // Variables whose trust-region box shrinks between passes: the frozen
    // (intensive) factor of each bilinear term and every free temperature
    // in a general residual. Flows stay free so mass balances remain
    // LP-feasible at each pass.
    std::vector<char> intensive(sys.num_vars(), 0);
    for (const auto& b : sys.bilinear()) intensive[static_cast<std::size_t>(b.frozen)] = 1;
    for (const auto& g : sys.general()) {
        for (const auto& e : g.enthalpy) {
            if (e.t_var >= 0) intensive[static_cast<std::size_t>(e.t_var)] = 1;
        }
    }

    SolveReport best;
    std::vector<double> x = pinned_point(sys, x0);
    for (std::size_t j = 0; j < sys.num_vars(); ++j) {
        const Variable& v = sys.variables()[j];
        x[j] = std::min(std::max(x[j], v.lb), v.ub);
    }
    double prev_obj = sys.objective_value(x);
    std::vector<int> basis;

    for (int pass = 1; pass <= opts.max_iter_slp; ++pass) {
        EquationSystem lp = sys;
        // Fold nonlinear terms into the rows as first-order expansions at x.
        for (const auto& b : sys.bilinear()) {
            double xa = x[static_cast<std::size_t>(b.a)];
            double xb = x[static_cast<std::size_t>(b.b)];
            lp.row_add(b.row, b.a, b.coef * xb);
            lp.row_add(b.row, b.b, b.coef * xa);
            lp.row_rhs(b.row, lp.rows()[static_cast<std::size_t>(b.row)].rhs +
                                  b.coef * xa * xb);
        }
        for (const auto& g : sys.general()) {
            int row = lp.add_row(g.node, g.tag + ":linearized");
            for (const auto& t : g.linear) lp.row_add(row, t.var, t.coef);
            double rhs = g.rhs;
            for (const auto& e : g.enthalpy) {
                double t = e.t_var >= 0 ? x[static_cast<std::size_t>(e.t_var)] : e.t_value;
                double f = x[static_cast<std::size_t>(e.f_var)];
                double h = e.correlation.value(t);
                lp.row_add(row, e.f_var, e.sign * h);
                if (e.t_var >= 0) {
                    double hp = e.correlation.slope(t);
                    lp.row_add(row, e.t_var, e.sign * f * hp);
                    rhs += e.sign * f * hp * t;
                }
            }
            lp.row_rhs(row, rhs);
        }
        lp.clear_nonlinear();
        for (std::size_t j = 0; j < lp.num_vars(); ++j) {
            if (!intensive[j]) continue;
            Variable& v = lp.variable(static_cast<int>(j));
            if (v.fixed()) continue;
            double step = opts.slp_step_bound * std::max(std::abs(x[j]), 1.0);
            v.lb = std::max(v.lb, x[j] - step);
            v.ub = std::min(v.ub, x[j] + step);
        }

        SolveReport inner = simplex_lp(lp, opts, basis.empty() ? nullptr : &basis);
        if (inner.status != SolveStatus::Optimal) {
            if (pass == 1) {
                best = inner;
                return best;
            }
            best.status = SolveStatus::IterationLimit;
            best.message = "inner LP " + std::string(to_string(inner.status)) + " at pass " +
                           std::to_string(pass);
            best.iterations = pass;
            return best;
        }
        basis = inner.basis;

        double step = 0.0;
        for (std::size_t j = 0; j < sys.num_vars(); ++j) {
            step = std::max(step,
                            std::abs(inner.x[j] - x[j]) / std::max(std::abs(x[j]), 1.0));
        }
        x = inner.x;
        double obj = sys.objective_value(x);
        best.x = x;
        best.objective = obj;
        best.iterations = pass;
        best.basis = basis;
        best.duals = inner.duals;
        best.warm_start_used = inner.warm_start_used;

        std::vector<double> r = sys.residuals(x);
        best.residual_inf = norm_inf(r);
        double conv_tol = std::max(opts.tol, 1e-10);
        if (step < conv_tol ||
            (std::abs(obj - prev_obj) <= conv_tol * (1.0 + std::abs(obj)) &&
             best.residual_inf <= 1e-6)) {
            best.status = SolveStatus::Converged;
            return best;
        }
        prev_obj = obj;
    }
    best.status = SolveStatus::IterationLimit;
    return best;
}

}  // namespace massflow

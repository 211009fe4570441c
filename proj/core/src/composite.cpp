#include "massflow/composite.hpp"

#include <chrono>
#include <cmath>

namespace massflow {

const char* to_string(StageSolver s) {
    switch (s) {
        case StageSolver::Linear: return "linear";
        case StageSolver::Newton: return "newton";
        case StageSolver::Simplex: return "simplex";
        case StageSolver::Slp: return "slp";
    }
    return "?";
}

const char* to_string(PropertyRefresh r) {
    switch (r) {
        case PropertyRefresh::None: return "none";
        case PropertyRefresh::Local: return "local";
        case PropertyRefresh::Rigorous: return "rigorous";
    }
    return "?";
}

namespace {

using WarmMap = std::map<std::string, double>;

std::vector<double> warm_point(const EquationSystem& sys, const WarmMap& warm,
                               std::vector<std::string>* inherited) {
    std::vector<double> x0 = sys.initial_point();
    for (std::size_t i = 0; i < sys.num_vars(); ++i) {
        const Variable& v = sys.variables()[i];
        if (v.fixed()) continue;
        auto it = warm.find(v.name);
        if (it != warm.end()) {
            x0[i] = it->second;
            if (inherited) inherited->push_back(v.name);
        }
    }
    return x0;
}

void absorb(const EquationSystem& sys, const std::vector<double>& x, WarmMap& warm) {
    for (std::size_t i = 0; i < sys.num_vars(); ++i) {
        warm[sys.variables()[i].name] = x[i];
    }
}

SolveReport run_solver(StageSolver solver, const EquationSystem& sys,
                       const std::vector<double>& x0, const SolveOptions& opts,
                       bool warm_used) {
    SolveReport rep;
    switch (solver) {
        case StageSolver::Linear: rep = solve_linear(sys, opts); break;
        case StageSolver::Newton: rep = newton_solve(sys, x0, opts); break;
        case StageSolver::Simplex: rep = simplex_lp(sys, opts); break;
        case StageSolver::Slp: rep = slp_optimize(sys, x0, opts); break;
    }
    if (solver == StageSolver::Newton || solver == StageSolver::Slp) {
        rep.warm_start_used = warm_used;
    }
    return rep;
}

/// Stream temperature at period 0 from a solution, falling back to the
/// record reference when the stage materialized no temperature variable.
double stream_temperature(const EquationSystem& sys, const std::vector<double>& x,
                          const std::string& stream, double fallback) {
    int tv = sys.find_variable(var_temp(stream, 0));
    return tv < 0 ? fallback : x[static_cast<std::size_t>(tv)];
}

AbstractionLevel clamp_fixed(AbstractionLevel l) {
    return l == AbstractionLevel::MassEnergyLocalH ? AbstractionLevel::MassEnergyFixedH : l;
}

AbstractionPlan relax_to_fixed(const AbstractionPlan& plan) {
    AbstractionPlan p = plan;
    p.default_level = clamp_fixed(p.default_level);
    for (auto& [key, val] : p.overrides) {
        (void)key;
        val.first = clamp_fixed(val.first);
    }
    return p;
}

}  // namespace

CascadeReport solve_cascade(const Topology& t, const Scenario& scenario,
                            const CascadeSchedule& schedule, const SolveOptions& opts) {
    auto t_start = std::chrono::steady_clock::now();
    CascadeReport rep;
    PropertyTable props = t.properties;
    WarmMap warm;

    for (std::size_t si = 0; si < schedule.stages.size(); ++si) {
        const CascadeStage& stage = schedule.stages[si];
        std::vector<std::string> inherited;
        SolveReport stage_rep;
        EquationSystem sys;
        int outer = 0;
        const int outer_cap = stage.refresh == PropertyRefresh::Rigorous ? 50 : 1;

        while (outer < outer_cap) {
            ++outer;
            InstantiateOptions io;
            io.property_override = &props;
            sys = instantiate(t, stage.plan, scenario, io);

            std::vector<std::string> pass_inherited;
            std::vector<double> x0 = warm_point(sys, warm, &pass_inherited);
            if (outer == 1) inherited = std::move(pass_inherited);

            stage_rep = run_solver(stage.solver, sys, x0, opts, !warm.empty());
            if (!stage_rep.ok()) break;
            absorb(sys, stage_rep.x, warm);

            if (stage.refresh != PropertyRefresh::Rigorous) break;
            double max_dh = 0.0;
            for (const auto& r : props.records()) {
                double tnow = stream_temperature(sys, stage_rep.x, r.stream, r.t0);
                StreamPropertyRecord updated = r;
                if (r.correlation) {
                    updated = refresh_reference(r, tnow);
                } else if (tnow != r.t0) {
                    updated.h0 += updated.cp * (tnow - updated.t0);
                    updated.t0 = tnow;
                }
                max_dh = std::max(max_dh, std::abs(updated.h0 - r.h0));
                props.upsert(updated);
            }
            if (max_dh <= 1e-6) break;
            if (outer == outer_cap) {
                rep.message = "rigorous refresh did not settle within " +
                              std::to_string(outer_cap) + " passes";
            }
        }

        if (stage_rep.ok() && stage.include_hen) {
            HenReport hen = hen_solve(t, scenario, opts, &props);
            if (!hen.ok()) {
                rep.message = "stage " + std::to_string(si) + " network solve: " + hen.message;
            } else {
                props = hen.refreshed;
                for (int p = 0; p < scenario.periods; ++p) {
                    for (const auto& [sid, temp] : hen.temperatures) {
                        warm[var_temp(sid, p)] = temp;
                    }
                    for (const auto& [nid, q] : hen.duties) {
                        const NodeDef* n = t.find_node(nid);
                        if (n && n->kind == NodeKind::HeatExchanger) continue;
                        warm[var_duty(nid, p)] = q;
                    }
                }
            }
        }

        rep.stages.push_back(stage_rep);
        rep.inherited.push_back(inherited);
        rep.outer_iterations.push_back(outer);
        rep.objective_trace.push_back(stage_rep.objective);
        rep.tables.push_back(build_stream_table(t, sys, stage_rep.x, scenario.periods));
        if (!stage_rep.ok()) {
            if (rep.message.empty()) {
                rep.message = "stage " + std::to_string(si) + " " +
                              std::string(to_string(stage_rep.status)) +
                              (stage_rep.message.empty() ? "" : ": " + stage_rep.message);
            }
            break;
        }
    }
    rep.final_properties = props;
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

CascadeReport optimize_multiperiod(const Topology& t, const Scenario& scenario,
                                   const AbstractionPlan& plan, const SolveOptions& opts) {
    auto t_start = std::chrono::steady_clock::now();
    CascadeReport rep;
    EquationSystem sys = instantiate(t, plan, scenario);
    TermCountReport counts = sys.term_counts();

    SolveReport final_rep;
    WarmMap warm;
    if (counts.bilinear_terms == 0 && counts.general_residuals == 0) {
        final_rep = simplex_lp(sys, opts);
        rep.inherited.push_back({});
    } else {
        AbstractionPlan relaxed = relax_to_fixed(plan);
        EquationSystem sys0 = instantiate(t, relaxed, scenario);
        if (sys0.is_linear()) {
            SolveReport lp = simplex_lp(sys0, opts);
            if (lp.ok()) {
                absorb(sys0, lp.x, warm);
                rep.stages.push_back(lp);
                rep.objective_trace.push_back(lp.objective);
                rep.tables.push_back(build_stream_table(t, sys0, lp.x, scenario.periods));
                rep.outer_iterations.push_back(1);
                rep.inherited.push_back({});
            }
        }
        std::vector<std::string> inherited;
        std::vector<double> x0 = warm_point(sys, warm, &inherited);
        final_rep = slp_optimize(sys, x0, opts);
        final_rep.warm_start_used = !warm.empty();
        rep.inherited.push_back(std::move(inherited));
    }

    rep.stages.push_back(final_rep);
    rep.objective_trace.push_back(final_rep.objective);
    rep.outer_iterations.push_back(1);
    rep.tables.push_back(build_stream_table(t, sys, final_rep.x, scenario.periods));
    if (!final_rep.ok()) {
        rep.message = std::string(to_string(final_rep.status)) +
                      (final_rep.message.empty() ? "" : ": " + final_rep.message);
    }

    rep.objective_by_period.assign(static_cast<std::size_t>(scenario.periods), 0.0);
    if (final_rep.ok()) {
        for (const auto& [var, coef] : sys.objective()) {
            int p = sys.variables()[static_cast<std::size_t>(var)].period;
            rep.objective_by_period[static_cast<std::size_t>(p)] +=
                coef * final_rep.x[static_cast<std::size_t>(var)];
        }
    }
    rep.final_properties = t.properties;
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

namespace {

/// Price a coarse solution under the finest plan: pin its extensive/mixing
/// variables by name, let the finest energy rows determine duties and free
/// temperatures, and evaluate the finest objective.
double full_cost_of(const Topology& t, const Scenario& scenario, const AbstractionPlan& finest,
                    const EquationSystem& coarse_sys, const std::vector<double>& coarse_x,
                    const SolveOptions& opts, bool* ok) {
    EquationSystem sys = instantiate(t, finest, scenario);
    WarmMap coarse;
    absorb(coarse_sys, coarse_x, coarse);
    for (std::size_t i = 0; i < sys.num_vars(); ++i) {
        Variable& v = sys.variable(static_cast<int>(i));
        auto it = coarse.find(v.name);
        if (it == coarse.end()) continue;
        switch (v.role) {
            case VarRole::TotalFlow:
            case VarRole::ComponentFlow:
            case VarRole::Fraction:
            case VarRole::SplitRatio:
            case VarRole::Inventory:
                v.lb = v.ub = it->second;
                break;
            default:
                break;
        }
    }
    SolveReport rep = sys.is_linear() ? solve_linear(sys, opts)
                                      : newton_solve(sys, sys.initial_point(), opts);
    if (ok) *ok = rep.ok();
    return rep.objective;
}

}  // namespace

std::vector<CompareRow> compare_optima(const Topology& t, const Scenario& scenario,
                                       const std::vector<AbstractionPlan>& plans,
                                       const SolveOptions& opts) {
    std::vector<CompareRow> rows;
    if (plans.empty()) return rows;
    const AbstractionPlan& finest = plans.back();

    for (const auto& plan : plans) {
        CompareRow row;
        row.label = std::string(to_string(plan.default_level)) + "/" +
                    to_string(plan.default_paradigm);
        EquationSystem sys = instantiate(t, plan, scenario);
        SolveReport rep;
        if (sys.is_linear()) {
            rep = simplex_lp(sys, opts);
        } else {
            rep = slp_optimize(sys, sys.initial_point(), opts);
        }
        row.status = rep.status;
        if (rep.ok()) {
            row.objective = rep.objective;
            bool priced = false;
            row.full_cost = full_cost_of(t, scenario, finest, sys, rep.x, opts, &priced);
            if (!priced) row.full_cost = rep.objective;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace massflow

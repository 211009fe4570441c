#pragma once

#include <map>
#include <string>
#include <vector>

#include "massflow/hen.hpp"
#include "massflow/instantiate.hpp"
#include "massflow/plan.hpp"
#include "massflow/report.hpp"
#include "massflow/solvers.hpp"
#include "massflow/topology.hpp"

namespace massflow {

enum class StageSolver { Linear, Newton, Simplex, Slp };
enum class PropertyRefresh { None, Local, Rigorous };

const char* to_string(StageSolver s);
const char* to_string(PropertyRefresh r);

struct CascadeStage {
    AbstractionPlan plan;
    StageSolver solver = StageSolver::Linear;
    bool include_hen = false;
    PropertyRefresh refresh = PropertyRefresh::None;
};

struct CascadeSchedule {
    std::vector<CascadeStage> stages;
};

struct CascadeReport {
    std::vector<SolveReport> stages;
    std::vector<StreamTable> tables;                 // one per stage
    std::vector<std::vector<std::string>> inherited;  // warm-started vars per stage
    std::vector<int> outer_iterations;               // rigorous refresh loops per stage
    std::vector<double> objective_trace;
    std::vector<double> objective_by_period;  // filled by optimize_multiperiod
    PropertyTable final_properties;
    double wall_seconds = 0.0;
    std::string message;

    bool ok() const {
        return !stages.empty() && message.empty() && stages.back().ok();
    }
};

/// Run the stages in order; each stage's converged values warm-start every
/// variable of the next stage that shares its name. A rigorous-refresh stage
/// repeats with re-anchored stream references until the largest reference
/// enthalpy move is below 1e-6 kJ/kg.
CascadeReport solve_cascade(const Topology& t, const Scenario& scenario,
                            const CascadeSchedule& schedule, const SolveOptions& opts = {});

/// One equation system across the whole horizon; solved as an LP when the
/// instantiation has no bilinear terms, otherwise by successive LP warm
/// started from the fixed-enthalpy relaxation.
CascadeReport optimize_multiperiod(const Topology& t, const Scenario& scenario,
                                   const AbstractionPlan& plan, const SolveOptions& opts = {});

struct CompareRow {
    std::string label;
    double objective = 0.0;  // optimum under this plan
    double full_cost = 0.0;  // this plan's solution priced under the finest plan
    SolveStatus status = SolveStatus::IterationLimit;
};

/// Optimize under each plan (the last one is the finest) and price every
/// solution under the finest plan's objective.
std::vector<CompareRow> compare_optima(const Topology& t, const Scenario& scenario,
                                       const std::vector<AbstractionPlan>& plans,
                                       const SolveOptions& opts = {});

}  // namespace massflow

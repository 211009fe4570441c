#pragma once

#include <map>
#include <string>
#include <vector>

#include "massflow/plan.hpp"
#include "massflow/properties.hpp"
#include "massflow/solvers.hpp"
#include "massflow/topology.hpp"

namespace massflow {

struct ExchangerState {
    std::string node;
    double phi = 0.0;     // 1/K
    double q = 0.0;       // kW
    double th_in = 0.0;   // K
    double th_out = 0.0;  // K
    double tc_in = 0.0;   // K
    double tc_out = 0.0;  // K
};

struct HenIteration {
    int iter = 0;
    double max_dt = 0.0;                   // K, worst temperature move
    std::map<std::string, double> duties;  // kW per exchanger
};

struct HenReport {
    SolveStatus status = SolveStatus::IterationLimit;
    int iterations = 0;
    std::string message;
    std::map<std::string, double> flows;         // kg/s per stream
    std::map<std::string, double> temperatures;  // K per stream with a record
    std::map<std::string, double> duties;        // kW, exchangers and heaters
    std::vector<ExchangerState> exchangers;      // declaration order
    std::vector<HenIteration> trace;
    PropertyTable refreshed;  // stream references at the converged state

    bool ok() const { return status == SolveStatus::Converged; }
};

/// Counter-current effectiveness from NTU and capacity ratio Cr = Cmin/Cmax.
double effectiveness_counter_current(double ntu, double cr);

/// Duty ratio: Q = phi * Q_base * (Th_in - Tc_in). Normalized so base flows
/// reproduce Q_base exactly. Throws std::invalid_argument on nonpositive
/// flow or Cp.
double compute_phi(const HeatExchangerParams& params, double f_hot, double f_cold,
                   double cp_hot, double cp_cold);

/// Latent duty carried by a stream crossing a phase boundary. Throws
/// std::invalid_argument when the record has no Hvap.
double phase_change_duty(const StreamPropertyRecord& rec, double f);

/// Iterative network solve: flows from the mass balance, duty ratios from
/// flows, linear temperature re-solve, reference refresh, repeat until the
/// worst temperature move is below opts.tol_T.
/// props_override substitutes the topology's property table (cascade stages
/// pass their refreshed references).
HenReport hen_solve(const Topology& t, const Scenario& scenario, const SolveOptions& opts = {},
                    const PropertyTable* props_override = nullptr);

}  // namespace massflow

#pragma once

#include <stdexcept>
#include <string>

#include "massflow/equation.hpp"
#include "massflow/plan.hpp"
#include "massflow/topology.hpp"

namespace massflow {

class InstantiationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct InstantiateOptions {
    /// Emit energy balances against the cubic correlations instead of the
    /// locally linearized enthalpy (used by the one-shot reference solves).
    bool rigorous_energy = false;
    /// Property table to read instead of the topology's own (refresh loops).
    const PropertyTable* property_override = nullptr;
    /// Skip the cost objective even when prices are present.
    bool no_objective = false;
};

/// Variable naming scheme; warm starts across plans match on these names.
std::string var_total(const std::string& stream, int period);
std::string var_comp(const std::string& stream, const std::string& comp, int period);
std::string var_frac(const std::string& stream, const std::string& comp, int period);
std::string var_temp(const std::string& stream, int period);
std::string var_duty(const std::string& node, int period);
std::string var_duty_side(const std::string& node, const std::string& side, int period);
std::string var_ratio(const std::string& node, const std::string& outlet, int period);
std::string var_inventory(const std::string& node, int period);
std::string var_inventory_comp(const std::string& node, const std::string& comp, int period);
std::string var_reactor_temp(const std::string& node, int period);

/// Build the full multi-period equation system for one topology under one
/// abstraction plan. Throws InstantiationError on contract violations
/// (invalid plan reference, fractions-based reactor, missing property
/// records for energy rows).
EquationSystem instantiate(const Topology& t, const AbstractionPlan& plan,
                           const Scenario& scenario, const InstantiateOptions& opts = {});

TermCountReport count_nonlinearities(const EquationSystem& sys);

}  // namespace massflow

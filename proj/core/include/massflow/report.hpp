#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "massflow/equation.hpp"
#include "massflow/topology.hpp"

namespace massflow {

struct StreamRow {
    std::string stream;
    int period = 0;
    double total = 0.0;
    std::map<std::string, double> component;  // kg/s, when materialized
    std::map<std::string, double> fraction;   // when materialized
    std::optional<double> temperature;        // K
};

struct DutyRow {
    std::string node;
    std::string side;  // "" / "hot" / "cold"
    int period = 0;
    double duty = 0.0;  // kW
};

struct StreamTable {
    std::vector<StreamRow> streams;  // declaration order, period-major
    std::vector<DutyRow> duties;
};

/// Extract the per-period stream table from a solution vector. Streams come
/// out in topology declaration order for deterministic output.
StreamTable build_stream_table(const Topology& t, const EquationSystem& sys,
                               const std::vector<double>& x, int periods);

/// Node-wise conservation audit over a solution; returns the worst relative
/// mass-closure violation (Source/Sink/Inventory nodes excluded).
double mass_closure_error(const Topology& t, const EquationSystem& sys,
                          const std::vector<double>& x, int periods);

}  // namespace massflow

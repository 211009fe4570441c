#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace massflow {

enum class Paradigm { FractionsBased, ComponentFlows };
enum class AbstractionLevel { MassOnly, MassEnergyFixedH, MassEnergyLocalH };

const char* to_string(Paradigm p);
const char* to_string(AbstractionLevel l);
std::optional<Paradigm> paradigm_from_string(const std::string& s);
std::optional<AbstractionLevel> level_from_string(const std::string& s);

/// Per-node, per-period choice of abstraction level and stream paradigm.
struct AbstractionPlan {
    AbstractionLevel default_level = AbstractionLevel::MassOnly;
    Paradigm default_paradigm = Paradigm::ComponentFlows;
    // (node id, period) -> override; period -1 applies to all periods.
    std::map<std::pair<std::string, int>, std::pair<AbstractionLevel, Paradigm>> overrides;
    // Streams whose fractions must be materialized in the output even when
    // no equation needs them.
    std::vector<std::string> report_fractions;
    // node id -> first period at which the node reverts to its own kind;
    // earlier periods emit the node's gain model instead.
    std::map<std::string, int> data_driven_until;

    AbstractionLevel level_for(const std::string& node, int period) const;
    Paradigm paradigm_for(const std::string& node, int period) const;
    bool data_driven_at(const std::string& node, int period) const;

    static AbstractionPlan uniform(AbstractionLevel level,
                                   Paradigm paradigm = Paradigm::ComponentFlows) {
        AbstractionPlan p;
        p.default_level = level;
        p.default_paradigm = paradigm;
        return p;
    }
};

/// Horizon and piecewise-constant prices. dt in hours so duty [kW] times
/// dt prices directly against a per-kWh tariff.
struct Scenario {
    int periods = 1;
    double dt_hours = 1.0;
    std::vector<double> electricity_price;  // currency/kWh, one entry or one per period

    double electricity_price_at(int period) const;
};

}  // namespace massflow

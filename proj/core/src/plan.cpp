#include "massflow/plan.hpp"

namespace massflow {

const char* to_string(Paradigm p) {
    return p == Paradigm::FractionsBased ? "fractions" : "flows";
}

const char* to_string(AbstractionLevel l) {
    switch (l) {
        case AbstractionLevel::MassOnly: return "mass";
        case AbstractionLevel::MassEnergyFixedH: return "energy-fixed";
        case AbstractionLevel::MassEnergyLocalH: return "energy-local";
    }
    return "?";
}

std::optional<Paradigm> paradigm_from_string(const std::string& s) {
    if (s == "fractions") return Paradigm::FractionsBased;
    if (s == "flows") return Paradigm::ComponentFlows;
    return std::nullopt;
}

std::optional<AbstractionLevel> level_from_string(const std::string& s) {
    if (s == "mass") return AbstractionLevel::MassOnly;
    if (s == "energy-fixed") return AbstractionLevel::MassEnergyFixedH;
    if (s == "energy-local") return AbstractionLevel::MassEnergyLocalH;
    return std::nullopt;
}

AbstractionLevel AbstractionPlan::level_for(const std::string& node, int period) const {
    auto it = overrides.find({node, period});
    if (it != overrides.end()) return it->second.first;
    it = overrides.find({node, -1});
    if (it != overrides.end()) return it->second.first;
    return default_level;
}

Paradigm AbstractionPlan::paradigm_for(const std::string& node, int period) const {
    auto it = overrides.find({node, period});
    if (it != overrides.end()) return it->second.second;
    it = overrides.find({node, -1});
    if (it != overrides.end()) return it->second.second;
    return default_paradigm;
}

bool AbstractionPlan::data_driven_at(const std::string& node, int period) const {
    auto it = data_driven_until.find(node);
    return it != data_driven_until.end() && period < it->second;
}

double Scenario::electricity_price_at(int period) const {
    if (electricity_price.empty()) return 0.0;
    if (period < 0) period = 0;
    if (period >= static_cast<int>(electricity_price.size())) {
        return electricity_price.back();
    }
    return electricity_price[static_cast<std::size_t>(period)];
}

}  // namespace massflow

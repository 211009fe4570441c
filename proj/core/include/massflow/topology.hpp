#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "massflow/properties.hpp"

namespace massflow {

inline constexpr const char* kBoundary = "BOUNDARY";

struct Component {
    std::string id;
    std::string description;
};

enum class NodeKind {
    Mixer,
    Splitter,
    ComponentSeparator,
    LinearReactor,
    HeatExchanger,
    HeaterCooler,
    Source,
    Sink,
    Inventory,
    DataDrivenLinear,
};

const char* to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(const std::string& s);

struct SplitterParams {
    // Empty means the split ratios are decision variables.
    std::vector<double> fixed_fractions;
};

struct SeparatorParams {
    // alpha[outlet][component]: share of component routed to that outlet.
    // Indexed in the node's outlet order and the topology's component order.
    std::vector<std::vector<double>> alpha;
};

/// One linear relation over a reactor's inlet/outlet component flows:
///   sum(out_coef_j * F_out_j) + sum(in_coef_j * F_in_j)
///   + feed_coef * F_feed + feed_t_coef * F_feed * T + constant = 0
/// The F_feed*T product is the reactor's only admissible bilinear entry;
/// with a fixed reactor temperature it collapses into feed_coef.
struct ReactorRow {
    std::map<std::string, double> out_coef;
    std::map<std::string, double> in_coef;
    double feed_coef = 0.0;
    double feed_t_coef = 0.0;
    double constant = 0.0;
};

struct ReactorParams {
    std::map<std::string, double> a;  // a_j on inlet mass fractions
    double a_y = -1.0;                // on key-product exit mass fraction
    double a_t = 0.0;                 // on reactor temperature
    std::string key_product;
    bool fixed_temperature = true;
    double t_rct = 0.0;          // K, reactor temperature (value when fixed)
    double q_rct = 0.0;          // kJ per kg of feed, heat released
    std::vector<ReactorRow> stoich_rows;
};

struct HeatExchangerParams {
    double q_base = 0.0;       // kW
    double th_in_base = 0.0;   // K
    double tc_in_base = 0.0;   // K
    double f_hot_base = 0.0;   // kg/s
    double f_cold_base = 0.0;  // kg/s
    double ua = 0.0;           // kW/K
};

struct HeaterCoolerParams {
    std::optional<double> duty;  // kW; fixed when set
    double duty_min = 0.0;
    double duty_max = 0.0;
    bool electric = false;       // duty priced with the period electricity tariff
    int phase_change = 0;        // +1 vaporize, -1 condense, 0 none
};

struct SourceParams {
    std::vector<double> price;       // currency/kg, one entry or one per period
    std::optional<double> flow;      // kg/s, fixed when set
    double flow_min = 0.0;
    double flow_max = 0.0;
    std::map<std::string, double> composition;  // mass fractions
};

struct SinkParams {
    std::vector<double> price;
    std::optional<double> flow;
    double flow_min = 0.0;
    double flow_max = 0.0;
};

struct InventoryParams {
    double capacity = 0.0;  // kg
    double initial = 0.0;   // kg
    // Mass fractions of the initial holdup; may be omitted when the
    // topology has a single component or the initial holdup is zero.
    std::map<std::string, double> composition;
};

struct DataDrivenParams {
    // gain[outlet component][inlet component]; bias per outlet component [kg/s]
    std::map<std::string, std::map<std::string, double>> gain;
    std::map<std::string, double> bias;
};

struct NodeDef {
    std::string id;
    NodeKind kind = NodeKind::Mixer;
    std::vector<std::string> inlets;
    std::vector<std::string> outlets;
    // Net duty spec applicable to any balance-carrying node: unset = free.
    std::optional<double> duty;

    SplitterParams splitter;
    SeparatorParams separator;
    ReactorParams reactor;
    HeatExchangerParams exchanger;
    HeaterCoolerParams heater;
    SourceParams source;
    SinkParams sink;
    InventoryParams inventory;
    DataDrivenParams data_driven;
};

struct StreamDef {
    std::string id;
    std::string source;  // node id or BOUNDARY
    std::string sink;    // node id or BOUNDARY
    bool tear = false;   // reserved; unused by the simultaneous solvers
    bool fixed_temperature = false;
    std::optional<double> flow_min;  // kg/s bound on the total stream flow
    std::optional<double> flow_max;
};

struct Diagnostic {
    std::string rule;
    std::string subject;  // node or stream id ("" when document-level)
    std::string message;
    int line = 0;
};

std::string format_diagnostics(const std::vector<Diagnostic>& diags);

/// Immutable plant graph. Every model incarnation is instantiated from one
/// of these; construct via parse or the builder-style aggregate init, then
/// validate before use.
struct Topology {
    std::vector<Component> components;
    std::vector<NodeDef> nodes;
    std::vector<StreamDef> streams;
    PropertyTable properties;

    const NodeDef* find_node(const std::string& id) const;
    const StreamDef* find_stream(const std::string& id) const;
    int component_index(const std::string& id) const;  // -1 when absent

    /// The node producing the stream, or nullptr for boundary feeds.
    const NodeDef* producer(const std::string& stream_id) const;
    const NodeDef* consumer(const std::string& stream_id) const;
};

/// Full invariant check; empty result means the topology is well formed.
/// Total on any parser output, never throws.
std::vector<Diagnostic> validate(const Topology& t);

}  // namespace massflow

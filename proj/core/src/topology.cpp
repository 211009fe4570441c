#include "massflow/topology.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace massflow {

const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Mixer: return "Mixer";
        case NodeKind::Splitter: return "Splitter";
        case NodeKind::ComponentSeparator: return "ComponentSeparator";
        case NodeKind::LinearReactor: return "LinearReactor";
        case NodeKind::HeatExchanger: return "HeatExchanger";
        case NodeKind::HeaterCooler: return "HeaterCooler";
        case NodeKind::Source: return "Source";
        case NodeKind::Sink: return "Sink";
        case NodeKind::Inventory: return "Inventory";
        case NodeKind::DataDrivenLinear: return "DataDrivenLinear";
    }
    return "?";
}

std::optional<NodeKind> node_kind_from_string(const std::string& s) {
    static const std::map<std::string, NodeKind> table = {
        {"Mixer", NodeKind::Mixer},
        {"Splitter", NodeKind::Splitter},
        {"ComponentSeparator", NodeKind::ComponentSeparator},
        {"LinearReactor", NodeKind::LinearReactor},
        {"HeatExchanger", NodeKind::HeatExchanger},
        {"HeaterCooler", NodeKind::HeaterCooler},
        {"Source", NodeKind::Source},
        {"Sink", NodeKind::Sink},
        {"Inventory", NodeKind::Inventory},
        {"DataDrivenLinear", NodeKind::DataDrivenLinear},
    };
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
    std::ostringstream out;
    for (const auto& d : diags) {
        out << d.rule;
        if (!d.subject.empty()) out << " [" << d.subject << "]";
        if (d.line > 0) out << " (line " << d.line << ")";
        out << ": " << d.message << "\n";
    }
    return out.str();
}

const NodeDef* Topology::find_node(const std::string& id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

const StreamDef* Topology::find_stream(const std::string& id) const {
    for (const auto& s : streams) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

int Topology::component_index(const std::string& id) const {
    for (std::size_t j = 0; j < components.size(); ++j) {
        if (components[j].id == id) return static_cast<int>(j);
    }
    return -1;
}

const NodeDef* Topology::producer(const std::string& stream_id) const {
    for (const auto& n : nodes) {
        for (const auto& s : n.outlets) {
            if (s == stream_id) return &n;
        }
    }
    return nullptr;
}

const NodeDef* Topology::consumer(const std::string& stream_id) const {
    for (const auto& n : nodes) {
        for (const auto& s : n.inlets) {
            if (s == stream_id) return &n;
        }
    }
    return nullptr;
}

namespace {

struct ArityRule {
    int min_in, max_in, min_out, max_out;  // -1 = unbounded
};

ArityRule arity_for(NodeKind kind) {
    switch (kind) {
        case NodeKind::Mixer: return {1, -1, 1, 1};
        case NodeKind::Splitter: return {1, 1, 1, -1};
        case NodeKind::ComponentSeparator: return {1, 1, 2, -1};
        case NodeKind::LinearReactor: return {1, 1, 1, 1};
        case NodeKind::HeatExchanger: return {2, 2, 2, 2};
        case NodeKind::HeaterCooler: return {1, 1, 1, 1};
        case NodeKind::Source: return {0, 0, 1, 1};
        case NodeKind::Sink: return {1, 1, 0, 0};
        case NodeKind::Inventory: return {1, 1, 1, 1};
        case NodeKind::DataDrivenLinear: return {1, -1, 1, -1};
    }
    return {0, -1, 0, -1};
}

std::string arity_rule_name(NodeKind kind) {
    std::string k = to_string(kind);
    for (auto& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (kind == NodeKind::ComponentSeparator) k = "separator";
    if (kind == NodeKind::LinearReactor) k = "reactor";
    if (kind == NodeKind::HeatExchanger) k = "exchanger";
    if (kind == NodeKind::HeaterCooler) k = "heatercooler";
    if (kind == NodeKind::DataDrivenLinear) k = "datadriven";
    return k + "-arity";
}

void check_node_params(const Topology& t, const NodeDef& n, std::vector<Diagnostic>& out) {
    auto add = [&](const std::string& rule, const std::string& msg) {
        out.push_back({rule, n.id, msg, 0});
    };
    const double kSumTol = 1e-9;
    switch (n.kind) {
        case NodeKind::Splitter: {
            const auto& f = n.splitter.fixed_fractions;
            if (!f.empty()) {
                if (f.size() != n.outlets.size()) {
                    add("splitter-fractions", "fixed fraction count does not match outlet count");
                    break;
                }
                double sum = 0.0;
                for (double a : f) {
                    if (a < 0.0) add("splitter-fractions", "negative split fraction");
                    sum += a;
                }
                if (std::abs(sum - 1.0) > kSumTol) {
                    add("splitter-fractions", "split fractions do not sum to 1");
                }
            }
            break;
        }
        case NodeKind::ComponentSeparator: {
            const auto& alpha = n.separator.alpha;
            if (alpha.size() != n.outlets.size()) {
                add("separator-alpha", "alpha rows do not match outlet count");
                break;
            }
            for (const auto& row : alpha) {
                if (row.size() != t.components.size()) {
                    add("separator-alpha", "alpha columns do not match component count");
                    return;
                }
            }
            for (std::size_t j = 0; j < t.components.size(); ++j) {
                double sum = 0.0;
                for (std::size_t k = 0; k < alpha.size(); ++k) {
                    double a = alpha[k][j];
                    if (a < 0.0 || a > 1.0) {
                        add("separator-alpha", "alpha for component '" + t.components[j].id +
                                                   "' outside [0,1]");
                    }
                    sum += a;
                }
                if (std::abs(sum - 1.0) > kSumTol) {
                    add("separator-alpha", "alpha for component '" + t.components[j].id +
                                               "' does not route all mass (sum != 1)");
                }
            }
            break;
        }
        case NodeKind::LinearReactor: {
            const auto& r = n.reactor;
            if (r.key_product.empty() || t.component_index(r.key_product) < 0) {
                add("reactor-key", "key product component missing or unknown");
            }
            for (const auto& [cid, coef] : r.a) {
                (void)coef;
                if (t.component_index(cid) < 0) {
                    add("reactor-coefficients", "unknown component '" + cid + "' in a_j");
                }
            }
            break;
        }
        case NodeKind::HeatExchanger: {
            const auto& x = n.exchanger;
            if (x.q_base <= 0.0) add("exchanger-base", "Q_base must be positive");
            if (x.th_in_base <= x.tc_in_base) {
                add("exchanger-base", "base hot inlet must be hotter than base cold inlet");
            }
            if (x.ua <= 0.0) add("exchanger-base", "UA must be positive");
            if (x.f_hot_base <= 0.0 || x.f_cold_base <= 0.0) {
                add("exchanger-base", "base flows must be positive");
            }
            break;
        }
        case NodeKind::Source: {
            double sum = 0.0;
            for (const auto& [cid, frac] : n.source.composition) {
                if (t.component_index(cid) < 0) {
                    add("source-composition", "unknown component '" + cid + "'");
                }
                if (frac < 0.0) add("source-composition", "negative mass fraction");
                sum += frac;
            }
            if (!n.source.composition.empty() && std::abs(sum - 1.0) > kSumTol) {
                add("source-composition", "composition does not sum to 1");
            }
            break;
        }
        case NodeKind::Inventory: {
            if (n.inventory.capacity < 0.0) add("inventory-bounds", "negative capacity");
            if (n.inventory.initial < 0.0 || n.inventory.initial > n.inventory.capacity) {
                add("inventory-bounds", "initial holdup outside [0, capacity]");
            }
            {
                double sum = 0.0;
                for (const auto& [cid, frac] : n.inventory.composition) {
                    if (t.component_index(cid) < 0) {
                        add("inventory-composition", "unknown component '" + cid + "'");
                    }
                    if (frac < 0.0) add("inventory-composition", "negative mass fraction");
                    sum += frac;
                }
                if (!n.inventory.composition.empty() && std::abs(sum - 1.0) > kSumTol) {
                    add("inventory-composition", "composition does not sum to 1");
                }
                if (n.inventory.initial > 0.0 && n.inventory.composition.empty() &&
                    t.components.size() > 1) {
                    add("inventory-composition",
                        "nonzero initial holdup needs a composition with multiple components");
                }
            }
            break;
        }
        default: break;
    }
}

}  // namespace

std::vector<Diagnostic> validate(const Topology& t) {
    std::vector<Diagnostic> out;
    auto add = [&](const std::string& rule, const std::string& subject, const std::string& msg) {
        out.push_back({rule, subject, msg, 0});
    };

    std::set<std::string> comp_ids;
    for (const auto& c : t.components) {
        if (c.id.empty()) add("component-id", c.id, "empty component id");
        if (!comp_ids.insert(c.id).second) add("duplicate-id", c.id, "duplicate component id");
    }

    std::set<std::string> node_ids;
    for (const auto& n : t.nodes) {
        if (n.id.empty()) add("node-id", n.id, "empty node id");
        if (!node_ids.insert(n.id).second) add("duplicate-id", n.id, "duplicate node id");
    }

    std::set<std::string> stream_ids;
    for (const auto& s : t.streams) {
        if (s.id.empty()) add("stream-id", s.id, "empty stream id");
        if (!stream_ids.insert(s.id).second) add("duplicate-id", s.id, "duplicate stream id");
        if (s.source == kBoundary && s.sink == kBoundary) {
            add("stream-endpoints", s.id, "both endpoints are BOUNDARY");
        }
        if (s.source != kBoundary && !node_ids.count(s.source)) {
            add("dangling-reference", s.id, "source node '" + s.source + "' not declared");
        }
        if (s.sink != kBoundary && !node_ids.count(s.sink)) {
            add("dangling-reference", s.id, "sink node '" + s.sink + "' not declared");
        }
    }

    // Node arity plus cross-referencing of stream endpoints.
    std::map<std::string, int> produced_by;  // stream -> count of nodes listing it as outlet
    std::map<std::string, int> consumed_by;
    for (const auto& n : t.nodes) {
        ArityRule rule = arity_for(n.kind);
        int nin = static_cast<int>(n.inlets.size());
        int nout = static_cast<int>(n.outlets.size());
        if (nin < rule.min_in || (rule.max_in >= 0 && nin > rule.max_in) ||
            nout < rule.min_out || (rule.max_out >= 0 && nout > rule.max_out)) {
            add(arity_rule_name(n.kind), n.id,
                std::string(to_string(n.kind)) + " has " + std::to_string(nin) + " inlets / " +
                    std::to_string(nout) + " outlets");
        }
        for (const auto& s : n.inlets) {
            if (!stream_ids.count(s)) {
                add("dangling-reference", n.id, "inlet stream '" + s + "' not declared");
            } else {
                consumed_by[s] += 1;
                const StreamDef* sd = t.find_stream(s);
                if (sd && sd->sink != n.id) {
                    add("stream-endpoint-mismatch", s,
                        "listed as inlet of '" + n.id + "' but its sink is '" + sd->sink + "'");
                }
            }
        }
        for (const auto& s : n.outlets) {
            if (!stream_ids.count(s)) {
                add("dangling-reference", n.id, "outlet stream '" + s + "' not declared");
            } else {
                produced_by[s] += 1;
                const StreamDef* sd = t.find_stream(s);
                if (sd && sd->source != n.id) {
                    add("stream-endpoint-mismatch", s,
                        "listed as outlet of '" + n.id + "' but its source is '" + sd->source +
                            "'");
                }
            }
        }
        check_node_params(t, n, out);
    }
    for (const auto& [sid, cnt] : produced_by) {
        if (cnt > 1) add("stream-multiply-produced", sid, "outlet of more than one node");
    }
    for (const auto& [sid, cnt] : consumed_by) {
        if (cnt > 1) add("stream-multiply-consumed", sid, "inlet of more than one node");
    }
    for (const auto& s : t.streams) {
        if (s.source != kBoundary && node_ids.count(s.source) && produced_by[s.id] == 0) {
            add("stream-endpoint-mismatch", s.id,
                "source node '" + s.source + "' does not list it as outlet");
        }
        if (s.sink != kBoundary && node_ids.count(s.sink) && consumed_by[s.id] == 0) {
            add("stream-endpoint-mismatch", s.id,
                "sink node '" + s.sink + "' does not list it as inlet");
        }
    }

    // Weak connectivity with BOUNDARY as a virtual node.
    if (!t.nodes.empty()) {
        std::map<std::string, std::set<std::string>> adj;
        for (const auto& s : t.streams) {
            if (!node_ids.count(s.source) && s.source != kBoundary) continue;
            if (!node_ids.count(s.sink) && s.sink != kBoundary) continue;
            adj[s.source].insert(s.sink);
            adj[s.sink].insert(s.source);
        }
        std::set<std::string> seen;
        std::vector<std::string> stack{t.nodes.front().id};
        while (!stack.empty()) {
            std::string cur = stack.back();
            stack.pop_back();
            if (!seen.insert(cur).second) continue;
            for (const auto& nb : adj[cur]) stack.push_back(nb);
        }
        for (const auto& n : t.nodes) {
            if (!seen.count(n.id)) {
                add("graph-disconnected", n.id, "node unreachable from '" + t.nodes.front().id +
                                                    "' in the undirected graph");
            }
        }
    }

    // Exchanger pairings reference distinct streams.
    for (const auto& n : t.nodes) {
        if (n.kind != NodeKind::HeatExchanger) continue;
        if (n.inlets.size() == 2 && n.inlets[0] == n.inlets[1]) {
            add("exchanger-pairing", n.id, "hot and cold inlets are the same stream");
        }
        if (n.outlets.size() == 2 && n.outlets[0] == n.outlets[1]) {
            add("exchanger-pairing", n.id, "hot and cold outlets are the same stream");
        }
    }

    return out;
}

}  // namespace massflow

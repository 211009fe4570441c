#include "massflow/instantiate.hpp"

#include <set>

namespace massflow {

namespace {

std::string at(int period) { return "@" + std::to_string(period); }

}  // namespace

std::string var_total(const std::string& stream, int period) {
    return "F[" + stream + "]" + at(period);
}
std::string var_comp(const std::string& stream, const std::string& comp, int period) {
    return "F[" + stream + "," + comp + "]" + at(period);
}
std::string var_frac(const std::string& stream, const std::string& comp, int period) {
    return "x[" + stream + "," + comp + "]" + at(period);
}
std::string var_temp(const std::string& stream, int period) {
    return "T[" + stream + "]" + at(period);
}
std::string var_duty(const std::string& node, int period) {
    return "Q[" + node + "]" + at(period);
}
std::string var_duty_side(const std::string& node, const std::string& side, int period) {
    return "Q[" + node + ":" + side + "]" + at(period);
}
std::string var_ratio(const std::string& node, const std::string& outlet, int period) {
    return "alpha[" + node + "," + outlet + "]" + at(period);
}
std::string var_inventory(const std::string& node, int period) {
    return "inv[" + node + "]" + at(period);
}
std::string var_inventory_comp(const std::string& node, const std::string& comp, int period) {
    return "inv[" + node + "," + comp + "]" + at(period);
}
std::string var_reactor_temp(const std::string& node, int period) {
    return "Trct[" + node + "]" + at(period);
}

namespace {

class Builder {
  public:
    Builder(const Topology& t, const AbstractionPlan& plan, const Scenario& scenario,
            const InstantiateOptions& opts)
        : t_(t),
          plan_(plan),
          sc_(scenario),
          opts_(opts),
          props_(opts.property_override ? *opts.property_override : t.properties) {}

    EquationSystem build() {
        check_plan();
        for (int period = 0; period < sc_.periods; ++period) {
            period_ = period;
            analyze_streams();
            create_stream_variables();
            create_node_variables();
            emit_stream_rows();
            for (const auto& n : t_.nodes) emit_mass_rows(n);
            for (const auto& n : t_.nodes) emit_energy_rows(n);
            emit_objective();
        }
        return std::move(sys_);
    }

  private:
    AbstractionLevel level(const NodeDef& n) const { return plan_.level_for(n.id, period_); }
    Paradigm paradigm(const NodeDef& n) const { return plan_.paradigm_for(n.id, period_); }
    /// Node kind effective in the current period: nodes scheduled as
    /// data-driven for early periods emit their gain model instead.
    NodeKind kind_of(const NodeDef& n) const {
        return plan_.data_driven_at(n.id, period_) ? NodeKind::DataDrivenLinear : n.kind;
    }

    void check_plan() {
        for (const auto& [key, val] : plan_.overrides) {
            (void)val;
            if (!t_.find_node(key.first)) {
                throw InstantiationError("plan override references unknown node '" + key.first +
                                         "'");
            }
            if (key.second >= sc_.periods) {
                throw InstantiationError("plan override for node '" + key.first +
                                         "' references period beyond horizon");
            }
        }
        for (const auto& [node, until] : plan_.data_driven_until) {
            const NodeDef* n = t_.find_node(node);
            if (!n) {
                throw InstantiationError("plan data-driven schedule references unknown node '" +
                                         node + "'");
            }
            if (until > 0 && n->data_driven.gain.empty()) {
                throw InstantiationError("node '" + node +
                                         "' has no gain model for its data-driven periods");
            }
        }
        for (const auto& s : plan_.report_fractions) {
            if (!t_.find_stream(s)) {
                throw InstantiationError("report_fractions references unknown stream '" + s +
                                         "'");
            }
        }
    }

    // Kinds whose balances are written over component mass flows no matter
    // which paradigm the plan selects for them.
    static bool inherent_comp_kind(NodeKind k) {
        switch (k) {
            case NodeKind::LinearReactor:
            case NodeKind::HeatExchanger:
            case NodeKind::HeaterCooler:
            case NodeKind::Inventory:
            case NodeKind::DataDrivenLinear:
                return true;
            default:
                return false;
        }
    }

    struct StreamInfo {
        bool fraction_primary = false;  // producer defines F and x directly
        bool comp_vars = false;
        bool frac_vars = false;
        bool total_def = false;  // emit sum(F_j) = F centrally
        const NodeDef* producer = nullptr;
        const NodeDef* consumer = nullptr;
        bool temp_var = false;
        bool temp_fixed = false;
        double temp_value = 0.0;
    };

    void analyze_streams() {
        info_.clear();
        for (const auto& s : t_.streams) {
            StreamInfo si;
            si.producer = t_.producer(s.id);
            si.consumer = t_.consumer(s.id);

            NodeKind pk = si.producer ? kind_of(*si.producer) : NodeKind::Mixer;
            si.fraction_primary =
                si.producer && paradigm(*si.producer) == Paradigm::FractionsBased &&
                (pk == NodeKind::Splitter || pk == NodeKind::Source);

            bool demand_comp = false;
            bool demand_frac = false;
            for (const NodeDef* n : {si.producer, si.consumer}) {
                if (!n) continue;
                NodeKind k = kind_of(*n);
                if (inherent_comp_kind(k)) demand_comp = true;
                if (paradigm(*n) == Paradigm::ComponentFlows) {
                    if (k != NodeKind::Sink) demand_comp = true;
                } else {
                    // Fraction-based mixers and separators still manipulate
                    // component flows; splitters work purely on (F, x).
                    if (k == NodeKind::Mixer || k == NodeKind::ComponentSeparator) {
                        demand_comp = true;
                        demand_frac = true;
                    }
                    if (k == NodeKind::Splitter) demand_frac = true;
                }
            }
            for (const auto& rs : plan_.report_fractions) {
                if (rs == s.id) demand_frac = true;
            }

            bool comp_primary = si.producer == nullptr || !si.fraction_primary;
            si.comp_vars = comp_primary || demand_comp;
            si.frac_vars = si.fraction_primary || demand_frac;
            si.total_def = si.comp_vars && !si.fraction_primary;

            // Temperatures exist where some incident node carries local-H
            // energy rows.
            bool local_incident = false;
            for (const NodeDef* n : {si.producer, si.consumer}) {
                if (!n) continue;
                NodeKind k = kind_of(*n);
                if (level(*n) == AbstractionLevel::MassEnergyLocalH &&
                    k != NodeKind::Source && k != NodeKind::Sink && k != NodeKind::Inventory &&
                    k != NodeKind::DataDrivenLinear) {
                    local_incident = true;
                }
            }
            if (local_incident) {
                const StreamPropertyRecord* rec = props_.find(s.id);
                if (!rec) {
                    throw InstantiationError("missing property record for stream '" + s.id +
                                             "' required by a local-enthalpy energy balance");
                }
                si.temp_var = true;
                si.temp_value = rec->t0;
                si.temp_fixed = s.fixed_temperature || si.producer == nullptr;
                if (si.producer) {
                    switch (pk) {
                        case NodeKind::Source:
                        case NodeKind::ComponentSeparator:
                        case NodeKind::HeatExchanger:
                        case NodeKind::DataDrivenLinear:
                        case NodeKind::Inventory:
                            si.temp_fixed = true;
                            break;
                        case NodeKind::LinearReactor:
                            if (si.producer->reactor.fixed_temperature) {
                                si.temp_fixed = true;
                                si.temp_value = si.producer->reactor.t_rct;
                            }
                            break;
                        default:
                            break;
                    }
                }
            }
            info_[s.id] = si;
        }
    }

    void create_stream_variables() {
        for (const auto& s : t_.streams) {
            const StreamInfo& si = info_[s.id];
            sys_.add_variable(var_total(s.id, period_), VarRole::TotalFlow,
                              s.flow_min.value_or(0.0), s.flow_max.value_or(kInf), period_, 1.0);
            if (si.comp_vars) {
                for (const auto& c : t_.components) {
                    sys_.add_variable(var_comp(s.id, c.id, period_), VarRole::ComponentFlow, 0.0,
                                      kInf, period_, 1.0);
                }
            }
            if (si.frac_vars) {
                for (const auto& c : t_.components) {
                    sys_.add_variable(var_frac(s.id, c.id, period_), VarRole::Fraction, 0.0, 1.0,
                                      period_,
                                      1.0 / static_cast<double>(t_.components.size()));
                }
            }
            if (si.temp_var) {
                double lo = si.temp_fixed ? si.temp_value : 0.0;
                double hi = si.temp_fixed ? si.temp_value : kInf;
                sys_.add_variable(var_temp(s.id, period_), VarRole::Temperature, lo, hi, period_,
                                  si.temp_value);
            }
        }
    }

    bool emits_energy(const NodeDef& n) const {
        NodeKind k = kind_of(n);
        if (k == NodeKind::Source || k == NodeKind::Sink || k == NodeKind::Inventory ||
            k == NodeKind::DataDrivenLinear) {
            return false;
        }
        return level(n) != AbstractionLevel::MassOnly;
    }

    void create_node_variables() {
        for (const auto& n : t_.nodes) {
            if (kind_of(n) == NodeKind::Splitter && n.splitter.fixed_fractions.empty() &&
                n.outlets.size() > 1) {
                for (const auto& out : n.outlets) {
                    sys_.add_variable(var_ratio(n.id, out, period_), VarRole::SplitRatio, 0.0,
                                      1.0, period_,
                                      1.0 / static_cast<double>(n.outlets.size()));
                }
            }
            if (kind_of(n) == NodeKind::LinearReactor && !n.reactor.fixed_temperature) {
                sys_.add_variable(var_reactor_temp(n.id, period_), VarRole::Temperature, 0.0,
                                  kInf, period_, n.reactor.t_rct > 0 ? n.reactor.t_rct : 300.0);
            }
            if (n.kind == NodeKind::Inventory) {
                for (const auto& c : t_.components) {
                    sys_.add_variable(var_inventory_comp(n.id, c.id, period_),
                                      VarRole::Inventory, 0.0, kInf, period_, 0.0);
                }
                double lo = 0.0;
                if (period_ == sc_.periods - 1) lo = n.inventory.initial;
                sys_.add_variable(var_inventory(n.id, period_), VarRole::Inventory, lo,
                                  n.inventory.capacity, period_, n.inventory.initial);
            }
            if (emits_energy(n)) {
                if (n.kind == NodeKind::HeatExchanger) {
                    sys_.add_variable(var_duty_side(n.id, "hot", period_), VarRole::Duty, -kInf,
                                      kInf, period_, 0.0);
                    sys_.add_variable(var_duty_side(n.id, "cold", period_), VarRole::Duty, -kInf,
                                      kInf, period_, 0.0);
                } else {
                    double lo = -kInf, hi = kInf;
                    // Fixed-H rows only bookkeep duties; specs bind once
                    // temperatures can move.
                    if (level(n) == AbstractionLevel::MassEnergyLocalH) {
                        std::optional<double> fixed;
                        if (n.duty) fixed = *n.duty;
                        if (n.kind == NodeKind::HeaterCooler) {
                            if (n.heater.duty) fixed = *n.heater.duty;
                            else if (n.heater.duty_max > n.heater.duty_min) {
                                lo = n.heater.duty_min;
                                hi = n.heater.duty_max;
                            }
                        } else if (n.kind == NodeKind::Mixer && !fixed) {
                            fixed = 0.0;
                        }
                        if (fixed) {
                            lo = hi = *fixed;
                        }
                    }
                    sys_.add_variable(var_duty(n.id, period_), VarRole::Duty, lo, hi, period_,
                                      lo == hi ? lo : 0.0);
                }
            }
        }
    }

    int F(const std::string& s) const { return sys_.require_variable(var_total(s, period_)); }
    int Fc(const std::string& s, const std::string& c) const {
        return sys_.require_variable(var_comp(s, c, period_));
    }
    int X(const std::string& s, const std::string& c) const {
        return sys_.require_variable(var_frac(s, c, period_));
    }

    void emit_stream_rows() {
        for (const auto& s : t_.streams) {
            const StreamInfo& si = info_[s.id];
            std::string owner = si.producer ? si.producer->id
                                            : (si.consumer ? si.consumer->id : s.id);
            if (si.comp_vars && si.frac_vars) {
                // F * x_j = F_j, once per stream.
                for (const auto& c : t_.components) {
                    int row = sys_.add_row(owner, "fraction-def:" + s.id + ":" + c.id);
                    sys_.row_add(row, Fc(s.id, c.id), -1.0);
                    int fx = X(s.id, c.id);
                    sys_.add_bilinear(row, F(s.id), fx, 1.0, fx);
                }
            }
            if (si.total_def) {
                int row = sys_.add_row(owner, "total-def:" + s.id);
                for (const auto& c : t_.components) sys_.row_add(row, Fc(s.id, c.id), 1.0);
                sys_.row_add(row, F(s.id), -1.0);
            }
        }
    }

    void emit_mass_rows(const NodeDef& n) {
        switch (kind_of(n)) {
            case NodeKind::Mixer: emit_mixer(n); break;
            case NodeKind::Splitter: emit_splitter(n); break;
            case NodeKind::ComponentSeparator: emit_separator(n); break;
            case NodeKind::LinearReactor: emit_reactor(n); break;
            case NodeKind::HeatExchanger:
                emit_pass_through(n, n.inlets[0], n.outlets[0]);
                emit_pass_through(n, n.inlets[1], n.outlets[1]);
                break;
            case NodeKind::HeaterCooler: emit_pass_through(n, n.inlets[0], n.outlets[0]); break;
            case NodeKind::Source: emit_source(n); break;
            case NodeKind::Sink: emit_sink(n); break;
            case NodeKind::Inventory: emit_inventory(n); break;
            case NodeKind::DataDrivenLinear: emit_data_driven(n); break;
        }
    }

    void emit_mixer(const NodeDef& n) {
        const std::string& out = n.outlets[0];
        for (const auto& c : t_.components) {
            int row = sys_.add_row(n.id, "mixer-component:" + c.id);
            for (const auto& in : n.inlets) sys_.row_add(row, Fc(in, c.id), 1.0);
            sys_.row_add(row, Fc(out, c.id), -1.0);
        }
    }

    void emit_splitter(const NodeDef& n) {
        const std::string& in = n.inlets[0];
        if (n.outlets.size() == 1) {
            emit_pass_through(n, in, n.outlets[0]);
            return;
        }
        bool fractions = paradigm(n) == Paradigm::FractionsBased;
        bool fixed = !n.splitter.fixed_fractions.empty();

        if (fractions) {
            for (const auto& out : n.outlets) {
                for (const auto& c : t_.components) {
                    int row = sys_.add_row(n.id, "splitter-composition:" + out + ":" + c.id);
                    sys_.row_add(row, X(in, c.id), 1.0);
                    sys_.row_add(row, X(out, c.id), -1.0);
                }
            }
            if (fixed) {
                int bal = sys_.add_row(n.id, "splitter-total");
                sys_.row_add(bal, F(in), 1.0);
                for (const auto& out : n.outlets) sys_.row_add(bal, F(out), -1.0);
                for (std::size_t k = 0; k + 1 < n.outlets.size(); ++k) {
                    int row = sys_.add_row(n.id, "splitter-ratio:" + n.outlets[k]);
                    sys_.row_add(row, F(in), n.splitter.fixed_fractions[k]);
                    sys_.row_add(row, F(n.outlets[k]), -1.0);
                }
            } else {
                for (const auto& out : n.outlets) {
                    int a = sys_.require_variable(var_ratio(n.id, out, period_));
                    int row = sys_.add_row(n.id, "splitter-ratio:" + out);
                    sys_.add_bilinear(row, F(in), a, 1.0, a);
                    sys_.row_add(row, F(out), -1.0);
                }
                emit_ratio_sum(n);
            }
        } else {
            if (fixed) {
                for (std::size_t k = 0; k < n.outlets.size(); ++k) {
                    for (const auto& c : t_.components) {
                        int row = sys_.add_row(n.id, "splitter-component:" + n.outlets[k] + ":" +
                                                          c.id);
                        sys_.row_add(row, Fc(in, c.id), n.splitter.fixed_fractions[k]);
                        sys_.row_add(row, Fc(n.outlets[k], c.id), -1.0);
                    }
                }
            } else {
                for (const auto& out : n.outlets) {
                    int a = sys_.require_variable(var_ratio(n.id, out, period_));
                    for (const auto& c : t_.components) {
                        int row = sys_.add_row(n.id, "splitter-component:" + out + ":" + c.id);
                        sys_.add_bilinear(row, Fc(in, c.id), a, 1.0, a);
                        sys_.row_add(row, Fc(out, c.id), -1.0);
                    }
                }
                emit_ratio_sum(n);
            }
        }
    }

    void emit_ratio_sum(const NodeDef& n) {
        int row = sys_.add_row(n.id, "splitter-ratio-sum");
        for (const auto& out : n.outlets) {
            sys_.row_add(row, sys_.require_variable(var_ratio(n.id, out, period_)), 1.0);
        }
        sys_.row_rhs(row, 1.0);
    }

    void emit_separator(const NodeDef& n) {
        const std::string& in = n.inlets[0];
        for (std::size_t k = 0; k < n.outlets.size(); ++k) {
            for (std::size_t j = 0; j < t_.components.size(); ++j) {
                const std::string& cid = t_.components[j].id;
                int row = sys_.add_row(n.id, "separator-route:" + n.outlets[k] + ":" + cid);
                sys_.row_add(row, Fc(in, cid), n.separator.alpha[k][j]);
                sys_.row_add(row, Fc(n.outlets[k], cid), -1.0);
            }
        }
    }

    void emit_reactor(const NodeDef& n) {
        if (paradigm(n) == Paradigm::FractionsBased) {
            throw InstantiationError(
                "node '" + n.id +
                "': LinearReactor cannot be emitted in the fractions paradigm");
        }
        const auto& r = n.reactor;
        const std::string& in = n.inlets[0];
        const std::string& out = n.outlets[0];

        int closure = sys_.add_row(n.id, "reactor-closure");
        sys_.row_add(closure, F(out), 1.0);
        sys_.row_add(closure, F(in), -1.0);

        int yield = sys_.add_row(n.id, "reactor-yield");
        for (const auto& [cid, coef] : r.a) sys_.row_add(yield, Fc(in, cid), coef);
        sys_.row_add(yield, Fc(out, r.key_product), r.a_y);
        emit_feed_t_term(n, yield, r.a_t);
        for (std::size_t i = 0; i < r.stoich_rows.size(); ++i) {
            const auto& sr = r.stoich_rows[i];
            int row = sys_.add_row(n.id, "reactor-stoich:" + std::to_string(i + 1));
            for (const auto& [cid, coef] : sr.out_coef) sys_.row_add(row, Fc(out, cid), coef);
            for (const auto& [cid, coef] : sr.in_coef) sys_.row_add(row, Fc(in, cid), coef);
            if (sr.feed_coef != 0.0) sys_.row_add(row, F(in), sr.feed_coef);
            emit_feed_t_term(n, row, sr.feed_t_coef);
            sys_.row_rhs(row, -sr.constant);
        }
        // At local fidelity a free reactor temperature is the outlet
        // stream's temperature.
        if (!r.fixed_temperature) {
            int tout = sys_.find_variable(var_temp(out, period_));
            if (tout >= 0) {
                int row = sys_.add_row(n.id, "reactor-temperature-link");
                sys_.row_add(row, tout, 1.0);
                sys_.row_add(row, sys_.require_variable(var_reactor_temp(n.id, period_)), -1.0);
            }
        }
    }

    void emit_feed_t_term(const NodeDef& n, int row, double coef) {
        if (coef == 0.0) return;
        const std::string& in = n.inlets[0];
        if (n.reactor.fixed_temperature) {
            sys_.row_add(row, F(in), coef * n.reactor.t_rct);
        } else {
            int tv = sys_.require_variable(var_reactor_temp(n.id, period_));
            sys_.add_bilinear(row, F(in), tv, coef, tv);
        }
    }

    void emit_pass_through(const NodeDef& n, const std::string& in, const std::string& out) {
        bool comps = info_[in].comp_vars && info_[out].comp_vars;
        if (comps) {
            for (const auto& c : t_.components) {
                int row = sys_.add_row(n.id, "pass-component:" + out + ":" + c.id);
                sys_.row_add(row, Fc(in, c.id), 1.0);
                sys_.row_add(row, Fc(out, c.id), -1.0);
            }
            if (!info_[out].total_def) {
                int row = sys_.add_row(n.id, "pass-total:" + out);
                sys_.row_add(row, F(in), 1.0);
                sys_.row_add(row, F(out), -1.0);
            }
        } else {
            int row = sys_.add_row(n.id, "pass-total:" + out);
            sys_.row_add(row, F(in), 1.0);
            sys_.row_add(row, F(out), -1.0);
            if (info_[in].frac_vars && info_[out].frac_vars) {
                for (const auto& c : t_.components) {
                    int r2 = sys_.add_row(n.id, "pass-composition:" + out + ":" + c.id);
                    sys_.row_add(r2, X(in, c.id), 1.0);
                    sys_.row_add(r2, X(out, c.id), -1.0);
                }
            }
        }
    }

    void emit_source(const NodeDef& n) {
        const std::string& out = n.outlets[0];
        if (n.source.flow) {
            int row = sys_.add_row(n.id, "source-flow");
            sys_.row_add(row, F(out), 1.0);
            sys_.row_rhs(row, *n.source.flow);
        } else if (n.source.flow_max > 0.0 || n.source.flow_min > 0.0) {
            Variable& v = sys_.variable(F(out));
            v.lb = n.source.flow_min;
            v.ub = n.source.flow_max > 0.0 ? n.source.flow_max : kInf;
            v.init = v.lb;
        }
        if (n.source.composition.empty()) return;
        auto frac_of = [&](const std::string& cid) {
            auto it = n.source.composition.find(cid);
            return it == n.source.composition.end() ? 0.0 : it->second;
        };
        if (paradigm(n) == Paradigm::FractionsBased) {
            for (const auto& c : t_.components) {
                int row = sys_.add_row(n.id, "source-composition:" + c.id);
                sys_.row_add(row, X(out, c.id), 1.0);
                sys_.row_rhs(row, frac_of(c.id));
            }
        } else {
            // The stream total-def closes the last component.
            for (std::size_t j = 0; j + 1 < t_.components.size(); ++j) {
                const std::string& cid = t_.components[j].id;
                int row = sys_.add_row(n.id, "source-composition:" + cid);
                sys_.row_add(row, F(out), frac_of(cid));
                sys_.row_add(row, Fc(out, cid), -1.0);
            }
        }
    }

    void emit_sink(const NodeDef& n) {
        const std::string& in = n.inlets[0];
        if (n.sink.flow) {
            int row = sys_.add_row(n.id, "sink-flow");
            sys_.row_add(row, F(in), 1.0);
            sys_.row_rhs(row, *n.sink.flow);
        } else if (n.sink.flow_max > 0.0 || n.sink.flow_min > 0.0) {
            Variable& v = sys_.variable(F(in));
            v.lb = n.sink.flow_min;
            v.ub = n.sink.flow_max > 0.0 ? n.sink.flow_max : kInf;
        }
    }

    void emit_inventory(const NodeDef& n) {
        const std::string& in = n.inlets[0];
        const std::string& out = n.outlets[0];
        double kg_per_flow = 3600.0 * sc_.dt_hours;  // kg held per (kg/s over one period)
        for (const auto& c : t_.components) {
            int row = sys_.add_row(n.id, "inventory-link:" + c.id);
            sys_.row_add(row, sys_.require_variable(var_inventory_comp(n.id, c.id, period_)),
                         1.0);
            sys_.row_add(row, Fc(in, c.id), -kg_per_flow);
            sys_.row_add(row, Fc(out, c.id), kg_per_flow);
            if (period_ == 0) {
                double w = 0.0;
                auto it = n.inventory.composition.find(c.id);
                if (it != n.inventory.composition.end()) w = it->second;
                if (t_.components.size() == 1) w = 1.0;
                sys_.row_rhs(row, n.inventory.initial * w);
            } else {
                sys_.row_add(
                    row, sys_.require_variable(var_inventory_comp(n.id, c.id, period_ - 1)),
                    -1.0);
            }
        }
        int total = sys_.add_row(n.id, "inventory-total");
        for (const auto& c : t_.components) {
            sys_.row_add(total, sys_.require_variable(var_inventory_comp(n.id, c.id, period_)),
                         1.0);
        }
        sys_.row_add(total, sys_.require_variable(var_inventory(n.id, period_)), -1.0);
    }

    void emit_data_driven(const NodeDef& n) {
        if (n.outlets.size() != 1) {
            throw InstantiationError("node '" + n.id +
                                     "': DataDrivenLinear supports exactly one outlet");
        }
        const std::string& out = n.outlets[0];
        for (const auto& c : t_.components) {
            int row = sys_.add_row(n.id, "datadriven-gain:" + c.id);
            sys_.row_add(row, Fc(out, c.id), -1.0);
            auto git = n.data_driven.gain.find(c.id);
            if (git != n.data_driven.gain.end()) {
                for (const auto& in : n.inlets) {
                    for (const auto& [cin, g] : git->second) {
                        sys_.row_add(row, Fc(in, cin), g);
                    }
                }
            }
            auto bit = n.data_driven.bias.find(c.id);
            sys_.row_rhs(row, bit == n.data_driven.bias.end() ? 0.0 : -bit->second);
        }
    }

    // --- energy ---

    const StreamPropertyRecord& record_for(const std::string& stream) const {
        const StreamPropertyRecord* rec = props_.find(stream);
        if (!rec) {
            throw InstantiationError("missing property record for stream '" + stream +
                                     "' required by an energy balance");
        }
        return *rec;
    }

    /// Add sign * F[s] * H(T_s) to a linear row at the node's fidelity.
    void add_enthalpy_term(const NodeDef& n, int row, const std::string& stream, double sign) {
        const StreamPropertyRecord& rec = record_for(stream);
        int fv = F(stream);
        if (level(n) == AbstractionLevel::MassEnergyFixedH) {
            sys_.row_add(row, fv, sign * rec.h0);
            return;
        }
        int tv = sys_.require_variable(var_temp(stream, period_));
        const Variable& tvar = sys_.variable(tv);
        if (tvar.fixed()) {
            sys_.row_add(row, fv, sign * (rec.h0 + rec.cp * (tvar.lb - rec.t0)));
        } else {
            sys_.row_add(row, fv, sign * (rec.h0 - rec.cp * rec.t0));
            sys_.add_bilinear(row, fv, tv, sign * rec.cp, tv);
        }
    }

    void add_rigorous_entry(GeneralResidual& res, const std::string& stream, double sign) {
        const StreamPropertyRecord& rec = record_for(stream);
        if (!rec.correlation) {
            throw InstantiationError("stream '" + stream +
                                     "' lacks a correlation required for a rigorous energy row");
        }
        EnthalpyEntry e;
        e.f_var = F(stream);
        e.sign = sign;
        e.correlation = *rec.correlation;
        int tv = sys_.require_variable(var_temp(stream, period_));
        const Variable& tvar = sys_.variable(tv);
        if (tvar.fixed()) {
            e.t_var = -1;
            e.t_value = tvar.lb;
        } else {
            e.t_var = tv;
        }
        res.enthalpy.push_back(e);
    }

    void emit_energy_rows(const NodeDef& n) {
        if (!emits_energy(n)) return;
        if (n.kind == NodeKind::HeatExchanger) {
            emit_side_energy(n, n.inlets[0], n.outlets[0], "hot");
            emit_side_energy(n, n.inlets[1], n.outlets[1], "cold");
            return;
        }
        bool rigorous =
            opts_.rigorous_energy && level(n) == AbstractionLevel::MassEnergyLocalH;
        int duty = sys_.require_variable(var_duty(n.id, period_));
        double phase_hvap = 0.0;
        if (n.kind == NodeKind::HeaterCooler && n.heater.phase_change != 0) {
            const StreamPropertyRecord& rec = record_for(n.outlets[0]);
            const StreamPropertyRecord& rec_in = record_for(n.inlets[0]);
            if (rec.hvap) phase_hvap = *rec.hvap;
            else if (rec_in.hvap) phase_hvap = *rec_in.hvap;
            else
                throw InstantiationError("node '" + n.id +
                                         "': phase_change requires Hvap on a property record");
            phase_hvap *= n.heater.phase_change;
        }
        if (rigorous) {
            GeneralResidual res;
            res.node = n.id;
            res.tag = "energy";
            for (const auto& in : n.inlets) add_rigorous_entry(res, in, 1.0);
            for (const auto& out : n.outlets) add_rigorous_entry(res, out, -1.0);
            res.linear.push_back({duty, 1.0});
            if (n.kind == NodeKind::LinearReactor && n.reactor.q_rct != 0.0) {
                res.linear.push_back({F(n.inlets[0]), n.reactor.q_rct});
            }
            if (phase_hvap != 0.0) res.linear.push_back({F(n.outlets[0]), -phase_hvap});
            sys_.add_general(std::move(res));
        } else {
            int row = sys_.add_row(n.id, "energy");
            for (const auto& in : n.inlets) add_enthalpy_term(n, row, in, 1.0);
            for (const auto& out : n.outlets) add_enthalpy_term(n, row, out, -1.0);
            sys_.row_add(row, duty, 1.0);
            if (n.kind == NodeKind::LinearReactor && n.reactor.q_rct != 0.0) {
                sys_.row_add(row, F(n.inlets[0]), n.reactor.q_rct);
            }
            if (phase_hvap != 0.0) sys_.row_add(row, F(n.outlets[0]), -phase_hvap);
        }
        // Splitter outlets track the inlet temperature.
        if (n.kind == NodeKind::Splitter &&
            level(n) == AbstractionLevel::MassEnergyLocalH) {
            int tin = sys_.require_variable(var_temp(n.inlets[0], period_));
            for (const auto& out : n.outlets) {
                int tout = sys_.require_variable(var_temp(out, period_));
                if (sys_.variable(tout).fixed()) continue;
                int tr = sys_.add_row(n.id, "splitter-temperature:" + out);
                sys_.row_add(tr, tout, 1.0);
                sys_.row_add(tr, tin, -1.0);
            }
        }
    }

    void emit_side_energy(const NodeDef& n, const std::string& in, const std::string& out,
                          const std::string& side) {
        int duty = sys_.require_variable(var_duty_side(n.id, side, period_));
        bool rigorous =
            opts_.rigorous_energy && level(n) == AbstractionLevel::MassEnergyLocalH;
        if (rigorous) {
            GeneralResidual res;
            res.node = n.id;
            res.tag = "energy:" + side;
            add_rigorous_entry(res, in, 1.0);
            add_rigorous_entry(res, out, -1.0);
            res.linear.push_back({duty, 1.0});
            sys_.add_general(std::move(res));
            return;
        }
        int row = sys_.add_row(n.id, "energy:" + side);
        add_enthalpy_term(n, row, in, 1.0);
        add_enthalpy_term(n, row, out, -1.0);
        sys_.row_add(row, duty, 1.0);
    }

    void emit_objective() {
        if (opts_.no_objective) return;
        double mass_scale = 3600.0 * sc_.dt_hours;  // kg moved per period per (kg/s)
        auto price_at = [&](const std::vector<double>& p) {
            if (p.empty()) return 0.0;
            std::size_t i = static_cast<std::size_t>(period_);
            return i < p.size() ? p[i] : p.back();
        };
        for (const auto& n : t_.nodes) {
            if (n.kind == NodeKind::Source) {
                double price = price_at(n.source.price);
                if (price != 0.0) sys_.objective_add(F(n.outlets[0]), price * mass_scale);
            } else if (n.kind == NodeKind::Sink) {
                double price = price_at(n.sink.price);
                if (price != 0.0) sys_.objective_add(F(n.inlets[0]), -price * mass_scale);
            } else if (n.kind == NodeKind::HeaterCooler && n.heater.electric &&
                       emits_energy(n)) {
                double tariff = sc_.electricity_price_at(period_);
                if (tariff != 0.0) {
                    sys_.objective_add(sys_.require_variable(var_duty(n.id, period_)),
                                       tariff * sc_.dt_hours);
                }
            }
        }
    }

    const Topology& t_;
    const AbstractionPlan& plan_;
    const Scenario& sc_;
    const InstantiateOptions& opts_;
    const PropertyTable& props_;
    EquationSystem sys_;
    int period_ = 0;
    std::map<std::string, StreamInfo> info_;
};

}  // namespace

EquationSystem instantiate(const Topology& t, const AbstractionPlan& plan,
                           const Scenario& scenario, const InstantiateOptions& opts) {
    Builder b(t, plan, scenario, opts);
    return b.build();
}

TermCountReport count_nonlinearities(const EquationSystem& sys) { return sys.term_counts(); }

}  // namespace massflow

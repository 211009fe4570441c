#include "massflow/hen.hpp"

#include <cmath>
#include <stdexcept>

#include "massflow/instantiate.hpp"

namespace massflow {

double effectiveness_counter_current(double ntu, double cr) {
    if (ntu <= 0.0) return 0.0;
    if (std::abs(1.0 - cr) < 1e-12) return ntu / (1.0 + ntu);
    double e = std::exp(-ntu * (1.0 - cr));
    return (1.0 - e) / (1.0 - cr * e);
}

namespace {

double eps_cmin(const HeatExchangerParams& p, double f_hot, double f_cold, double cp_hot,
                double cp_cold) {
    double ch = f_hot * cp_hot;
    double cc = f_cold * cp_cold;
    double cmin = std::min(ch, cc);
    double cmax = std::max(ch, cc);
    double ntu = p.ua / cmin;
    double eps = effectiveness_counter_current(ntu, cmin / cmax);
    return eps * cmin;
}

}  // namespace

double compute_phi(const HeatExchangerParams& params, double f_hot, double f_cold,
                   double cp_hot, double cp_cold) {
    if (f_hot <= 0.0 || f_cold <= 0.0) {
        throw std::invalid_argument("compute_phi: flows must be positive");
    }
    if (cp_hot <= 0.0 || cp_cold <= 0.0) {
        throw std::invalid_argument("compute_phi: Cp must be positive");
    }
    double now = eps_cmin(params, f_hot, f_cold, cp_hot, cp_cold);
    double base = eps_cmin(params, params.f_hot_base, params.f_cold_base, cp_hot, cp_cold);
    return now / (base * (params.th_in_base - params.tc_in_base));
}

double phase_change_duty(const StreamPropertyRecord& rec, double f) {
    if (!rec.hvap) {
        throw std::invalid_argument("phase_change_duty: stream '" + rec.stream +
                                    "' has no Hvap");
    }
    return f * *rec.hvap;
}

namespace {

class HenSolver {
  public:
    HenSolver(const Topology& t, const Scenario& scenario, const SolveOptions& opts,
              const PropertyTable* props_override)
        : t_(t),
          sc_(scenario),
          opts_(opts),
          props_(props_override ? *props_override : t.properties) {}

    HenReport run() {
        HenReport rep;
        if (!solve_flows(rep)) return rep;
        classify_temperatures();
        rep.trace.clear();

        double prev_dt = kInf;
        int growing = 0;
        for (int iter = 1; iter <= std::max(opts_.max_iter, 1); ++iter) {
            SolveReport ts = solve_temperatures();
            if (!ts.ok()) {
                rep.status = SolveStatus::Infeasible;
                rep.message = "temperature system: " + ts.message;
                rep.iterations = iter;
                return rep;
            }
            double max_dt = 0.0;
            HenIteration log;
            log.iter = iter;
            for (auto& [sid, tcur] : temp_) {
                double tnew = ts.x[static_cast<std::size_t>(tsys_.require_variable("T[" + sid +
                                                                                    "]"))];
                double moved = tcur + opts_.relax * (tnew - tcur);
                max_dt = std::max(max_dt, std::abs(moved - tcur));
                tcur = moved;
            }
            for (const auto& n : t_.nodes) {
                int q = tsys_.find_variable("Q[" + n.id + "]");
                if (q >= 0) {
                    duty_[n.id] = ts.x[static_cast<std::size_t>(q)];
                    log.duties[n.id] = duty_[n.id];
                }
            }
            log.max_dt = max_dt;
            rep.trace.push_back(log);
            rep.iterations = iter;

            if (max_dt <= opts_.tol_T) {
                finish(rep);
                return rep;
            }
            if (max_dt > prev_dt) {
                if (++growing >= 3) {
                    rep.status = SolveStatus::IterationLimit;
                    rep.message = "diverging: temperature moves grew for 3 iterations";
                    finish(rep, /*converged=*/false);
                    return rep;
                }
            } else {
                growing = 0;
            }
            prev_dt = max_dt;
            refresh_references();
        }
        rep.status = SolveStatus::IterationLimit;
        rep.message = "outer iteration limit";
        finish(rep, /*converged=*/false);
        return rep;
    }

  private:
    bool solve_flows(HenReport& rep) {
        AbstractionPlan plan = AbstractionPlan::uniform(AbstractionLevel::MassEnergyFixedH);
        InstantiateOptions io;
        io.no_objective = true;
        io.property_override = &props_;
        EquationSystem sys = instantiate(t_, plan, Scenario{}, io);
        SolveReport flow = solve_linear(sys, opts_);
        if (!flow.ok()) {
            rep.status = flow.status;
            rep.message = "flow solve: " + flow.message;
            return false;
        }
        for (const auto& s : t_.streams) {
            rep.flows[s.id] =
                flow.x[static_cast<std::size_t>(sys.require_variable(var_total(s.id, 0)))];
            flow_[s.id] = rep.flows[s.id];
        }
        return true;
    }

    void classify_temperatures() {
        for (const auto& s : t_.streams) {
            const StreamPropertyRecord* rec = props_.find(s.id);
            if (!rec) continue;
            temp_[s.id] = rec->t0;
            bool fixed = s.fixed_temperature;
            const NodeDef* p = t_.producer(s.id);
            if (!p) fixed = true;
            else {
                switch (p->kind) {
                    case NodeKind::Source:
                    case NodeKind::ComponentSeparator:
                    case NodeKind::DataDrivenLinear:
                    case NodeKind::Inventory:
                        fixed = true;
                        break;
                    case NodeKind::LinearReactor:
                        fixed = true;
                        temp_[s.id] = p->reactor.t_rct;
                        break;
                    case NodeKind::HeaterCooler:
                        // A heater with no duty spec is a utility pinning its
                        // outlet at the record reference; its duty floats.
                        if (!p->heater.duty && !p->duty) fixed = true;
                        break;
                    default:
                        break;
                }
            }
            if (fixed) fixed_temp_[s.id] = temp_[s.id];
        }
    }

    const StreamPropertyRecord& rec(const std::string& sid) const { return props_.at(sid); }

    bool thermal_node(const NodeDef& n) const {
        switch (n.kind) {
            case NodeKind::Mixer:
            case NodeKind::Splitter:
            case NodeKind::HeatExchanger:
            case NodeKind::HeaterCooler:
                break;
            default:
                return false;
        }
        for (const auto& s : n.inlets) {
            if (!temp_.count(s)) return false;
        }
        for (const auto& s : n.outlets) {
            if (!temp_.count(s)) return false;
        }
        return true;
    }

    /// sign * F_s * H_s(T_s) with the current references, linear in T.
    void enthalpy_term(int row, const std::string& sid, double sign) {
        const StreamPropertyRecord& r = rec(sid);
        double f = flow_[sid];
        int tv = tsys_.require_variable("T[" + sid + "]");
        tsys_.row_add(row, tv, sign * f * r.cp);
        tsys_.row_rhs(row, tsys_.rows()[static_cast<std::size_t>(row)].rhs -
                               sign * f * (r.h0 - r.cp * r.t0));
    }

    SolveReport solve_temperatures() {
        tsys_ = EquationSystem{};
        for (const auto& [sid, tcur] : temp_) {
            auto it = fixed_temp_.find(sid);
            if (it != fixed_temp_.end()) {
                tsys_.add_variable("T[" + sid + "]", VarRole::Temperature, it->second,
                                   it->second, 0, it->second);
            } else {
                tsys_.add_variable("T[" + sid + "]", VarRole::Temperature, -kInf, kInf, 0,
                                   tcur);
            }
        }
        for (const auto& n : t_.nodes) {
            if (!thermal_node(n)) continue;
            if (n.kind == NodeKind::HeatExchanger) {
                tsys_.add_variable("Q[" + n.id + "]", VarRole::Duty, -kInf, kInf, 0, 0.0);
            } else if (n.kind == NodeKind::HeaterCooler && !n.heater.duty && !n.duty) {
                tsys_.add_variable("Q[" + n.id + "]", VarRole::Duty, -kInf, kInf, 0, 0.0);
            }
        }
        for (const auto& n : t_.nodes) {
            if (!thermal_node(n)) continue;
            switch (n.kind) {
                case NodeKind::Mixer: {
                    int row = tsys_.add_row(n.id, "energy");
                    for (const auto& in : n.inlets) enthalpy_term(row, in, 1.0);
                    enthalpy_term(row, n.outlets[0], -1.0);
                    break;
                }
                case NodeKind::Splitter: {
                    int tin = tsys_.require_variable("T[" + n.inlets[0] + "]");
                    for (const auto& out : n.outlets) {
                        int tout = tsys_.require_variable("T[" + out + "]");
                        if (tsys_.variable(tout).fixed()) continue;
                        int row = tsys_.add_row(n.id, "track:" + out);
                        tsys_.row_add(row, tout, 1.0);
                        tsys_.row_add(row, tin, -1.0);
                    }
                    break;
                }
                case NodeKind::HeaterCooler: {
                    int row = tsys_.add_row(n.id, "energy");
                    enthalpy_term(row, n.inlets[0], 1.0);
                    enthalpy_term(row, n.outlets[0], -1.0);
                    double rhs = tsys_.rows()[static_cast<std::size_t>(row)].rhs;
                    double fixed_q = 0.0;
                    bool has_fixed = false;
                    if (n.heater.duty) {
                        fixed_q = *n.heater.duty;
                        has_fixed = true;
                    } else if (n.duty) {
                        fixed_q = *n.duty;
                        has_fixed = true;
                    }
                    if (has_fixed) {
                        rhs -= fixed_q;
                        duty_[n.id] = fixed_q;
                    } else {
                        tsys_.row_add(row, tsys_.require_variable("Q[" + n.id + "]"), 1.0);
                    }
                    if (n.heater.phase_change != 0) {
                        const StreamPropertyRecord& r = rec(n.outlets[0]);
                        double latent = phase_change_duty(r.hvap ? r : rec(n.inlets[0]),
                                                          flow_[n.outlets[0]]);
                        rhs += n.heater.phase_change * latent;
                    }
                    tsys_.row_rhs(row, rhs);
                    break;
                }
                case NodeKind::HeatExchanger: {
                    const auto& hx = n.exchanger;
                    const std::string &hin = n.inlets[0], &hout = n.outlets[0];
                    const std::string &cin = n.inlets[1], &cout = n.outlets[1];
                    double phi = compute_phi(hx, flow_[hin], flow_[cin], rec(hin).cp,
                                             rec(cin).cp);
                    phi_[n.id] = phi;
                    int q = tsys_.require_variable("Q[" + n.id + "]");

                    int duty_row = tsys_.add_row(n.id, "duty");
                    tsys_.row_add(duty_row, q, 1.0);
                    tsys_.row_add(duty_row, tsys_.require_variable("T[" + hin + "]"),
                                  -phi * hx.q_base);
                    tsys_.row_add(duty_row, tsys_.require_variable("T[" + cin + "]"),
                                  phi * hx.q_base);

                    int hot = tsys_.add_row(n.id, "energy:hot");
                    enthalpy_term(hot, hin, 1.0);
                    enthalpy_term(hot, hout, -1.0);
                    tsys_.row_add(hot, q, -1.0);

                    int cold = tsys_.add_row(n.id, "energy:cold");
                    enthalpy_term(cold, cin, 1.0);
                    enthalpy_term(cold, cout, -1.0);
                    tsys_.row_add(cold, q, 1.0);
                    break;
                }
                default:
                    break;
            }
        }
        return solve_linear(tsys_, opts_);
    }

    void refresh_references() {
        for (const auto& [sid, tcur] : temp_) {
            StreamPropertyRecord r = props_.at(sid);
            if (std::abs(tcur - r.t0) < 1e-15) continue;
            if (r.correlation) {
                r = refresh_reference(r, tcur);
            } else {
                r.h0 += r.cp * (tcur - r.t0);
                r.t0 = tcur;
            }
            props_.upsert(r);
        }
    }

    void finish(HenReport& rep, bool converged = true) {
        rep.temperatures = temp_;
        rep.duties = duty_;
        rep.refreshed = props_;
        for (const auto& n : t_.nodes) {
            if (n.kind != NodeKind::HeatExchanger) continue;
            ExchangerState st;
            st.node = n.id;
            st.phi = phi_.count(n.id) ? phi_[n.id] : 0.0;
            st.q = duty_.count(n.id) ? duty_[n.id] : 0.0;
            st.th_in = temp_[n.inlets[0]];
            st.th_out = temp_[n.outlets[0]];
            st.tc_in = temp_[n.inlets[1]];
            st.tc_out = temp_[n.outlets[1]];
            rep.exchangers.push_back(st);
            if (converged) {
                const double slack = 1e-7;
                if (st.q < -slack || st.th_out > st.th_in + slack ||
                    st.tc_out < st.tc_in - slack || st.th_out < st.tc_in - slack ||
                    st.th_in < st.tc_out - slack) {
                    rep.status = SolveStatus::Infeasible;
                    rep.message = "temperature cross at exchanger '" + n.id + "'";
                    return;
                }
            }
        }
        if (converged) rep.status = SolveStatus::Converged;
    }

    const Topology& t_;
    const Scenario& sc_;
    const SolveOptions& opts_;
    PropertyTable props_;
    std::map<std::string, double> flow_;
    std::map<std::string, double> temp_;
    std::map<std::string, double> fixed_temp_;
    std::map<std::string, double> duty_;
    std::map<std::string, double> phi_;
    EquationSystem tsys_;
};

}  // namespace

HenReport hen_solve(const Topology& t, const Scenario& scenario, const SolveOptions& opts,
                    const PropertyTable* props_override) {
    HenSolver solver(t, scenario, opts, props_override);
    return solver.run();
}

}  // namespace massflow

// Command-line surface: validate, simulate, optimize, hen, cascade, compare,
// and bundled case execution over the sectioned plant-document format.
//
// Conventions:
//   - results on stdout, logs and diagnostics on stderr
//   - exit 0 = success/pass, 1 = diagnostics or solve failure, 2 = usage error
//   - every command supports --out human|csv|json; numeric output is printed
//     at 9 significant digits and is byte-identical across repeated runs
//   - tolerance precedence: --tol flag > MASSFLOW_TOL env var > default

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "massflow/cases.hpp"
#include "massflow/composite.hpp"
#include "massflow/hen.hpp"
#include "massflow/instantiate.hpp"
#include "massflow/parser.hpp"
#include "massflow/report.hpp"
#include "massflow/solvers.hpp"

namespace {

using massflow::format_number;
using json = nlohmann::ordered_json;

// Round to the printed precision so JSON numbers match the 9-digit contract.
double num9(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

struct CommonOpts {
    std::string out_format = "human";
    std::optional<double> tol_flag;
    massflow::SolveOptions solve;

    void resolve_tolerance() {
        if (tol_flag) {
            solve.tol = *tol_flag;
            return;
        }
        if (const char* env = std::getenv("MASSFLOW_TOL")) {
            char* end = nullptr;
            double v = std::strtod(env, &end);
            if (end && *end == '\0' && v > 0.0) {
                solve.tol = v;
            } else {
                std::cerr << "warning: ignoring malformed MASSFLOW_TOL='" << env << "'\n";
            }
        }
    }
};

int emit_parse_failure(const massflow::ParseResult& parsed, const CommonOpts& common) {
    std::cerr << massflow::format_diagnostics(parsed.diagnostics);
    if (common.out_format == "json") {
        json j;
        j["ok"] = false;
        j["diagnostics"] = json::array();
        for (const auto& d : parsed.diagnostics) {
            j["diagnostics"].push_back(
                {{"rule", d.rule}, {"subject", d.subject}, {"message", d.message},
                 {"line", d.line}});
        }
        std::cout << j.dump(2) << "\n";
    } else if (common.out_format == "csv") {
        std::cout << "section,id,detail,period,value\n";
        for (const auto& d : parsed.diagnostics) {
            std::cout << "diagnostic," << csv_escape(d.subject) << "," << csv_escape(d.rule)
                      << ",," << csv_escape(d.message) << "\n";
        }
    }
    return 1;
}

massflow::Scenario resolve_scenario(const massflow::Document& doc,
                                    const std::string& scenario_file,
                                    std::optional<int> periods_flag,
                                    massflow::ParseResult* bad) {
    massflow::Scenario sc = doc.scenario.value_or(massflow::Scenario{});
    if (!scenario_file.empty()) {
        massflow::ParseResult pr = massflow::parse_file(scenario_file);
        if (!pr.ok()) {
            *bad = pr;
            return sc;
        }
        if (pr.document.scenario) sc = *pr.document.scenario;
    }
    if (periods_flag) sc.periods = *periods_flag;
    return sc;
}

// Plan precedence: --plan file > document [plan] section > defaults, with
// --level/--paradigm shorthand replacing the result by a uniform plan.
massflow::AbstractionPlan resolve_plan(const massflow::Document& doc,
                                       const std::string& plan_file,
                                       const std::string& level_flag,
                                       const std::string& paradigm_flag,
                                       massflow::ParseResult* bad, std::string* flag_err) {
    massflow::AbstractionPlan plan = doc.plan.value_or(massflow::AbstractionPlan{});
    if (!plan_file.empty()) {
        massflow::ParseResult pr = massflow::parse_file(plan_file);
        if (!pr.ok()) {
            *bad = pr;
            return plan;
        }
        if (pr.document.plan) plan = *pr.document.plan;
    }
    if (!level_flag.empty() || !paradigm_flag.empty()) {
        massflow::AbstractionLevel level = plan.default_level;
        massflow::Paradigm paradigm = plan.default_paradigm;
        if (!level_flag.empty()) {
            auto l = massflow::level_from_string(level_flag);
            if (!l) {
                *flag_err = "unknown abstraction level '" + level_flag + "'";
                return plan;
            }
            level = *l;
        }
        if (!paradigm_flag.empty()) {
            auto p = massflow::paradigm_from_string(paradigm_flag);
            if (!p) {
                *flag_err = "unknown paradigm '" + paradigm_flag + "'";
                return plan;
            }
            paradigm = *p;
        }
        plan = massflow::AbstractionPlan::uniform(level, paradigm);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Solution report emission, shared by simulate / optimize / cascade.
// ---------------------------------------------------------------------------

struct SolutionView {
    std::string command;
    massflow::SolveStatus status;
    int iterations = 0;
    double residual = 0.0;
    bool has_objective = false;
    double objective = 0.0;
    std::vector<double> objective_by_period;
    massflow::TermCountReport terms;
    massflow::StreamTable table;
    double mass_closure = 0.0;
    std::vector<std::pair<std::string, std::string>> extra;  // ordered key/values
};

void emit_solution_human(const SolutionView& v) {
    std::cout << "status=" << massflow::to_string(v.status)
              << " iterations=" << v.iterations
              << " residual=" << format_number(v.residual) << "\n";
    for (const auto& [k, val] : v.extra) std::cout << k << "=" << val << "\n";
    std::cout << "term_counts rows=" << v.terms.linear_rows
              << " bilinear=" << v.terms.bilinear_terms
              << " general=" << v.terms.general_residuals << "\n";
    if (v.has_objective) {
        std::cout << "objective=" << format_number(v.objective) << "\n";
        for (std::size_t p = 0; p < v.objective_by_period.size(); ++p) {
            std::cout << "objective period=" << p << " value="
                      << format_number(v.objective_by_period[p]) << "\n";
        }
    }
    for (const auto& row : v.table.streams) {
        std::cout << "stream=" << row.stream << " period=" << row.period
                  << " total=" << format_number(row.total);
        for (const auto& [c, f] : row.component) {
            std::cout << " " << c << "=" << format_number(f);
        }
        for (const auto& [c, x] : row.fraction) {
            std::cout << " x_" << c << "=" << format_number(x);
        }
        if (row.temperature) std::cout << " T=" << format_number(*row.temperature);
        std::cout << "\n";
    }
    for (const auto& d : v.table.duties) {
        std::cout << "duty node=" << d.node;
        if (!d.side.empty()) std::cout << " side=" << d.side;
        std::cout << " period=" << d.period << " value=" << format_number(d.duty) << "\n";
    }
    std::cout << "mass_closure=" << format_number(v.mass_closure) << "\n";
}

void emit_solution_csv(const SolutionView& v) {
    std::cout << "section,id,detail,period,value\n";
    std::cout << "status,,,," << massflow::to_string(v.status) << "\n";
    std::cout << "iterations,,,," << v.iterations << "\n";
    std::cout << "residual,,,," << format_number(v.residual) << "\n";
    for (const auto& [k, val] : v.extra) std::cout << k << ",,,," << csv_escape(val) << "\n";
    std::cout << "term_counts,,rows,," << v.terms.linear_rows << "\n";
    std::cout << "term_counts,,bilinear,," << v.terms.bilinear_terms << "\n";
    std::cout << "term_counts,,general,," << v.terms.general_residuals << "\n";
    if (v.has_objective) {
        std::cout << "objective,,,," << format_number(v.objective) << "\n";
        for (std::size_t p = 0; p < v.objective_by_period.size(); ++p) {
            std::cout << "objective,,period," << p << ","
                      << format_number(v.objective_by_period[p]) << "\n";
        }
    }
    for (const auto& row : v.table.streams) {
        std::cout << "stream," << row.stream << ",total," << row.period << ","
                  << format_number(row.total) << "\n";
        for (const auto& [c, f] : row.component) {
            std::cout << "stream," << row.stream << ",comp:" << c << "," << row.period << ","
                      << format_number(f) << "\n";
        }
        for (const auto& [c, x] : row.fraction) {
            std::cout << "stream," << row.stream << ",frac:" << c << "," << row.period << ","
                      << format_number(x) << "\n";
        }
        if (row.temperature) {
            std::cout << "stream," << row.stream << ",T," << row.period << ","
                      << format_number(*row.temperature) << "\n";
        }
    }
    for (const auto& d : v.table.duties) {
        std::cout << "duty," << d.node << "," << d.side << "," << d.period << ","
                  << format_number(d.duty) << "\n";
    }
    std::cout << "mass_closure,,,," << format_number(v.mass_closure) << "\n";
}

void emit_solution_json(const SolutionView& v) {
    json j;
    j["command"] = v.command;
    j["status"] = massflow::to_string(v.status);
    j["iterations"] = v.iterations;
    j["residual"] = num9(v.residual);
    for (const auto& [k, val] : v.extra) j[k] = val;
    j["term_counts"] = {{"rows", v.terms.linear_rows},
                        {"bilinear", v.terms.bilinear_terms},
                        {"general", v.terms.general_residuals}};
    if (v.has_objective) {
        j["objective"] = num9(v.objective);
        if (!v.objective_by_period.empty()) {
            j["objective_by_period"] = json::array();
            for (double o : v.objective_by_period) j["objective_by_period"].push_back(num9(o));
        }
    }
    j["streams"] = json::array();
    for (const auto& row : v.table.streams) {
        json r;
        r["id"] = row.stream;
        r["period"] = row.period;
        r["total"] = num9(row.total);
        if (!row.component.empty()) {
            r["components"] = json::object();
            for (const auto& [c, f] : row.component) r["components"][c] = num9(f);
        }
        if (!row.fraction.empty()) {
            r["fractions"] = json::object();
            for (const auto& [c, x] : row.fraction) r["fractions"][c] = num9(x);
        }
        if (row.temperature) r["temperature"] = num9(*row.temperature);
        j["streams"].push_back(std::move(r));
    }
    j["duties"] = json::array();
    for (const auto& d : v.table.duties) {
        j["duties"].push_back({{"node", d.node}, {"side", d.side}, {"period", d.period},
                               {"duty", num9(d.duty)}});
    }
    j["mass_closure"] = num9(v.mass_closure);
    std::cout << j.dump(2) << "\n";
}

void emit_solution(const SolutionView& v, const CommonOpts& common) {
    if (common.out_format == "json") emit_solution_json(v);
    else if (common.out_format == "csv") emit_solution_csv(v);
    else emit_solution_human(v);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& file, const CommonOpts& common) {
    massflow::ParseResult parsed = massflow::parse_file(file);
    if (!parsed.ok()) return emit_parse_failure(parsed, common);
    if (common.out_format == "json") {
        json j;
        j["ok"] = true;
        j["components"] = parsed.document.topology.components.size();
        j["nodes"] = parsed.document.topology.nodes.size();
        j["streams"] = parsed.document.topology.streams.size();
        std::cout << j.dump(2) << "\n";
    } else if (common.out_format == "csv") {
        std::cout << "section,id,detail,period,value\n";
        std::cout << "ok,,,,1\n";
    } else {
        std::cout << "ok: " << parsed.document.topology.nodes.size() << " nodes, "
                  << parsed.document.topology.streams.size() << " streams, "
                  << parsed.document.topology.components.size() << " components\n";
    }
    return 0;
}

int cmd_simulate(const std::string& file, const std::string& plan_file,
                 const std::string& level_flag, const std::string& paradigm_flag,
                 const std::string& scenario_file, std::optional<int> periods_flag,
                 const CommonOpts& common) {
    massflow::ParseResult parsed = massflow::parse_file(file);
    if (!parsed.ok()) return emit_parse_failure(parsed, common);

    massflow::ParseResult bad;
    std::string flag_err;
    massflow::AbstractionPlan plan =
        resolve_plan(parsed.document, plan_file, level_flag, paradigm_flag, &bad, &flag_err);
    if (!bad.diagnostics.empty()) return emit_parse_failure(bad, common);
    if (!flag_err.empty()) {
        std::cerr << "error: " << flag_err << "\n";
        return 2;
    }
    massflow::Scenario sc =
        resolve_scenario(parsed.document, scenario_file, periods_flag, &bad);
    if (!bad.diagnostics.empty()) return emit_parse_failure(bad, common);

    massflow::EquationSystem sys;
    try {
        sys = massflow::instantiate(parsed.document.topology, plan, sc);
    } catch (const std::exception& e) {
        std::cerr << "instantiation error: " << e.what() << "\n";
        return 1;
    }
    massflow::SolveReport rep = sys.is_linear()
                                    ? massflow::solve_linear(sys, common.solve)
                                    : massflow::newton_solve(sys, sys.initial_point(),
                                                             common.solve);
    SolutionView v;
    v.command = "simulate";
    v.status = rep.status;
    v.iterations = rep.iterations;
    v.residual = rep.residual_inf;
    v.terms = sys.term_counts();
    if (rep.ok()) {
        v.has_objective = sys.has_objective();
        v.objective = sys.objective_value(rep.x);
        v.table = massflow::build_stream_table(parsed.document.topology, sys, rep.x,
                                               sc.periods);
        v.mass_closure =
            massflow::mass_closure_error(parsed.document.topology, sys, rep.x, sc.periods);
    }
    emit_solution(v, common);
    if (!rep.ok()) {
        std::cerr << "solve failed: " << massflow::to_string(rep.status)
                  << (rep.message.empty() ? "" : ": " + rep.message) << "\n";
        return 1;
    }
    return 0;
}

int cmd_optimize(const std::string& file, const std::string& plan_file,
                 const std::string& level_flag, const std::string& paradigm_flag,
                 const std::string& scenario_file, std::optional<int> periods_flag,
                 const CommonOpts& common) {
    massflow::ParseResult parsed = massflow::parse_file(file);
    if (!parsed.ok()) return emit_parse_failure(parsed, common);

    massflow::ParseResult bad;
    std::string flag_err;
    massflow::AbstractionPlan plan =
        resolve_plan(parsed.document, plan_file, level_flag, paradigm_flag, &bad, &flag_err);
    if (!bad.diagnostics.empty()) return emit_parse_failure(bad, common);
    if (!flag_err.empty()) {
        std::cerr << "error: " << flag_err << "\n";
        return 2;
    }
    massflow::Scenario sc =
        resolve_scenario(parsed.document, scenario_file, periods_flag, &bad);
    if (!bad.diagnostics.empty()) return emit_parse_failure(bad, common);

    massflow::CascadeReport rep;
    try {
        rep = massflow::optimize_multiperiod(parsed.document.topology, sc, plan,
                                             common.solve);
    } catch (const std::exception& e) {
        std::cerr << "optimization error: " << e.what() << "\n";
        return 1;
    }
    if (rep.stages.empty()) {
        std::cerr << "optimization produced no stages"
                  << (rep.message.empty() ? "" : ": " + rep.message) << "\n";
        return 1;
    }
    const massflow::SolveReport& last = rep.stages.back();
    for (std::size_t s = 0; s < rep.stages.size(); ++s) {
        std::cerr << "stage " << s << ": " << massflow::to_string(rep.stages[s].status)
                  << " objective=" << format_number(rep.objective_trace[s]) << "\n";
    }
    SolutionView v;
    v.command = "optimize";
    v.status = last.status;
    v.iterations = last.iterations;
    v.residual = last.residual_inf;
    v.extra.push_back({"stages", std::to_string(rep.stages.size())});
    std::cerr << "wall_seconds=" << format_number(rep.wall_seconds) << "\n";
    try {
        massflow::EquationSystem sys = massflow::instantiate(parsed.document.topology, plan, sc);
        v.terms = sys.term_counts();
        if (last.ok()) {
            v.mass_closure = massflow::mass_closure_error(parsed.document.topology, sys,
                                                          last.x, sc.periods);
        }
    } catch (const std::exception&) {
        // term counts are cosmetic here; the solve already succeeded or failed
    }
    if (last.ok()) {
        v.has_objective = true;
        v.objective = last.objective;
        v.objective_by_period = rep.objective_by_period;
        if (!rep.tables.empty()) v.table = rep.tables.back();
    }
    emit_solution(v, common);
    if (!last.ok()) {
        std::cerr << "optimization failed: " << massflow::to_string(last.status)
                  << (rep.message.empty() ? "" : ": " + rep.message) << "\n";
        return 1;
    }
    return 0;
}

int cmd_hen(const std::string& file, const std::string& scenario_file, double relax,
            const CommonOpts& common) {
    massflow::ParseResult parsed = massflow::parse_file(file);
    if (!parsed.ok()) return emit_parse_failure(parsed, common);
    massflow::ParseResult bad;
    massflow::Scenario sc = resolve_scenario(parsed.document, scenario_file, {}, &bad);
    if (!bad.diagnostics.empty()) return emit_parse_failure(bad, common);

    massflow::SolveOptions opts = common.solve;
    opts.relax = relax;
    massflow::HenReport rep = massflow::hen_solve(parsed.document.topology, sc, opts);

    for (const auto& it : rep.trace) {
        std::cerr << "iter " << it.iter << " max_dT=" << format_number(it.max_dt) << "\n";
    }

    if (common.out_format == "json") {
        json j;
        j["command"] = "hen";
        j["status"] = massflow::to_string(rep.status);
        j["iterations"] = rep.iterations;
        j["flows"] = json::object();
        for (const auto& [s, f] : rep.flows) j["flows"][s] = num9(f);
        j["temperatures"] = json::object();
        for (const auto& [s, t] : rep.temperatures) j["temperatures"][s] = num9(t);
        j["duties"] = json::object();
        for (const auto& [n, q] : rep.duties) j["duties"][n] = num9(q);
        j["exchangers"] = json::array();
        for (const auto& e : rep.exchangers) {
            j["exchangers"].push_back({{"node", e.node}, {"phi", num9(e.phi)},
                                       {"duty", num9(e.q)}, {"th_in", num9(e.th_in)},
                                       {"th_out", num9(e.th_out)}, {"tc_in", num9(e.tc_in)},
                                       {"tc_out", num9(e.tc_out)}});
        }
        j["trace"] = json::array();
        for (const auto& it : rep.trace) {
            j["trace"].push_back({{"iter", it.iter}, {"max_dt", num9(it.max_dt)}});
        }
        std::cout << j.dump(2) << "\n";
    } else if (common.out_format == "csv") {
        std::cout << "section,id,detail,period,value\n";
        std::cout << "status,,,," << massflow::to_string(rep.status) << "\n";
        std::cout << "iterations,,,," << rep.iterations << "\n";
        for (const auto& [s, f] : rep.flows) {
            std::cout << "flow," << s << ",,0," << format_number(f) << "\n";
        }
        for (const auto& [s, t] : rep.temperatures) {
            std::cout << "temperature," << s << ",,0," << format_number(t) << "\n";
        }
        for (const auto& [n, q] : rep.duties) {
            std::cout << "duty," << n << ",,0," << format_number(q) << "\n";
        }
        for (const auto& it : rep.trace) {
            std::cout << "trace,,max_dt," << it.iter << "," << format_number(it.max_dt)
                      << "\n";
        }
    } else {
        std::cout << "status=" << massflow::to_string(rep.status)
                  << " iterations=" << rep.iterations << "\n";
        for (const auto& [s, f] : rep.flows) {
            std::cout << "flow stream=" << s << " value=" << format_number(f) << "\n";
        }
        for (const auto& [s, t] : rep.temperatures) {
            std::cout << "temperature stream=" << s << " value=" << format_number(t) << "\n";
        }
        for (const auto& [n, q] : rep.duties) {
            std::cout << "duty node=" << n << " value=" << format_number(q) << "\n";
        }
    }
    if (!rep.ok()) {
        std::cerr << "hen solve failed: " << massflow::to_string(rep.status)
                  << (rep.message.empty() ? "" : ": " + rep.message) << "\n";
        return 1;
    }
    return 0;
}

// Schedule file: one `stage` line per cascade stage, e.g.
//   stage level=energy-fixed paradigm=flows solver=linear refresh=none hen=0
bool parse_schedule(const std::string& text, massflow::CascadeSchedule* out,
                    std::string* err) {
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::size_t hash = raw.find('#');
        std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::istringstream toks(line);
        std::string head;
        if (!(toks >> head)) continue;
        if (head != "stage") {
            *err = "line " + std::to_string(lineno) + ": expected 'stage', got '" + head + "'";
            return false;
        }
        massflow::CascadeStage stage;
        std::string tok;
        while (toks >> tok) {
            std::size_t eq = tok.find('=');
            std::string key = tok.substr(0, eq);
            std::string val = eq == std::string::npos ? "" : tok.substr(eq + 1);
            if (key == "level") {
                auto l = massflow::level_from_string(val);
                if (!l) {
                    *err = "line " + std::to_string(lineno) + ": unknown level '" + val + "'";
                    return false;
                }
                stage.plan.default_level = *l;
            } else if (key == "paradigm") {
                auto p = massflow::paradigm_from_string(val);
                if (!p) {
                    *err = "line " + std::to_string(lineno) + ": unknown paradigm '" + val +
                           "'";
                    return false;
                }
                stage.plan.default_paradigm = *p;
            } else if (key == "solver") {
                if (val == "linear") stage.solver = massflow::StageSolver::Linear;
                else if (val == "newton") stage.solver = massflow::StageSolver::Newton;
                else if (val == "simplex") stage.solver = massflow::StageSolver::Simplex;
                else if (val == "slp") stage.solver = massflow::StageSolver::Slp;
                else {
                    *err = "line " + std::to_string(lineno) + ": unknown solver '" + val + "'";
                    return false;
                }
            } else if (key == "refresh") {
                if (val == "none") stage.refresh = massflow::PropertyRefresh::None;
                else if (val == "local") stage.refresh = massflow::PropertyRefresh::Local;
                else if (val == "rigorous")
                    stage.refresh = massflow::PropertyRefresh::Rigorous;
                else {
                    *err = "line " + std::to_string(lineno) + ": unknown refresh '" + val +
                           "'";
                    return false;
                }
            } else if (key == "hen") {
                stage.include_hen = val == "1" || val == "true";
            } else {
                *err = "line " + std::to_string(lineno) + ": unknown key '" + key + "'";
                return false;
            }
        }
        out->stages.push_back(std::move(stage));
    }
    if (out->stages.empty()) {
        *err = "schedule has no stages";
        return false;
    }
    return true;
}

int cmd_cascade(const std::string& file, const std::string& schedule_file,
                const CommonOpts& common) {
    massflow::ParseResult parsed = massflow::parse_file(file);
    if (!parsed.ok()) return emit_parse_failure(parsed, common);
    massflow::Scenario sc = parsed.document.scenario.value_or(massflow::Scenario{});
    massflow::AbstractionPlan plan =
        parsed.document.plan.value_or(massflow::AbstractionPlan{});

    massflow::CascadeSchedule schedule;
    if (!schedule_file.empty()) {
        std::ifstream in(schedule_file);
        if (!in) {
            std::cerr << "cannot open schedule file '" << schedule_file << "'\n";
            return 1;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        std::string err;
        if (!parse_schedule(buf.str(), &schedule, &err)) {
            std::cerr << "schedule error: " << err << "\n";
            return 1;
        }
    } else {
        // Default: fixed-enthalpy linear pass, then the document's own plan
        // solved by Newton with rigorous property refresh.
        massflow::CascadeStage coarse;
        coarse.plan = massflow::AbstractionPlan::uniform(
            massflow::AbstractionLevel::MassEnergyFixedH, plan.default_paradigm);
        coarse.solver = massflow::StageSolver::Linear;
        massflow::CascadeStage fine;
        fine.plan = plan;
        fine.solver = massflow::StageSolver::Newton;
        fine.refresh = massflow::PropertyRefresh::Rigorous;
        schedule.stages = {coarse, fine};
    }

    massflow::CascadeReport rep;
    try {
        rep = massflow::solve_cascade(parsed.document.topology, sc, schedule, common.solve);
    } catch (const std::exception& e) {
        std::cerr << "cascade error: " << e.what() << "\n";
        return 1;
    }
    if (rep.stages.empty()) {
        std::cerr << "cascade produced no stages"
                  << (rep.message.empty() ? "" : ": " + rep.message) << "\n";
        return 1;
    }
    for (std::size_t s = 0; s < rep.stages.size(); ++s) {
        std::cerr << "stage " << s << ": " << massflow::to_string(rep.stages[s].status)
                  << " inherited=" << rep.inherited[s].size()
                  << " outer=" << rep.outer_iterations[s] << "\n";
    }
    const massflow::SolveReport& last = rep.stages.back();
    SolutionView v;
    v.command = "cascade";
    v.status = last.status;
    v.iterations = last.iterations;
    v.residual = last.residual_inf;
    v.extra.push_back({"stages", std::to_string(rep.stages.size())});
    v.extra.push_back(
        {"outer_iterations", std::to_string(rep.outer_iterations.back())});
    std::cerr << "wall_seconds=" << format_number(rep.wall_seconds) << "\n";
    if (last.ok() && !rep.tables.empty()) {
        v.table = rep.tables.back();
        v.has_objective = false;
    }
    emit_solution(v, common);
    if (!rep.ok()) {
        std::cerr << "cascade failed: "
                  << (rep.message.empty() ? massflow::to_string(last.status) : rep.message)
                  << "\n";
        return 1;
    }
    return 0;
}

int cmd_compare(const std::string& file, bool paradigms, const CommonOpts& common) {
    if (!paradigms) {
        std::cerr << "compare requires --paradigms\n";
        return 2;
    }
    massflow::ParseResult parsed = massflow::parse_file(file);
    if (!parsed.ok()) return emit_parse_failure(parsed, common);
    massflow::Scenario sc = parsed.document.scenario.value_or(massflow::Scenario{});
    massflow::AbstractionPlan base =
        parsed.document.plan.value_or(massflow::AbstractionPlan{});

    massflow::AbstractionPlan frac = massflow::AbstractionPlan::uniform(
        base.default_level, massflow::Paradigm::FractionsBased);
    // Linear reactors are defined on component flows only; keep them there
    // so the rest of the plant can be compared under fractions.
    for (const auto& n : parsed.document.topology.nodes) {
        if (n.kind == massflow::NodeKind::LinearReactor) {
            frac.overrides[{n.id, -1}] = {base.default_level,
                                          massflow::Paradigm::ComponentFlows};
        }
    }
    massflow::AbstractionPlan flows = massflow::AbstractionPlan::uniform(
        base.default_level, massflow::Paradigm::ComponentFlows);

    massflow::TermCountReport tf, tw;
    try {
        tf = massflow::instantiate(parsed.document.topology, frac, sc).term_counts();
        tw = massflow::instantiate(parsed.document.topology, flows, sc).term_counts();
    } catch (const std::exception& e) {
        std::cerr << "instantiation error: " << e.what() << "\n";
        return 1;
    }

    // Node rows in declaration order; absent nodes contribute zero terms.
    std::vector<std::string> node_ids;
    for (const auto& n : parsed.document.topology.nodes) node_ids.push_back(n.id);
    auto count_of = [](const massflow::TermCountReport& r, const std::string& id) {
        auto it = r.bilinear_by_node.find(id);
        return it == r.bilinear_by_node.end() ? 0 : it->second;
    };

    if (common.out_format == "json") {
        json j;
        j["command"] = "compare";
        j["mode"] = "paradigms";
        j["nodes"] = json::array();
        for (const auto& id : node_ids) {
            j["nodes"].push_back({{"node", id},
                                  {"fractions_bilinear", count_of(tf, id)},
                                  {"flows_bilinear", count_of(tw, id)}});
        }
        j["totals"] = {{"fractions_bilinear", tf.bilinear_terms},
                       {"flows_bilinear", tw.bilinear_terms},
                       {"fractions_rows", tf.linear_rows},
                       {"flows_rows", tw.linear_rows}};
        std::cout << j.dump(2) << "\n";
    } else if (common.out_format == "csv") {
        std::cout << "section,id,detail,period,value\n";
        for (const auto& id : node_ids) {
            std::cout << "bilinear," << id << ",fractions,," << count_of(tf, id) << "\n";
            std::cout << "bilinear," << id << ",flows,," << count_of(tw, id) << "\n";
        }
        std::cout << "total,,fractions,," << tf.bilinear_terms << "\n";
        std::cout << "total,,flows,," << tw.bilinear_terms << "\n";
    } else {
        std::cout << "node fractions_bilinear flows_bilinear\n";
        for (const auto& id : node_ids) {
            std::cout << id << " " << count_of(tf, id) << " " << count_of(tw, id) << "\n";
        }
        std::cout << "TOTAL " << tf.bilinear_terms << " " << tw.bilinear_terms << "\n";
    }
    return 0;
}

int cmd_case_run(const std::string& name, const CommonOpts& common) {
    const massflow::CaseBundle* bundle = massflow::find_case(name);
    if (!bundle) {
        std::cerr << "unknown case '" << name << "'; try 'case list'\n";
        return 1;
    }
    massflow::CaseResult result = massflow::run_case(name, common.solve);
    if (common.out_format == "json") {
        json j;
        j["command"] = "case run";
        j["case"] = result.name;
        j["status"] = massflow::to_string(result.status);
        j["pass"] = result.ok;
        j["checks"] = json::array();
        for (const auto& c : result.checks) {
            json e;
            e["kind"] = c.entry.kind;
            if (!c.entry.stream.empty()) e["stream"] = c.entry.stream;
            if (!c.entry.node.empty()) e["node"] = c.entry.node;
            if (!c.entry.outlet.empty()) e["outlet"] = c.entry.outlet;
            if (!c.entry.comp.empty()) e["comp"] = c.entry.comp;
            if (!c.entry.field.empty()) e["field"] = c.entry.field;
            e["period"] = c.entry.period;
            e["expected"] = num9(c.entry.value);
            if (c.found) e["actual"] = num9(c.actual);
            e["tol"] = num9(c.entry.tol);
            e["oracle"] = c.entry.oracle;
            e["pass"] = c.pass;
            j["checks"].push_back(std::move(e));
        }
        std::cout << j.dump(2) << "\n";
    } else if (common.out_format == "csv") {
        std::cout << "section,id,detail,period,value\n";
        std::cout << "case,,name,," << csv_escape(result.name) << "\n";
        std::cout << "case,,pass,," << (result.ok ? 1 : 0) << "\n";
        for (const auto& c : result.checks) {
            std::string id = !c.entry.stream.empty() ? c.entry.stream : c.entry.node;
            std::cout << "check," << csv_escape(id) << "," << c.entry.kind << ","
                      << c.entry.period << "," << (c.pass ? "pass" : "fail") << "\n";
        }
    } else {
        std::cout << massflow::format_case_table(result);
    }
    return result.ok ? 0 : 1;
}

int cmd_case_list(const CommonOpts& common) {
    if (common.out_format == "json") {
        json j = json::array();
        for (const auto& b : massflow::case_registry()) {
            j.push_back({{"name", b.name}, {"pipeline", b.pipeline},
                         {"description", b.description}});
        }
        std::cout << j.dump(2) << "\n";
    } else if (common.out_format == "csv") {
        std::cout << "section,id,detail,period,value\n";
        for (const auto& b : massflow::case_registry()) {
            std::cout << "case," << b.name << "," << b.pipeline << ",,"
                      << csv_escape(b.description) << "\n";
        }
    } else {
        for (const auto& b : massflow::case_registry()) {
            std::cout << b.name << " [" << b.pipeline << "] " << b.description << "\n";
        }
    }
    return 0;
}

int cmd_case_show(const std::string& name) {
    const massflow::CaseBundle* bundle = massflow::find_case(name);
    if (!bundle) {
        std::cerr << "unknown case '" << name << "'; try 'case list'\n";
        return 1;
    }
    std::cout << bundle->document;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plant-model abstraction workbench"};
    app.require_subcommand(1);
    app.set_help_flag("-h,--help", "print usage");

    CommonOpts common;
    std::string file, plan_file, scenario_file, schedule_file, case_name;
    std::string level_flag, paradigm_flag;
    std::optional<int> periods_flag;
    double relax = 1.0;
    bool paradigms = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", common.out_format, "output format")
            ->check(CLI::IsMember({"human", "csv", "json"}));
        cmd->add_option("--tol", common.tol_flag,
                        "residual tolerance (overrides MASSFLOW_TOL)");
    };
    auto add_model_flags = [&](CLI::App* cmd) {
        cmd->add_option("--plan", plan_file, "plan document file");
        cmd->add_option("--level", level_flag, "uniform abstraction level shorthand");
        cmd->add_option("--paradigm", paradigm_flag, "uniform stream paradigm shorthand");
        cmd->add_option("--scenario", scenario_file, "scenario document file");
        cmd->add_option("--periods", periods_flag, "override scenario period count");
    };

    CLI::App* validate = app.add_subcommand("validate", "parse and validate a document");
    validate->add_option("file", file, "plant document")->required();
    add_common(validate);

    CLI::App* simulate = app.add_subcommand("simulate", "solve one model incarnation");
    simulate->add_option("file", file, "plant document")->required();
    add_model_flags(simulate);
    add_common(simulate);

    CLI::App* optimize = app.add_subcommand("optimize", "multi-period optimization");
    optimize->add_option("file", file, "plant document")->required();
    add_model_flags(optimize);
    add_common(optimize);

    CLI::App* hen = app.add_subcommand("hen", "heat-exchanger network solve");
    hen->add_option("file", file, "plant document")->required();
    hen->add_option("--scenario", scenario_file, "scenario document file");
    hen->add_option("--relax", relax, "temperature update relaxation in (0,1]");
    add_common(hen);

    CLI::App* cascade = app.add_subcommand("cascade", "staged coarse-to-fine solve");
    cascade->add_option("file", file, "plant document")->required();
    cascade->add_option("--schedule", schedule_file, "schedule file (stage lines)");
    add_common(cascade);

    CLI::App* compare = app.add_subcommand("compare", "paradigm term-count comparison");
    compare->add_option("file", file, "plant document")->required();
    compare->add_flag("--paradigms", paradigms, "compare fractions vs component flows");
    add_common(compare);

    CLI::App* case_cmd = app.add_subcommand("case", "bundled example cases");
    case_cmd->require_subcommand(1);
    CLI::App* case_run = case_cmd->add_subcommand("run", "run a case and check oracles");
    case_run->add_option("name", case_name, "case name")->required();
    add_common(case_run);
    CLI::App* case_list = case_cmd->add_subcommand("list", "list bundled cases");
    add_common(case_list);
    CLI::App* case_show = case_cmd->add_subcommand("show", "print a case document");
    case_show->add_option("name", case_name, "case name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    common.resolve_tolerance();

    try {
        if (validate->parsed()) return cmd_validate(file, common);
        if (simulate->parsed()) {
            return cmd_simulate(file, plan_file, level_flag, paradigm_flag, scenario_file,
                                periods_flag, common);
        }
        if (optimize->parsed()) {
            return cmd_optimize(file, plan_file, level_flag, paradigm_flag, scenario_file,
                                periods_flag, common);
        }
        if (hen->parsed()) return cmd_hen(file, scenario_file, relax, common);
        if (cascade->parsed()) return cmd_cascade(file, schedule_file, common);
        if (compare->parsed()) return cmd_compare(file, paradigms, common);
        if (case_cmd->parsed()) {
            if (case_run->parsed()) return cmd_case_run(case_name, common);
            if (case_list->parsed()) return cmd_case_list(common);
            if (case_show->parsed()) return cmd_case_show(case_name);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << app.help();
    return 2;
}

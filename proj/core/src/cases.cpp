#include "massflow/cases.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "massflow/composite.hpp"
#include "massflow/hen.hpp"
#include "massflow/instantiate.hpp"
#include "massflow/parser.hpp"

namespace massflow {

namespace cases_text {
extern const char* const prototypical_plant;
extern const char* const prototypical_expected;
extern const char* const prototypical_opt_plant;
extern const char* const prototypical_opt_expected;
extern const char* const hen_train_plant;
extern const char* const hen_train_expected;
extern const char* const heated_recycle_plant;
extern const char* const heated_recycle_expected;
extern const char* const h2_atr_wgs_plant;
extern const char* const h2_atr_wgs_expected;
extern const char* const h2_atr_wgs_rto_plant;
extern const char* const h2_atr_wgs_rto_expected;
}  // namespace cases_text

std::vector<ExpectedEntry> parse_expected(const std::string& text) {
    std::vector<ExpectedEntry> out;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::size_t hash = raw.find('#');
        std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '[') continue;  // section header

        ExpectedEntry e;
        std::istringstream toks(line);
        std::string tok;
        while (toks >> tok) {
            std::size_t eq = tok.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("expected-results line " + std::to_string(lineno) +
                                         ": token '" + tok + "' is not key=value");
            }
            std::string key = tok.substr(0, eq);
            std::string val = tok.substr(eq + 1);
            if (key == "kind") e.kind = val;
            else if (key == "stream") e.stream = val;
            else if (key == "node") e.node = val;
            else if (key == "outlet") e.outlet = val;
            else if (key == "comp") e.comp = val;
            else if (key == "field") e.field = val;
            else if (key == "period") e.period = std::stoi(val);
            else if (key == "value") e.value = std::stod(val);
            else if (key == "tol") e.tol = std::stod(val);
            else if (key == "rel") e.rel = val == "1" || val == "true";
            else if (key == "oracle") e.oracle = val;
            else {
                throw std::runtime_error("expected-results line " + std::to_string(lineno) +
                                         ": unknown key '" + key + "'");
            }
        }
        if (e.kind.empty() || e.oracle.empty()) {
            throw std::runtime_error("expected-results line " + std::to_string(lineno) +
                                     ": kind= and oracle= are required");
        }
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

CaseBundle make_bundle(const std::string& name, const std::string& description,
                       const std::string& pipeline, const char* doc, const char* expected) {
    CaseBundle b;
    b.name = name;
    b.description = description;
    b.pipeline = pipeline;
    b.document = doc;
    b.expected_document = expected;
    b.expected = parse_expected(b.expected_document);
    return b;
}

std::vector<CaseBundle> build_registry() {
    std::vector<CaseBundle> reg;
    reg.push_back(make_bundle(
        "prototypical", "recycle plant with fixed split, hand-solved mass balance",
        "simulate", cases_text::prototypical_plant, cases_text::prototypical_expected));
    reg.push_back(make_bundle(
        "prototypical_opt", "recycle plant with free split ratio and feed capacity bound",
        "optimize", cases_text::prototypical_opt_plant,
        cases_text::prototypical_opt_expected));
    reg.push_back(make_bundle(
        "hen_train", "two-exchanger recycle preheat train at its base fixed point", "hen",
        cases_text::hen_train_plant, cases_text::hen_train_expected));
    reg.push_back(make_bundle(
        "heated_recycle", "heated recycle loop solved by a fixed-to-rigorous cascade",
        "cascade", cases_text::heated_recycle_plant, cases_text::heated_recycle_expected));
    reg.push_back(make_bundle(
        "h2_atr_wgs", "hydrogen from natural gas: ATR + WGS with water recycle",
        "simulate", cases_text::h2_atr_wgs_plant, cases_text::h2_atr_wgs_expected));
    reg.push_back(make_bundle(
        "h2_atr_wgs_rto", "6-period hydrogen plant with tariff spike and storage",
        "optimize", cases_text::h2_atr_wgs_rto_plant, cases_text::h2_atr_wgs_rto_expected));
    return reg;
}

bool entry_passes(const ExpectedEntry& e, double actual) {
    double bar = e.rel ? e.tol * std::abs(e.value) : e.tol;
    return std::abs(actual - e.value) <= bar;
}

/// Value of a named variable in a solution, by the instantiation's naming
/// scheme. found=false when the variable does not exist.
bool lookup(const EquationSystem& sys, const std::vector<double>& x, const std::string& name,
            double* out) {
    int i = sys.find_variable(name);
    if (i < 0 || static_cast<std::size_t>(i) >= x.size()) return false;
    *out = x[static_cast<std::size_t>(i)];
    return true;
}

struct PipelineOutput {
    SolveStatus status = SolveStatus::IterationLimit;
    std::string message;
    EquationSystem sys;        // final-stage system for variable lookup
    std::vector<double> x;     // final-stage solution
    double objective = 0.0;
    bool has_objective = false;
    const HenReport* hen = nullptr;
};

}  // namespace

const std::vector<CaseBundle>& case_registry() {
    static const std::vector<CaseBundle> reg = build_registry();
    return reg;
}

const CaseBundle* find_case(const std::string& name) {
    for (const auto& b : case_registry()) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

CaseResult run_case(const std::string& name, const SolveOptions& opts) {
    const CaseBundle* bundle = find_case(name);
    if (!bundle) throw std::invalid_argument("unknown case '" + name + "'");

    CaseResult result;
    result.name = name;

    ParseResult parsed = parse_document(bundle->document);
    if (!parsed.ok()) {
        result.message = "document diagnostics:\n" + format_diagnostics(parsed.diagnostics);
        return result;
    }
    const Topology& t = parsed.document.topology;
    Scenario sc = parsed.document.scenario.value_or(Scenario{});
    AbstractionPlan plan = parsed.document.plan.value_or(AbstractionPlan{});

    PipelineOutput out;
    HenReport hen_rep;
    if (bundle->pipeline == "simulate") {
        out.sys = instantiate(t, plan, sc);
        SolveReport rep = solve_linear(out.sys, opts);
        out.status = rep.status;
        out.message = rep.message;
        if (rep.ok()) {
            out.x = rep.x;
            out.objective = out.sys.objective_value(rep.x);
            out.has_objective = out.sys.has_objective();
        }
    } else if (bundle->pipeline == "optimize") {
        CascadeReport rep = optimize_multiperiod(t, sc, plan, opts);
        out.sys = instantiate(t, plan, sc);
        if (rep.stages.empty()) {
            out.message = rep.message.empty() ? "no stages ran" : rep.message;
        } else {
            const SolveReport& last = rep.stages.back();
            out.status = last.status;
            out.message = rep.message;
            if (last.ok()) {
                out.x = last.x;
                out.objective = last.objective;
                out.has_objective = true;
            }
        }
    } else if (bundle->pipeline == "hen") {
        hen_rep = hen_solve(t, sc, opts);
        out.status = hen_rep.status;
        out.message = hen_rep.message;
        out.hen = &hen_rep;
    } else if (bundle->pipeline == "cascade") {
        CascadeSchedule schedule;
        CascadeStage coarse;
        coarse.plan = AbstractionPlan::uniform(AbstractionLevel::MassEnergyFixedH,
                                               plan.default_paradigm);
        coarse.solver = StageSolver::Linear;
        CascadeStage fine;
        fine.plan = plan;
        fine.solver = StageSolver::Newton;
        fine.refresh = PropertyRefresh::Rigorous;
        schedule.stages = {coarse, fine};
        CascadeReport rep = solve_cascade(t, sc, schedule, opts);
        out.sys = instantiate(t, plan, sc);
        if (rep.stages.empty()) {
            out.message = rep.message.empty() ? "no stages ran" : rep.message;
        } else {
            const SolveReport& last = rep.stages.back();
            out.status = last.status;
            out.message = rep.message.empty() ? last.message : rep.message;
            if (last.ok()) out.x = last.x;
        }
    } else {
        result.message = "unknown pipeline '" + bundle->pipeline + "'";
        return result;
    }

    result.status = out.status;
    result.message = out.message;
    bool solver_ok =
        out.status == SolveStatus::Converged || out.status == SolveStatus::Optimal;

    bool all_pass = solver_ok;
    for (const ExpectedEntry& e : bundle->expected) {
        CaseCheck check;
        check.entry = e;
        if (solver_ok) {
            if (e.kind == "termcount") {
                TermCountReport counts =
                    out.hen ? TermCountReport{} : out.sys.term_counts();
                if (e.field == "bilinear") {
                    check.actual = counts.bilinear_terms;
                    check.found = true;
                } else if (e.field == "rows") {
                    check.actual = counts.linear_rows;
                    check.found = true;
                }
            } else if (e.kind == "objective") {
                check.found = out.has_objective;
                check.actual = out.objective;
            } else if (out.hen) {
                const HenReport& h = *out.hen;
                if (e.kind == "flow") {
                    auto it = h.flows.find(e.stream);
                    if (it != h.flows.end()) {
                        check.actual = it->second;
                        check.found = true;
                    }
                } else if (e.kind == "temp") {
                    auto it = h.temperatures.find(e.stream);
                    if (it != h.temperatures.end()) {
                        check.actual = it->second;
                        check.found = true;
                    }
                } else if (e.kind == "duty") {
                    auto it = h.duties.find(e.node);
                    if (it != h.duties.end()) {
                        check.actual = it->second;
                        check.found = true;
                    }
                }
            } else {
                std::string var;
                if (e.kind == "flow") var = var_total(e.stream, e.period);
                else if (e.kind == "comp") var = var_comp(e.stream, e.comp, e.period);
                else if (e.kind == "temp") var = var_temp(e.stream, e.period);
                else if (e.kind == "duty") var = var_duty(e.node, e.period);
                else if (e.kind == "alpha") var = var_ratio(e.node, e.outlet, e.period);
                else if (e.kind == "inventory") var = var_inventory(e.node, e.period);
                check.found = !var.empty() && lookup(out.sys, out.x, var, &check.actual);
            }
            check.pass = check.found && entry_passes(e, check.actual);
        }
        all_pass = all_pass && check.pass;
        result.checks.push_back(std::move(check));
    }
    result.ok = all_pass;
    if (!result.ok && result.message.empty()) result.message = "expected-results mismatch";
    return result;
}

std::string format_case_table(const CaseResult& result) {
    std::ostringstream out;
    out << "case " << result.name << ": " << to_string(result.status);
    if (!result.message.empty() && !result.ok) out << " (" << result.message << ")";
    out << "\n";
    for (const auto& c : result.checks) {
        const ExpectedEntry& e = c.entry;
        out << (c.pass ? "PASS" : "FAIL") << " " << e.kind;
        if (!e.stream.empty()) out << " " << e.stream;
        if (!e.node.empty()) out << " " << e.node;
        if (!e.outlet.empty()) out << ":" << e.outlet;
        if (!e.comp.empty()) out << "." << e.comp;
        if (!e.field.empty()) out << " " << e.field;
        out << " @" << e.period;
        out << " expected=" << format_number(e.value);
        if (c.found) out << " actual=" << format_number(c.actual);
        else out << " actual=missing";
        out << " tol=" << format_number(e.tol) << (e.rel ? " (rel)" : "");
        out << " oracle=" << e.oracle << "\n";
    }
    out << (result.ok ? "RESULT pass" : "RESULT fail") << "\n";
    return out.str();
}

}  // namespace massflow

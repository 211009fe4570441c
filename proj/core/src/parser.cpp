#include "massflow/parser.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace massflow {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string format_number_exact(double v) {
    char buf[40];
    for (int prec = 9; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

struct Field {
    std::string key;
    std::string value;
};

struct Record {
    int line = 0;
    std::vector<Field> fields;

    const std::string* get(const std::string& key) const {
        for (const auto& f : fields) {
            if (f.key == key) return &f.value;
        }
        return nullptr;
    }
};

class RecordParser {
  public:
    explicit RecordParser(std::vector<Diagnostic>& diags) : diags_(diags) {}

    // Splits "key=value key=value" with optional double-quoted values.
    std::optional<Record> parse_line(const std::string& line, int lineno) {
        Record rec;
        rec.line = lineno;
        std::size_t i = 0;
        auto skip_ws = [&] {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        };
        skip_ws();
        while (i < line.size()) {
            std::size_t key_start = i;
            while (i < line.size() && line[i] != '=' &&
                   !std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
            }
            if (i >= line.size() || line[i] != '=') {
                error(lineno, static_cast<int>(key_start) + 1, "expected key=value pair");
                return std::nullopt;
            }
            std::string key = line.substr(key_start, i - key_start);
            if (key.empty()) {
                error(lineno, static_cast<int>(key_start) + 1, "empty key before '='");
                return std::nullopt;
            }
            ++i;  // consume '='
            std::string value;
            if (i < line.size() && line[i] == '"') {
                ++i;
                std::size_t close = line.find('"', i);
                if (close == std::string::npos) {
                    error(lineno, static_cast<int>(i), "unterminated quoted value");
                    return std::nullopt;
                }
                value = line.substr(i, close - i);
                i = close + 1;
            } else {
                std::size_t value_start = i;
                while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
                value = line.substr(value_start, i - value_start);
            }
            rec.fields.push_back({key, value});
            skip_ws();
        }
        if (rec.fields.empty()) return std::nullopt;
        return rec;
    }

    void error(int line, int col, const std::string& msg) {
        std::string full = msg;
        if (col > 0) full += " (column " + std::to_string(col) + ")";
        diags_.push_back({"syntax-error", "", full, line});
    }

  private:
    std::vector<Diagnostic>& diags_;
};

class DocumentReader {
  public:
    explicit DocumentReader(ParseResult& result)
        : result_(result), rp_(result.diagnostics) {}

    void read(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        int lineno = 0;
        std::string section;
        while (std::getline(in, raw)) {
            ++lineno;
            std::string line = strip_comment(raw);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            std::size_t first = line.find_first_not_of(" \t");
            if (line[first] == '[') {
                std::size_t close = line.find(']', first);
                if (close == std::string::npos) {
                    rp_.error(lineno, static_cast<int>(first) + 1, "unterminated section header");
                    continue;
                }
                section = line.substr(first + 1, close - first - 1);
                if (section != "components" && section != "properties" && section != "nodes" &&
                    section != "streams" && section != "scenario" && section != "plan") {
                    diag("unknown-section", section, "unknown section name", lineno);
                    section.clear();
                }
                continue;
            }
            if (section.empty()) {
                rp_.error(lineno, static_cast<int>(first) + 1,
                          "record outside any [section]");
                continue;
            }
            auto rec = rp_.parse_line(line, lineno);
            if (!rec) continue;
            dispatch(section, *rec);
        }
    }

  private:
    void dispatch(const std::string& section, const Record& rec) {
        if (section == "components") read_component(rec);
        else if (section == "properties") read_property(rec);
        else if (section == "nodes") read_node(rec);
        else if (section == "streams") read_stream(rec);
        else if (section == "scenario") read_scenario(rec);
        else if (section == "plan") read_plan(rec);
    }

    void diag(const std::string& rule, const std::string& subject, const std::string& msg,
              int line) {
        result_.diagnostics.push_back({rule, subject, msg, line});
    }

    std::optional<double> to_number(const Record& rec, const std::string& key,
                                    const std::string& value) {
        char* end = nullptr;
        double v = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || *end != '\0') {
            diag("syntax-error", key, "'" + value + "' is not a number", rec.line);
            return std::nullopt;
        }
        return v;
    }

    std::optional<double> require_number(const Record& rec, const std::string& key) {
        const std::string* v = rec.get(key);
        if (!v) {
            diag("missing-field", key, "required field '" + key + "' missing", rec.line);
            return std::nullopt;
        }
        return to_number(rec, key, *v);
    }

    std::optional<double> optional_number(const Record& rec, const std::string& key) {
        const std::string* v = rec.get(key);
        if (!v) return std::nullopt;
        return to_number(rec, key, *v);
    }

    std::vector<std::string> split_list(const std::string& value) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : value) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty() || !out.empty()) out.push_back(cur);
        return out;
    }

    std::vector<double> number_list(const Record& rec, const std::string& key,
                                    const std::string& value) {
        std::vector<double> out;
        for (const auto& tok : split_list(value)) {
            auto v = to_number(rec, key, tok);
            if (v) out.push_back(*v);
        }
        return out;
    }

    // "CH4:0.95,C2H6:0.05" -> ordered (id, value) pairs.
    std::vector<std::pair<std::string, double>> pair_list(const Record& rec,
                                                          const std::string& key,
                                                          const std::string& value) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& tok : split_list(value)) {
            std::size_t colon = tok.rfind(':');
            if (colon == std::string::npos) {
                diag("syntax-error", key, "expected id:value in '" + tok + "'", rec.line);
                continue;
            }
            auto v = to_number(rec, key, tok.substr(colon + 1));
            if (v) out.emplace_back(tok.substr(0, colon), *v);
        }
        return out;
    }

    bool truthy(const std::string& v) { return v == "true" || v == "1" || v == "yes"; }

    void read_component(const Record& rec) {
        const std::string* id = rec.get("id");
        if (!id) {
            diag("missing-field", "id", "component record needs id=", rec.line);
            return;
        }
        Component c;
        c.id = *id;
        if (const std::string* d = rec.get("description")) c.description = *d;
        topo().components.push_back(c);
    }

    void read_property(const Record& rec) {
        const std::string* sid = rec.get("stream");
        if (!sid) {
            diag("missing-field", "stream", "property record needs stream=", rec.line);
            return;
        }
        StreamPropertyRecord r;
        r.stream = *sid;
        if (auto v = require_number(rec, "T0")) r.t0 = *v;
        if (auto v = require_number(rec, "H0")) r.h0 = *v;
        if (auto v = require_number(rec, "Cp")) r.cp = *v;
        if (auto v = optional_number(rec, "Hvap")) r.hvap = *v;
        if (auto v = optional_number(rec, "P")) r.pressure = *v;
        if (rec.get("c0") || rec.get("c1") || rec.get("c2") || rec.get("c3")) {
            EnthalpyCorrelation corr;
            if (auto v = optional_number(rec, "c0")) corr.c0 = *v;
            if (auto v = optional_number(rec, "c1")) corr.c1 = *v;
            if (auto v = optional_number(rec, "c2")) corr.c2 = *v;
            if (auto v = optional_number(rec, "c3")) corr.c3 = *v;
            if (auto v = optional_number(rec, "Tmin")) corr.t_min = *v;
            if (auto v = optional_number(rec, "Tmax")) corr.t_max = *v;
            r.correlation = corr;
        }
        if (r.cp <= 0.0) diag("property-cp", r.stream, "Cp must be positive", rec.line);
        if (r.t0 <= 0.0) diag("property-t0", r.stream, "T0 must be positive", rec.line);
        if (r.correlation) {
            // dH/dT must stay positive over the declared range (sampled).
            const auto& c = *r.correlation;
            for (int i = 0; i <= 32; ++i) {
                double t = c.t_min + (c.t_max - c.t_min) * i / 32.0;
                if (c.slope(t) <= 0.0) {
                    diag("property-correlation", r.stream,
                         "correlation slope nonpositive inside valid range", rec.line);
                    break;
                }
            }
        }
        topo().properties.upsert(r);
    }

    void read_node(const Record& rec) {
        const std::string* id = rec.get("id");
        const std::string* kind_s = rec.get("kind");
        if (!id || !kind_s) {
            diag("missing-field", id ? *id : "", "node record needs id= and kind=", rec.line);
            return;
        }
        auto kind = node_kind_from_string(*kind_s);
        if (!kind) {
            diag("unknown-node-kind", *id, "unknown node kind '" + *kind_s + "'", rec.line);
            return;
        }
        NodeDef n;
        n.id = *id;
        n.kind = *kind;
        if (const std::string* v = rec.get("in")) n.inlets = split_list(*v);
        if (const std::string* v = rec.get("out")) n.outlets = split_list(*v);
        if (auto v = optional_number(rec, "duty")) n.duty = *v;

        switch (n.kind) {
            case NodeKind::Splitter:
                if (const std::string* v = rec.get("alpha")) {
                    n.splitter.fixed_fractions = number_list(rec, "alpha", *v);
                }
                break;
            case NodeKind::ComponentSeparator:
                read_separator(rec, n);
                break;
            case NodeKind::LinearReactor:
                read_reactor(rec, n);
                break;
            case NodeKind::HeatExchanger:
                if (auto v = require_number(rec, "Q_base")) n.exchanger.q_base = *v;
                if (auto v = require_number(rec, "Th_in_base")) n.exchanger.th_in_base = *v;
                if (auto v = require_number(rec, "Tc_in_base")) n.exchanger.tc_in_base = *v;
                if (auto v = require_number(rec, "F_hot_base")) n.exchanger.f_hot_base = *v;
                if (auto v = require_number(rec, "F_cold_base")) n.exchanger.f_cold_base = *v;
                if (auto v = require_number(rec, "UA")) n.exchanger.ua = *v;
                break;
            case NodeKind::HeaterCooler:
                if (auto v = optional_number(rec, "Q")) n.heater.duty = *v;
                if (auto v = optional_number(rec, "Q_min")) n.heater.duty_min = *v;
                if (auto v = optional_number(rec, "Q_max")) n.heater.duty_max = *v;
                if (const std::string* v = rec.get("electric")) n.heater.electric = truthy(*v);
                if (const std::string* v = rec.get("phase_change")) {
                    if (*v == "vaporize") n.heater.phase_change = 1;
                    else if (*v == "condense") n.heater.phase_change = -1;
                    else diag("syntax-error", n.id, "phase_change must be vaporize|condense",
                              rec.line);
                }
                break;
            case NodeKind::Source:
                if (const std::string* v = rec.get("price")) {
                    n.source.price = number_list(rec, "price", *v);
                }
                if (auto v = optional_number(rec, "flow")) n.source.flow = *v;
                if (auto v = optional_number(rec, "flow_min")) n.source.flow_min = *v;
                if (auto v = optional_number(rec, "flow_max")) n.source.flow_max = *v;
                if (const std::string* v = rec.get("comp")) {
                    for (const auto& [cid, frac] : pair_list(rec, "comp", *v)) {
                        n.source.composition[cid] = frac;
                    }
                }
                break;
            case NodeKind::Sink:
                if (const std::string* v = rec.get("price")) {
                    n.sink.price = number_list(rec, "price", *v);
                }
                if (auto v = optional_number(rec, "flow")) n.sink.flow = *v;
                if (auto v = optional_number(rec, "flow_min")) n.sink.flow_min = *v;
                if (auto v = optional_number(rec, "flow_max")) n.sink.flow_max = *v;
                break;
            case NodeKind::Inventory:
                if (auto v = require_number(rec, "capacity")) n.inventory.capacity = *v;
                if (auto v = optional_number(rec, "initial")) n.inventory.initial = *v;
                if (const std::string* v = rec.get("comp")) {
                    for (const auto& [cid, frac] : pair_list(rec, "comp", *v)) {
                        n.inventory.composition[cid] = frac;
                    }
                }
                break;
            case NodeKind::DataDrivenLinear:
                for (const auto& f : rec.fields) {
                    if (f.key.rfind("gain_", 0) == 0) {
                        std::string comp = f.key.substr(5);
                        for (const auto& [cid, g] : pair_list(rec, f.key, f.value)) {
                            n.data_driven.gain[comp][cid] = g;
                        }
                    }
                }
                if (const std::string* v = rec.get("bias")) {
                    for (const auto& [cid, b] : pair_list(rec, "bias", *v)) {
                        n.data_driven.bias[cid] = b;
                    }
                }
                break;
            default:
                break;
        }
        topo().nodes.push_back(std::move(n));
    }

    void read_separator(const Record& rec, NodeDef& n) {
        // alpha_<outlet>=comp:val,... ; omitted entries are zero.
        std::map<std::string, std::map<std::string, double>> rows;
        for (const auto& f : rec.fields) {
            if (f.key.rfind("alpha_", 0) != 0) continue;
            std::string outlet = f.key.substr(6);
            for (const auto& [cid, a] : pair_list(rec, f.key, f.value)) {
                rows[outlet][cid] = a;
            }
        }
        // Column order is resolved against the component list at the end of
        // parsing; stash the raw rows on the node keyed by outlet position.
        n.separator.alpha.assign(n.outlets.size(), {});
        pending_separators_.push_back({topo().nodes.size(), rows, rec.line});
    }

    void read_reactor(const Record& rec, NodeDef& n) {
        auto& r = n.reactor;
        if (const std::string* v = rec.get("a")) {
            for (const auto& [cid, coef] : pair_list(rec, "a", *v)) r.a[cid] = coef;
        }
        if (auto v = optional_number(rec, "a_y")) r.a_y = *v;
        if (auto v = optional_number(rec, "a_T")) r.a_t = *v;
        if (const std::string* v = rec.get("key")) r.key_product = *v;
        if (const std::string* v = rec.get("T_fixed")) r.fixed_temperature = truthy(*v);
        if (auto v = optional_number(rec, "T")) r.t_rct = *v;
        if (auto v = optional_number(rec, "q_rct")) r.q_rct = *v;
        for (const auto& f : rec.fields) {
            if (f.key.rfind("row", 0) != 0) continue;
            bool numbered = true;
            for (std::size_t i = 3; i < f.key.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(f.key[i]))) numbered = false;
            }
            if (!numbered) continue;
            ReactorRow row;
            for (const auto& tok : split_list(f.value)) {
                // out:<comp>:<coef> | in:<comp>:<coef> | feed:<coef>
                // | feedT:<coef> | const:<coef>
                std::size_t c1 = tok.find(':');
                if (c1 == std::string::npos) {
                    diag("syntax-error", n.id, "bad reactor row token '" + tok + "'", rec.line);
                    continue;
                }
                std::string head = tok.substr(0, c1);
                std::string rest = tok.substr(c1 + 1);
                if (head == "feed" || head == "feedT" || head == "const") {
                    auto v = to_number(rec, f.key, rest);
                    if (!v) continue;
                    if (head == "feed") row.feed_coef = *v;
                    else if (head == "feedT") row.feed_t_coef = *v;
                    else row.constant = *v;
                } else {
                    std::size_t c2 = rest.find(':');
                    if (c2 == std::string::npos) {
                        diag("syntax-error", n.id, "bad reactor row token '" + tok + "'",
                             rec.line);
                        continue;
                    }
                    auto v = to_number(rec, f.key, rest.substr(c2 + 1));
                    if (!v) continue;
                    std::string comp = rest.substr(0, c2);
                    if (head == "out") row.out_coef[comp] = *v;
                    else if (head == "in") row.in_coef[comp] = *v;
                    else diag("syntax-error", n.id, "bad reactor row head '" + head + "'",
                              rec.line);
                }
            }
            r.stoich_rows.push_back(std::move(row));
        }
    }

    void read_stream(const Record& rec) {
        const std::string* id = rec.get("id");
        const std::string* source = rec.get("source");
        const std::string* sink = rec.get("sink");
        if (!id || !source || !sink) {
            diag("missing-field", id ? *id : "",
                 "stream record needs id=, source=, sink=", rec.line);
            return;
        }
        StreamDef s;
        s.id = *id;
        s.source = *source;
        s.sink = *sink;
        if (const std::string* v = rec.get("tear")) s.tear = truthy(*v);
        if (const std::string* v = rec.get("fixed_T")) s.fixed_temperature = truthy(*v);
        if (auto v = optional_number(rec, "fmin")) s.flow_min = *v;
        if (auto v = optional_number(rec, "fmax")) s.flow_max = *v;
        topo().streams.push_back(s);
    }

    void read_scenario(const Record& rec) {
        if (!result_.document.scenario) result_.document.scenario = Scenario{};
        Scenario& sc = *result_.document.scenario;
        if (auto v = optional_number(rec, "periods")) sc.periods = static_cast<int>(*v);
        if (auto v = optional_number(rec, "dt")) sc.dt_hours = *v;
        if (const std::string* v = rec.get("elec")) {
            sc.electricity_price = number_list(rec, "elec", *v);
        }
        if (sc.periods < 1) diag("scenario-horizon", "", "periods must be >= 1", rec.line);
    }

    void read_plan(const Record& rec) {
        if (!result_.document.plan) result_.document.plan = AbstractionPlan{};
        AbstractionPlan& plan = *result_.document.plan;
        if (const std::string* v = rec.get("report_fractions")) {
            for (const auto& s : split_list(*v)) plan.report_fractions.push_back(s);
            return;
        }
        std::optional<AbstractionLevel> level;
        std::optional<Paradigm> paradigm;
        if (const std::string* v = rec.get("level")) {
            level = level_from_string(*v);
            if (!level) diag("unknown-level", "", "unknown level '" + *v + "'", rec.line);
        }
        if (const std::string* v = rec.get("paradigm")) {
            paradigm = paradigm_from_string(*v);
            if (!paradigm) diag("unknown-paradigm", "", "unknown paradigm '" + *v + "'",
                                rec.line);
        }
        if (const std::string* node = rec.get("node")) {
            if (auto v = optional_number(rec, "data_driven_until")) {
                plan.data_driven_until[*node] = static_cast<int>(*v);
                if (!level && !paradigm) return;
            }
            int period = -1;
            if (const std::string* p = rec.get("period")) {
                if (*p != "*") {
                    if (auto v = to_number(rec, "period", *p)) period = static_cast<int>(*v);
                }
            }
            AbstractionLevel l = level.value_or(plan.default_level);
            Paradigm pd = paradigm.value_or(plan.default_paradigm);
            plan.overrides[{*node, period}] = {l, pd};
        } else {
            if (level) plan.default_level = *level;
            if (paradigm) plan.default_paradigm = *paradigm;
        }
    }

    std::string strip_comment(const std::string& line) {
        bool in_quote = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quote = !in_quote;
            if (line[i] == '#' && !in_quote) return line.substr(0, i);
        }
        return line;
    }

    Topology& topo() { return result_.document.topology; }

  public:
    struct PendingSeparator {
        std::size_t node_index;  // index after push_back, i.e. nodes[index] is the separator
        std::map<std::string, std::map<std::string, double>> rows;
        int line;
    };

    void resolve_separators() {
        Topology& t = topo();
        for (auto& p : pending_separators_) {
            if (p.node_index >= t.nodes.size()) continue;
            NodeDef& n = t.nodes[p.node_index];
            n.separator.alpha.assign(n.outlets.size(),
                                     std::vector<double>(t.components.size(), 0.0));
            for (const auto& [outlet, comps] : p.rows) {
                int k = -1;
                for (std::size_t i = 0; i < n.outlets.size(); ++i) {
                    if (n.outlets[i] == outlet) k = static_cast<int>(i);
                }
                if (k < 0) {
                    diag("separator-alpha", n.id, "alpha for unknown outlet '" + outlet + "'",
                         p.line);
                    continue;
                }
                for (const auto& [cid, a] : comps) {
                    int j = t.component_index(cid);
                    if (j < 0) {
                        diag("separator-alpha", n.id,
                             "alpha for unknown component '" + cid + "'", p.line);
                        continue;
                    }
                    n.separator.alpha[static_cast<std::size_t>(k)]
                                     [static_cast<std::size_t>(j)] = a;
                }
            }
        }
    }

  private:
    ParseResult& result_;
    RecordParser rp_;
    std::vector<PendingSeparator> pending_separators_;
};

void append_unique(std::vector<Diagnostic>& dst, std::vector<Diagnostic> src) {
    for (auto& d : src) dst.push_back(std::move(d));
}

}  // namespace

ParseResult parse_document(const std::string& text) {
    ParseResult result;
    DocumentReader reader(result);
    reader.read(text);
    reader.resolve_separators();
    if (result.diagnostics.empty()) {
        append_unique(result.diagnostics, validate(result.document.topology));
    }
    return result;
}

ParseResult parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ParseResult result;
        result.diagnostics.push_back({"io-error", path, "cannot open file", 0});
        return result;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_document(buf.str());
}

namespace {

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_number_exact(v[i]);
    }
    return out;
}

std::string join_ids(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += v[i];
    }
    return out;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find(' ') != std::string::npos || s.empty()) return "\"" + s + "\"";
    return s;
}

void write_node(std::ostringstream& out, const Topology& t, const NodeDef& n) {
    out << "id=" << n.id << " kind=" << to_string(n.kind);
    if (!n.inlets.empty()) out << " in=" << join_ids(n.inlets);
    if (!n.outlets.empty()) out << " out=" << join_ids(n.outlets);
    if (n.duty) out << " duty=" << format_number_exact(*n.duty);
    switch (n.kind) {
        case NodeKind::Splitter:
            if (!n.splitter.fixed_fractions.empty()) {
                out << " alpha=" << join_numbers(n.splitter.fixed_fractions);
            }
            break;
        case NodeKind::ComponentSeparator:
            for (std::size_t k = 0; k < n.outlets.size() && k < n.separator.alpha.size(); ++k) {
                std::string entries;
                for (std::size_t j = 0; j < n.separator.alpha[k].size(); ++j) {
                    double a = n.separator.alpha[k][j];
                    if (a == 0.0) continue;
                    if (!entries.empty()) entries += ",";
                    entries += t.components[j].id + ":" + format_number_exact(a);
                }
                if (!entries.empty()) out << " alpha_" << n.outlets[k] << "=" << entries;
            }
            break;
        case NodeKind::LinearReactor: {
            const auto& r = n.reactor;
            if (!r.a.empty()) {
                std::string entries;
                for (const auto& [cid, coef] : r.a) {
                    if (!entries.empty()) entries += ",";
                    entries += cid + ":" + format_number_exact(coef);
                }
                out << " a=" << entries;
            }
            out << " a_y=" << format_number_exact(r.a_y) << " a_T=" << format_number_exact(r.a_t);
            if (!r.key_product.empty()) out << " key=" << r.key_product;
            out << " T_fixed=" << (r.fixed_temperature ? "true" : "false");
            out << " T=" << format_number_exact(r.t_rct);
            if (r.q_rct != 0.0) out << " q_rct=" << format_number_exact(r.q_rct);
            for (std::size_t i = 0; i < r.stoich_rows.size(); ++i) {
                const auto& row = r.stoich_rows[i];
                std::string entries;
                auto push = [&](const std::string& tok) {
                    if (!entries.empty()) entries += ",";
                    entries += tok;
                };
                for (const auto& [cid, c] : row.out_coef) push("out:" + cid + ":" + format_number_exact(c));
                for (const auto& [cid, c] : row.in_coef) push("in:" + cid + ":" + format_number_exact(c));
                if (row.feed_coef != 0.0) push("feed:" + format_number_exact(row.feed_coef));
                if (row.feed_t_coef != 0.0) push("feedT:" + format_number_exact(row.feed_t_coef));
                if (row.constant != 0.0) push("const:" + format_number_exact(row.constant));
                out << " row" << (i + 1) << "=" << entries;
            }
            break;
        }
        case NodeKind::HeatExchanger: {
            const auto& x = n.exchanger;
            out << " Q_base=" << format_number_exact(x.q_base)
                << " Th_in_base=" << format_number_exact(x.th_in_base)
                << " Tc_in_base=" << format_number_exact(x.tc_in_base)
                << " F_hot_base=" << format_number_exact(x.f_hot_base)
                << " F_cold_base=" << format_number_exact(x.f_cold_base)
                << " UA=" << format_number_exact(x.ua);
            break;
        }
        case NodeKind::HeaterCooler: {
            const auto& h = n.heater;
            if (h.duty) out << " Q=" << format_number_exact(*h.duty);
            if (h.duty_min != 0.0) out << " Q_min=" << format_number_exact(h.duty_min);
            if (h.duty_max != 0.0) out << " Q_max=" << format_number_exact(h.duty_max);
            if (h.electric) out << " electric=true";
            if (h.phase_change == 1) out << " phase_change=vaporize";
            if (h.phase_change == -1) out << " phase_change=condense";
            break;
        }
        case NodeKind::Source: {
            const auto& s = n.source;
            if (!s.price.empty()) out << " price=" << join_numbers(s.price);
            if (s.flow) out << " flow=" << format_number_exact(*s.flow);
            if (s.flow_min != 0.0) out << " flow_min=" << format_number_exact(s.flow_min);
            if (s.flow_max != 0.0) out << " flow_max=" << format_number_exact(s.flow_max);
            if (!s.composition.empty()) {
                std::string entries;
                for (const auto& [cid, frac] : s.composition) {
                    if (!entries.empty()) entries += ",";
                    entries += cid + ":" + format_number_exact(frac);
                }
                out << " comp=" << entries;
            }
            break;
        }
        case NodeKind::Sink: {
            const auto& s = n.sink;
            if (!s.price.empty()) out << " price=" << join_numbers(s.price);
            if (s.flow) out << " flow=" << format_number_exact(*s.flow);
            if (s.flow_min != 0.0) out << " flow_min=" << format_number_exact(s.flow_min);
            if (s.flow_max != 0.0) out << " flow_max=" << format_number_exact(s.flow_max);
            break;
        }
        case NodeKind::Inventory: {
            out << " capacity=" << format_number_exact(n.inventory.capacity)
                << " initial=" << format_number_exact(n.inventory.initial);
            if (!n.inventory.composition.empty()) {
                std::string entries;
                for (const auto& [cid, frac] : n.inventory.composition) {
                    if (!entries.empty()) entries += ",";
                    entries += cid + ":" + format_number_exact(frac);
                }
                out << " comp=" << entries;
            }
            break;
        }
        case NodeKind::DataDrivenLinear: {
            for (const auto& [comp, gains] : n.data_driven.gain) {
                std::string entries;
                for (const auto& [cid, g] : gains) {
                    if (!entries.empty()) entries += ",";
                    entries += cid + ":" + format_number_exact(g);
                }
                out << " gain_" << comp << "=" << entries;
            }
            if (!n.data_driven.bias.empty()) {
                std::string entries;
                for (const auto& [cid, b] : n.data_driven.bias) {
                    if (!entries.empty()) entries += ",";
                    entries += cid + ":" + format_number_exact(b);
                }
                out << " bias=" << entries;
            }
            break;
        }
        default:
            break;
    }
    out << "\n";
}

}  // namespace

std::string serialize(const Document& doc) {
    std::ostringstream out;
    const Topology& t = doc.topology;
    if (!t.components.empty()) {
        out << "[components]\n";
        for (const auto& c : t.components) {
            out << "id=" << c.id;
            if (!c.description.empty()) out << " description=" << quote_if_needed(c.description);
            out << "\n";
        }
    }
    if (t.properties.size() > 0) {
        out << "[properties]\n";
        for (const auto& r : t.properties.records()) {
            out << "stream=" << r.stream << " T0=" << format_number_exact(r.t0)
                << " H0=" << format_number_exact(r.h0) << " Cp=" << format_number_exact(r.cp);
            if (r.pressure != 0.0) out << " P=" << format_number_exact(r.pressure);
            if (r.hvap) out << " Hvap=" << format_number_exact(*r.hvap);
            if (r.correlation) {
                const auto& c = *r.correlation;
                out << " c0=" << format_number_exact(c.c0) << " c1=" << format_number_exact(c.c1)
                    << " c2=" << format_number_exact(c.c2) << " c3=" << format_number_exact(c.c3)
                    << " Tmin=" << format_number_exact(c.t_min) << " Tmax=" << format_number_exact(c.t_max);
            }
            out << "\n";
        }
    }
    if (!t.nodes.empty()) {
        out << "[nodes]\n";
        for (const auto& n : t.nodes) write_node(out, t, n);
    }
    if (!t.streams.empty()) {
        out << "[streams]\n";
        for (const auto& s : t.streams) {
            out << "id=" << s.id << " source=" << s.source << " sink=" << s.sink;
            if (s.tear) out << " tear=true";
            if (s.fixed_temperature) out << " fixed_T=true";
            if (s.flow_min) out << " fmin=" << format_number_exact(*s.flow_min);
            if (s.flow_max) out << " fmax=" << format_number_exact(*s.flow_max);
            out << "\n";
        }
    }
    if (doc.scenario) {
        const Scenario& sc = *doc.scenario;
        out << "[scenario]\n";
        out << "periods=" << sc.periods << " dt=" << format_number_exact(sc.dt_hours);
        if (!sc.electricity_price.empty()) out << " elec=" << join_numbers(sc.electricity_price);
        out << "\n";
    }
    if (doc.plan) {
        const AbstractionPlan& p = *doc.plan;
        out << "[plan]\n";
        out << "level=" << to_string(p.default_level)
            << " paradigm=" << to_string(p.default_paradigm) << "\n";
        for (const auto& [key, val] : p.overrides) {
            out << "node=" << key.first << " period=";
            if (key.second < 0) out << "*";
            else out << key.second;
            out << " level=" << to_string(val.first) << " paradigm=" << to_string(val.second)
                << "\n";
        }
        for (const auto& [node, until] : p.data_driven_until) {
            out << "node=" << node << " data_driven_until=" << until << "\n";
        }
        if (!p.report_fractions.empty()) {
            out << "report_fractions=" << join_ids(p.report_fractions) << "\n";
        }
    }
    return out.str();
}

}  // namespace massflow

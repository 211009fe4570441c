#include "massflow/report.hpp"

#include <cmath>

#include "massflow/instantiate.hpp"

namespace massflow {

StreamTable build_stream_table(const Topology& t, const EquationSystem& sys,
                               const std::vector<double>& x, int periods) {
    StreamTable table;
    auto value = [&](const std::string& name) -> std::optional<double> {
        int i = sys.find_variable(name);
        if (i < 0 || static_cast<std::size_t>(i) >= x.size()) return std::nullopt;
        return x[static_cast<std::size_t>(i)];
    };
    for (int p = 0; p < periods; ++p) {
        for (const auto& s : t.streams) {
            StreamRow row;
            row.stream = s.id;
            row.period = p;
            if (auto v = value(var_total(s.id, p))) row.total = *v;
            for (const auto& c : t.components) {
                if (auto v = value(var_comp(s.id, c.id, p))) row.component[c.id] = *v;
                if (auto v = value(var_frac(s.id, c.id, p))) row.fraction[c.id] = *v;
            }
            if (auto v = value(var_temp(s.id, p))) row.temperature = *v;
            table.streams.push_back(std::move(row));
        }
        for (const auto& n : t.nodes) {
            if (auto v = value(var_duty(n.id, p))) table.duties.push_back({n.id, "", p, *v});
            if (auto v = value(var_duty_side(n.id, "hot", p))) {
                table.duties.push_back({n.id, "hot", p, *v});
            }
            if (auto v = value(var_duty_side(n.id, "cold", p))) {
                table.duties.push_back({n.id, "cold", p, *v});
            }
        }
    }
    return table;
}

double mass_closure_error(const Topology& t, const EquationSystem& sys,
                          const std::vector<double>& x, int periods) {
    double worst = 0.0;
    auto total = [&](const std::string& stream, int p) {
        int i = sys.find_variable(var_total(stream, p));
        if (i < 0 || static_cast<std::size_t>(i) >= x.size()) return 0.0;
        return x[static_cast<std::size_t>(i)];
    };
    for (int p = 0; p < periods; ++p) {
        for (const auto& n : t.nodes) {
            if (n.kind == NodeKind::Source || n.kind == NodeKind::Sink ||
                n.kind == NodeKind::Inventory) {
                continue;
            }
            double in = 0.0, out = 0.0;
            for (const auto& s : n.inlets) in += total(s, p);
            for (const auto& s : n.outlets) out += total(s, p);
            double scale = std::max({std::abs(in), std::abs(out), 1e-12});
            worst = std::max(worst, std::abs(in - out) / scale);
        }
    }
    return worst;
}

}  // namespace massflow

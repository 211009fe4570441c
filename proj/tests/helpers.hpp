#pragma once

// Shared fixtures for the unit and acceptance suites: parametrized
// single-purpose flowsheets, a deterministic random flowsheet generator,
// conservation audits, and small numeric utilities.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "massflow/instantiate.hpp"
#include "massflow/report.hpp"
#include "massflow/solvers.hpp"
#include "massflow/topology.hpp"

namespace testutil {

using namespace massflow;

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ----------------------------------------------------------------- builders

/// NIN sources feeding one mixer feeding one sink, NC components.
inline Topology mixer_flowsheet(int nin, int nc) {
    Topology t;
    for (int c = 0; c < nc; ++c) t.components.push_back({"c" + std::to_string(c), ""});
    NodeDef mix;
    mix.id = "mix";
    mix.kind = NodeKind::Mixer;
    for (int i = 0; i < nin; ++i) {
        NodeDef src;
        src.id = "src" + std::to_string(i);
        src.kind = NodeKind::Source;
        src.source.flow = 1.0 + i;
        for (int c = 0; c < nc; ++c)
            src.source.composition["c" + std::to_string(c)] = 1.0 / nc;
        std::string sid = "s_in" + std::to_string(i);
        src.outlets.push_back(sid);
        mix.inlets.push_back(sid);
        t.nodes.push_back(src);
        t.streams.push_back({sid, src.id, "mix"});
    }
    mix.outlets.push_back("s_out");
    t.nodes.push_back(mix);
    NodeDef snk;
    snk.id = "snk";
    snk.kind = NodeKind::Sink;
    snk.inlets.push_back("s_out");
    t.nodes.push_back(snk);
    t.streams.push_back({"s_out", "mix", "snk"});
    return t;
}

/// One source feeding a component separator with NOUT outlets and sinks.
inline Topology separator_flowsheet(int nc, int nout) {
    Topology t;
    for (int c = 0; c < nc; ++c) t.components.push_back({"c" + std::to_string(c), ""});
    NodeDef src;
    src.id = "src";
    src.kind = NodeKind::Source;
    src.source.flow = 5.0;
    for (int c = 0; c < nc; ++c) src.source.composition["c" + std::to_string(c)] = 1.0 / nc;
    src.outlets.push_back("s_in");
    t.nodes.push_back(src);
    NodeDef sep;
    sep.id = "sep";
    sep.kind = NodeKind::ComponentSeparator;
    sep.inlets.push_back("s_in");
    t.streams.push_back({"s_in", "src", "sep"});
    for (int k = 0; k < nout; ++k) {
        std::string sid = "s_out" + std::to_string(k);
        sep.outlets.push_back(sid);
        sep.separator.alpha.push_back(std::vector<double>(nc, 1.0 / nout));
        NodeDef snk;
        snk.id = "snk" + std::to_string(k);
        snk.kind = NodeKind::Sink;
        snk.inlets.push_back(sid);
        t.streams.push_back({sid, "sep", snk.id});
        t.nodes.push_back(snk);
    }
    t.nodes.push_back(sep);
    return t;
}

/// Source, one linear reactor (fixed or variable temperature), sink.
inline Topology reactor_flowsheet(int nc, bool fixed_t) {
    Topology t;
    for (int c = 0; c < nc; ++c) t.components.push_back({"c" + std::to_string(c), ""});
    NodeDef src;
    src.id = "src";
    src.kind = NodeKind::Source;
    src.source.flow = 2.0;
    for (int c = 0; c < nc; ++c) src.source.composition["c" + std::to_string(c)] = 1.0 / nc;
    src.outlets.push_back("s_in");
    t.nodes.push_back(src);
    NodeDef rct;
    rct.id = "rct";
    rct.kind = NodeKind::LinearReactor;
    rct.inlets.push_back("s_in");
    rct.outlets.push_back("s_out");
    rct.reactor.key_product = "c0";
    rct.reactor.a["c0"] = 0.5;
    rct.reactor.a_y = -1.0;
    rct.reactor.a_t = fixed_t ? 0.0 : 1e-4;
    rct.reactor.fixed_temperature = fixed_t;
    rct.reactor.t_rct = 800.0;
    t.nodes.push_back(rct);
    NodeDef snk;
    snk.id = "snk";
    snk.kind = NodeKind::Sink;
    snk.inlets.push_back("s_out");
    t.nodes.push_back(snk);
    t.streams.push_back({"s_in", "src", "rct"});
    t.streams.push_back({"s_out", "rct", "snk"});
    return t;
}

/// Deterministic random mixer/splitter/separator flowsheet, at most 10
/// nodes (1-2 sources, 2-3 interior nodes, one sink per open stream).
inline Topology random_flowsheet(unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Topology t;
    int nc = 2 + static_cast<int>(seed % 3);
    for (int c = 0; c < nc; ++c) t.components.push_back({"c" + std::to_string(c), ""});

    int next_stream = 0;
    auto new_stream = [&]() { return "s" + std::to_string(next_stream++); };
    std::vector<std::string> pool;  // produced, not yet consumed
    std::map<std::string, std::string> producer_of;

    int nsrc = 1 + static_cast<int>(rng() % 2);
    for (int i = 0; i < nsrc; ++i) {
        NodeDef src;
        src.id = "src" + std::to_string(i);
        src.kind = NodeKind::Source;
        src.source.flow = 1.0 + 4.0 * u01(rng);
        double tot = 0.0;
        std::vector<double> w(nc);
        for (int c = 0; c < nc; ++c) {
            w[static_cast<std::size_t>(c)] = 0.1 + u01(rng);
            tot += w[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < nc; ++c)
            src.source.composition["c" + std::to_string(c)] =
                w[static_cast<std::size_t>(c)] / tot;
        std::string sid = new_stream();
        src.outlets.push_back(sid);
        producer_of[sid] = src.id;
        pool.push_back(sid);
        t.nodes.push_back(src);
    }

    auto take = [&]() {
        std::size_t i = rng() % pool.size();
        std::string s = pool[i];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
        return s;
    };

    int interior = 2 + static_cast<int>(rng() % 2);
    for (int j = 0; j < interior; ++j) {
        NodeDef n;
        n.id = "n" + std::to_string(j);
        // mix multiple sources first so the graph stays connected
        unsigned pick = (j == 0 && pool.size() >= 2) ? 0 : rng() % 3;
        if (pick == 0 && pool.size() >= 2) {
            n.kind = NodeKind::Mixer;
            n.inlets.push_back(take());
            n.inlets.push_back(take());
            std::string out = new_stream();
            n.outlets.push_back(out);
            pool.push_back(out);
        } else if (pick <= 1) {
            n.kind = NodeKind::Splitter;
            double f = 0.2 + 0.6 * u01(rng);
            n.splitter.fixed_fractions = {f, 1.0 - f};
            n.inlets.push_back(take());
            for (int k = 0; k < 2; ++k) {
                std::string out = new_stream();
                n.outlets.push_back(out);
                pool.push_back(out);
            }
        } else {
            n.kind = NodeKind::ComponentSeparator;
            n.inlets.push_back(take());
            std::vector<double> a(static_cast<std::size_t>(nc));
            for (int c = 0; c < nc; ++c)
                a[static_cast<std::size_t>(c)] = 0.1 + 0.8 * u01(rng);
            std::vector<double> b(static_cast<std::size_t>(nc));
            for (int c = 0; c < nc; ++c)
                b[static_cast<std::size_t>(c)] = 1.0 - a[static_cast<std::size_t>(c)];
            n.separator.alpha = {a, b};
            for (int k = 0; k < 2; ++k) {
                std::string out = new_stream();
                n.outlets.push_back(out);
                pool.push_back(out);
            }
        }
        for (const auto& s : n.outlets) producer_of[s] = n.id;
        t.nodes.push_back(n);
    }

    int si = 0;
    for (const auto& s : pool) {
        NodeDef snk;
        snk.id = "snk" + std::to_string(si++);
        snk.kind = NodeKind::Sink;
        snk.inlets.push_back(s);
        t.nodes.push_back(snk);
    }
    // Stream records in creation order, endpoints from the node lists.
    std::map<std::string, std::string> consumer_of;
    for (const auto& n : t.nodes)
        for (const auto& s : n.inlets) consumer_of[s] = n.id;
    for (int i = 0; i < next_stream; ++i) {
        std::string sid = "s" + std::to_string(i);
        t.streams.push_back({sid, producer_of[sid],
                             consumer_of.count(sid) ? consumer_of[sid] : kBoundary});
    }
    return t;
}

/// Component flow of a stream in a solution; falls back to total * fraction
/// when the paradigm materialized fractions instead of component flows.
inline double component_flow(const EquationSystem& sys, const std::vector<double>& x,
                             const std::string& stream, const std::string& comp,
                             int period = 0) {
    int i = sys.find_variable(var_comp(stream, comp, period));
    if (i >= 0) return x[static_cast<std::size_t>(i)];
    int f = sys.require_variable(var_total(stream, period));
    int xf = sys.require_variable(var_frac(stream, comp, period));
    return x[static_cast<std::size_t>(f)] * x[static_cast<std::size_t>(xf)];
}

// ------------------------------------------------------------ conservation

struct ConservationAudit {
    double mass = 0.0;      // worst node-wise relative closure
    double fraction = 0.0;  // worst |sum of fractions - 1|
    double energy = 0.0;    // worst relative energy-row residual
};

/// Worst-case conservation violations of a solution. Energy rows are scaled
/// by the largest single enthalpy/duty contribution of the row.
inline ConservationAudit audit_solution(const Topology& t, const EquationSystem& sys,
                                        const std::vector<double>& x, int periods) {
    ConservationAudit a;
    a.mass = mass_closure_error(t, sys, x, periods);
    for (int p = 0; p < periods; ++p) {
        for (const auto& s : t.streams) {
            int f = sys.find_variable(var_total(s.id, p));
            if (f < 0 || x[static_cast<std::size_t>(f)] < 1e-6) continue;
            double sum = 0.0;
            bool all = true;
            for (const auto& c : t.components) {
                int i = sys.find_variable(var_frac(s.id, c.id, p));
                if (i < 0) {
                    all = false;
                    break;
                }
                sum += x[static_cast<std::size_t>(i)];
            }
            if (all) a.fraction = std::max(a.fraction, std::abs(sum - 1.0));
        }
    }
    std::vector<double> res = sys.residuals(x);
    auto is_energy = [](const std::string& tag) { return tag.rfind("energy", 0) == 0; };
    for (std::size_t i = 0; i < sys.rows().size(); ++i) {
        const LinearRow& row = sys.rows()[i];
        if (!is_energy(row.tag)) continue;
        double scale = std::max(1.0, std::abs(row.rhs));
        for (const auto& tm : row.terms)
            scale = std::max(scale, std::abs(tm.coef * x[static_cast<std::size_t>(tm.var)]));
        for (const auto& b : sys.bilinear()) {
            if (static_cast<std::size_t>(b.row) != i) continue;
            scale = std::max(scale, std::abs(b.coef * x[static_cast<std::size_t>(b.a)] *
                                             x[static_cast<std::size_t>(b.b)]));
        }
        a.energy = std::max(a.energy, std::abs(res[i]) / scale);
    }
    for (std::size_t g = 0; g < sys.general().size(); ++g) {
        const GeneralResidual& r = sys.general()[g];
        if (!is_energy(r.tag)) continue;
        double scale = std::max(1.0, std::abs(r.rhs));
        for (const auto& tm : r.linear)
            scale = std::max(scale, std::abs(tm.coef * x[static_cast<std::size_t>(tm.var)]));
        for (const auto& e : r.enthalpy) {
            double tv = e.t_var >= 0 ? x[static_cast<std::size_t>(e.t_var)] : e.t_value;
            scale = std::max(scale, std::abs(x[static_cast<std::size_t>(e.f_var)] *
                                             e.correlation.value(tv)));
        }
        a.energy = std::max(a.energy, std::abs(res[sys.rows().size() + g]) / scale);
    }
    return a;
}

// -------------------------------------------------- small dense Newton (FD)

/// Damped-free Newton with forward-difference Jacobian for the handful of
/// reference systems the tests solve independently of the library solvers.
template <typename F>
inline std::vector<double> newton_fd(F fun, std::vector<double> v, int iters = 200,
                                     double tol = 1e-12) {
    const std::size_t n = v.size();
    for (int it = 0; it < iters; ++it) {
        std::vector<double> r = fun(v);
        double worst = 0.0;
        for (double ri : r) worst = std::max(worst, std::abs(ri));
        if (worst < tol) break;
        Matrix J(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> d = v;
            double h = 1e-7 * std::max(1.0, std::abs(v[j]));
            d[j] += h;
            std::vector<double> r2 = fun(d);
            for (std::size_t i = 0; i < n; ++i) J(i, j) = (r2[i] - r[i]) / h;
        }
        std::vector<double> step = solve_dense(J, r);
        if (step.empty()) break;
        for (std::size_t i = 0; i < n; ++i) v[i] -= step[i];
    }
    return v;
}

// ------------------------------------------- vertex-enumeration LP (oracle)

struct VertexLp {
    std::vector<std::vector<double>> a;  // constraint rows, a.x <= b
    std::vector<double> b;
    std::vector<double> c;  // minimize c.x + constant
    double constant = 0.0;
};

/// Exhaustive vertex enumeration of a small inequality-form LP: solve every
/// n-subset of constraints as equalities, keep feasible points, return the
/// minimum objective. Independent of the simplex implementation.
inline double vertex_enumeration_min(const VertexLp& lp,
                                     std::vector<double>* argmin = nullptr) {
    const std::size_t n = lp.c.size();
    const std::size_t m = lp.a.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    bool have = false;
    double best = 0.0;
    while (true) {
        Matrix A(n, n);
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) A(i, j) = lp.a[idx[i]][j];
            rhs[i] = lp.b[idx[i]];
        }
        bool singular = false;
        std::vector<double> p = solve_dense(A, rhs, &singular, 1e-11);
        if (!singular && !p.empty()) {
            bool feasible = true;
            for (std::size_t k = 0; k < m && feasible; ++k) {
                double lhs = 0.0;
                for (std::size_t j = 0; j < n; ++j) lhs += lp.a[k][j] * p[j];
                if (lhs > lp.b[k] + 1e-7) feasible = false;
            }
            if (feasible) {
                double obj = lp.constant;
                for (std::size_t j = 0; j < n; ++j) obj += lp.c[j] * p[j];
                if (!have || obj < best - 1e-9) {
                    have = true;
                    best = obj;
                    if (argmin) *argmin = p;
                }
            }
        }
        // next combination
        std::size_t i = n;
        while (i > 0) {
            --i;
            if (idx[i] != i + m - n) break;
        }
        if (idx[i] == i + m - n) break;
        ++idx[i];
        for (std::size_t j = i + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    return best;
}

}  // namespace testutil

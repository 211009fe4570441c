// Micro-benchmarks for the hot paths: instantiation, the LP solver on the
// multi-period plant, the nonlinear recycle solve, and the network solver.

#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "massflow/composite.hpp"
#include "massflow/hen.hpp"
#include "massflow/parser.hpp"

using namespace massflow;

namespace {

Document load(const std::string& name) {
    std::ifstream in(std::string(MASSFLOW_CASES_DIR) + "/" + name + ".plant");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_document(ss.str()).document;
}

void bench_instantiate(benchmark::State& state) {
    Document doc = load("h2_atr_wgs_rto");
    Scenario sc = *doc.scenario;
    for (auto _ : state) {
        EquationSystem sys = instantiate(doc.topology, *doc.plan, sc);
        benchmark::DoNotOptimize(sys.num_vars());
    }
}
BENCHMARK(bench_instantiate);

void bench_multiperiod_lp(benchmark::State& state) {
    Document doc = load("h2_atr_wgs_rto");
    Scenario sc = *doc.scenario;
    EquationSystem sys = instantiate(doc.topology, *doc.plan, sc);
    for (auto _ : state) {
        SolveReport rep = simplex_lp(sys);
        benchmark::DoNotOptimize(rep.objective);
    }
}
BENCHMARK(bench_multiperiod_lp)->Unit(benchmark::kMillisecond);

void bench_recycle_newton(benchmark::State& state) {
    Document doc = load("heated_recycle");
    InstantiateOptions io;
    io.rigorous_energy = true;
    EquationSystem sys = instantiate(doc.topology, *doc.plan, *doc.scenario, io);
    for (auto _ : state) {
        SolveReport rep = newton_solve(sys, sys.initial_point());
        benchmark::DoNotOptimize(rep.residual_inf);
    }
}
BENCHMARK(bench_recycle_newton);

void bench_hen(benchmark::State& state) {
    Document doc = load("hen_train");
    Topology t = doc.topology;
    for (auto& n : t.nodes)
        if (n.id == "src_feed") n.source.flow = 12.0;
    for (auto _ : state) {
        HenReport rep = hen_solve(t, Scenario{});
        benchmark::DoNotOptimize(rep.iterations);
    }
}
BENCHMARK(bench_hen)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

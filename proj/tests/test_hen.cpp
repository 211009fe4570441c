#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "massflow/hen.hpp"
#include "massflow/parser.hpp"
#include "oracles.hpp"

using namespace massflow;

namespace {

Document load_train() {
    std::ifstream in(std::string(MASSFLOW_CASES_DIR) + "/hen_train.plant");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    ParseResult r = parse_document(ss.str());
    REQUIRE(r.ok());
    return r.document;
}

oracles::TrainOracle oracle_for(const Topology& t) {
    oracles::TrainOracle o;
    o.corr = *t.properties.at("s_c0").correlation;
    o.tc0 = t.properties.at("s_c0").t0;
    o.th0 = t.properties.at("s_h0").t0;
    o.hx1 = t.find_node("hx1")->exchanger;
    o.hx2 = t.find_node("hx2")->exchanger;
    return o;
}

std::vector<double> base_state(const Topology& t) {
    return {t.properties.at("s_h1").t0, t.properties.at("s_h2").t0,
            t.properties.at("s_c1").t0, t.properties.at("s_c2").t0,
            t.find_node("hx1")->exchanger.q_base, t.find_node("hx2")->exchanger.q_base};
}

}  // namespace

TEST_CASE("counter-current effectiveness hand values") {
    CHECK(effectiveness_counter_current(2.0, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    double ntu = 1.5, cr = 0.5;
    double e = std::exp(-ntu * (1 - cr));
    CHECK(effectiveness_counter_current(ntu, cr) ==
          doctest::Approx((1 - e) / (1 - cr * e)).epsilon(1e-14));
    CHECK(effectiveness_counter_current(0.0, 0.5) == 0.0);
}

TEST_CASE("duty ratio normalizes to the base point") {
    HeatExchangerParams p;
    p.q_base = 100.0;
    p.th_in_base = 450.0;
    p.tc_in_base = 350.0;
    p.f_hot_base = 10.0;
    p.f_cold_base = 10.0;
    p.ua = 80.0;
    double phi = compute_phi(p, 10.0, 10.0, 4.0, 4.0);
    CHECK(phi * (p.th_in_base - p.tc_in_base) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS(compute_phi(p, 0.0, 10.0, 4.0, 4.0));
    CHECK_THROWS(compute_phi(p, 10.0, 10.0, -1.0, 4.0));
}

TEST_CASE("base flows reproduce the frozen fixed point in one sweep") {
    Document doc = load_train();
    HenReport rep = hen_solve(doc.topology, Scenario{});
    REQUIRE(rep.ok());
    CHECK(rep.iterations == 1);
    for (const auto& rec : doc.topology.properties.records())
        CHECK(std::abs(rep.temperatures.at(rec.stream) - rec.t0) <= 1e-9);
    CHECK(std::abs(rep.duties.at("hx1") - doc.topology.find_node("hx1")->exchanger.q_base) <=
          1e-5);
    CHECK(std::abs(rep.duties.at("hx2") - doc.topology.find_node("hx2")->exchanger.q_base) <=
          1e-5);
}

TEST_CASE("off-base flows converge and match the simultaneous solve") {
    Document doc = load_train();
    oracles::TrainOracle oracle = oracle_for(doc.topology);
    for (double f : {12.0, 8.0}) {
        CAPTURE(f);
        Topology t = doc.topology;
        for (auto& n : t.nodes)
            if (n.id == "src_feed") n.source.flow = f;
        HenReport rep = hen_solve(t, Scenario{});
        REQUIRE(rep.ok());
        CHECK(rep.iterations <= 25);
        std::vector<double> v = oracle.solve(f, base_state(doc.topology));
        CHECK(std::abs(rep.temperatures.at("s_h1") - v[0]) <= 1e-4);
        CHECK(std::abs(rep.temperatures.at("s_h2") - v[1]) <= 1e-4);
        CHECK(std::abs(rep.temperatures.at("s_c1") - v[2]) <= 1e-4);
        CHECK(std::abs(rep.temperatures.at("s_c2") - v[3]) <= 1e-4);

        // worst temperature move shrinks monotonically after warm-up
        for (std::size_t i = 2; i < rep.trace.size(); ++i)
            CHECK(rep.trace[i].max_dt <= rep.trace[i - 1].max_dt + 1e-12);

        // per-exchanger closure against the refreshed references
        for (const auto& st : rep.exchangers) {
            const auto& hot_in = rep.refreshed.at(doc.topology.find_node(st.node)->inlets[0]);
            const auto& hot_out = rep.refreshed.at(doc.topology.find_node(st.node)->outlets[0]);
            double q_h = rep.flows.at(doc.topology.find_node(st.node)->inlets[0]) *
                         (enthalpy_rigorous(hot_in, st.th_in) -
                          enthalpy_rigorous(hot_out, st.th_out));
            CHECK(std::abs(q_h - st.q) <= 1e-6 * std::max(1.0, std::abs(st.q)));
        }
    }
}

TEST_CASE("duty grows sublinearly with flow") {
    Document doc = load_train();
    HenReport base = hen_solve(doc.topology, Scenario{});
    REQUIRE(base.ok());
    Topology t = doc.topology;
    for (auto& n : t.nodes)
        if (n.id == "src_feed") n.source.flow = 20.0;
    HenReport dbl = hen_solve(t, Scenario{});
    REQUIRE(dbl.ok());
    CHECK(dbl.duties.at("hx1") > base.duties.at("hx1"));
    CHECK(dbl.duties.at("hx1") < 2.0 * base.duties.at("hx1"));
}

TEST_CASE("under-relaxation still converges to the same state") {
    Document doc = load_train();
    Topology t = doc.topology;
    for (auto& n : t.nodes)
        if (n.id == "src_feed") n.source.flow = 12.0;
    SolveOptions damped;
    damped.relax = 0.5;
    damped.max_iter = 200;
    HenReport a = hen_solve(t, Scenario{});
    HenReport b = hen_solve(t, Scenario{}, damped);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    for (const auto& [sid, temp] : a.temperatures)
        CHECK(std::abs(temp - b.temperatures.at(sid)) <= 1e-4);
}

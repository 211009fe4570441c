#include "doctest.h"

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "massflow/parser.hpp"
#include "massflow/topology.hpp"

using namespace massflow;

namespace {

bool has_rule(const std::vector<Diagnostic>& diags, const std::string& rule) {
    for (const auto& d : diags)
        if (d.rule == rule) return true;
    return false;
}

}  // namespace

TEST_CASE("validate accepts a minimal two-node document") {
    Topology t;
    t.components.push_back({"A", ""});
    NodeDef src;
    src.id = "src";
    src.kind = NodeKind::Source;
    src.source.flow = 1.0;
    src.outlets.push_back("s0");
    NodeDef snk;
    snk.id = "snk";
    snk.kind = NodeKind::Sink;
    snk.inlets.push_back("s0");
    t.nodes = {src, snk};
    t.streams.push_back({"s0", "src", "snk"});
    CHECK(validate(t).empty());
}

TEST_CASE("validate flags arity violations") {
    Topology t = testutil::mixer_flowsheet(2, 2);
    for (auto& n : t.nodes)
        if (n.id == "mix") n.outlets.push_back("s_extra");
    t.streams.push_back({"s_extra", "mix", kBoundary});
    auto diags = validate(t);
    bool arity = false;
    for (const auto& d : diags) arity = arity || d.rule.find("arity") != std::string::npos;
    CHECK(arity);
}

TEST_CASE("validate flags a stream produced by two nodes") {
    Topology t = testutil::mixer_flowsheet(2, 2);
    for (auto& n : t.nodes)
        if (n.id == "src1") n.outlets[0] = "s_in0";
    auto diags = validate(t);
    CHECK(has_rule(diags, "stream-multiply-produced"));
}

TEST_CASE("validate flags dangling references") {
    Topology t = testutil::mixer_flowsheet(1, 1);
    t.streams.push_back({"s_ghost", "nobody", "mix"});
    auto diags = validate(t);
    CHECK(has_rule(diags, "dangling-reference"));
}

TEST_CASE("parse/serialize round trip is canonical and lossless") {
    std::ifstream in(std::string(MASSFLOW_CASES_DIR) + "/h2_atr_wgs.plant");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    ParseResult first = parse_document(ss.str());
    REQUIRE(first.ok());
    std::string canon = serialize(first.document);
    ParseResult second = parse_document(canon);
    REQUIRE(second.ok());
    CHECK(serialize(second.document) == canon);
    // full-precision numbers survive the round trip
    const NodeDef* src = second.document.topology.find_node("src_feed");
    REQUIRE(src);
    CHECK(*src->source.flow == 3.23275682);
    CHECK(src->source.composition.at("CH4") == 0.309333505);
}

TEST_CASE("shortest round-trip number formatting") {
    CHECK(format_number_exact(0.1) == "0.1");
    CHECK(std::stod(format_number_exact(1.0 / 3.0)) == 1.0 / 3.0);
    double awkward = 3.6500000127083148;
    CHECK(std::stod(format_number_exact(awkward)) == awkward);
}

TEST_CASE("parser reports diagnostics instead of throwing") {
    ParseResult r = parse_document("[nodes]\nid=x kind=NoSuchKind\n");
    CHECK_FALSE(r.ok());
    CHECK_FALSE(r.diagnostics.empty());
}

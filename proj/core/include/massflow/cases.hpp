#pragma once

#include <string>
#include <vector>

#include "massflow/solvers.hpp"

namespace massflow {

/// One frozen expectation inside a case's expected-results document. Every
/// entry names the oracle that produced its value (hand-solve, grid-search,
/// eps-ntu-direct, lp-vertex-enumeration, one-shot-newton).
struct ExpectedEntry {
    std::string kind;     // flow | comp | temp | duty | objective | alpha |
                          // inventory | termcount
    std::string stream;   // flow/comp/temp entries
    std::string node;     // duty/alpha/inventory entries
    std::string outlet;   // alpha entries
    std::string comp;     // comp entries
    std::string field;    // termcount entries (e.g. "bilinear")
    int period = 0;
    double value = 0.0;
    double tol = 1e-9;    // absolute unless rel is set
    bool rel = false;
    std::string oracle;
};

/// A bundled example plant: the topology/scenario/plan document, the
/// expected-results document, and the command pipeline that reproduces it.
struct CaseBundle {
    std::string name;
    std::string description;
    std::string pipeline;  // simulate | optimize | hen | cascade
    std::string document;
    std::string expected_document;
    std::vector<ExpectedEntry> expected;  // parsed from expected_document
};

struct CaseCheck {
    ExpectedEntry entry;
    double actual = 0.0;
    bool found = false;  // the referenced quantity exists in the solution
    bool pass = false;
};

struct CaseResult {
    std::string name;
    SolveStatus status = SolveStatus::IterationLimit;
    bool ok = false;  // solver succeeded and every check passed
    std::string message;
    std::vector<CaseCheck> checks;
};

/// All bundled cases, in a fixed order.
const std::vector<CaseBundle>& case_registry();

/// nullptr when the name is unknown.
const CaseBundle* find_case(const std::string& name);

/// Parse an expected-results document (the [expected] section format).
/// Throws std::runtime_error on malformed entries.
std::vector<ExpectedEntry> parse_expected(const std::string& text);

/// Execute the case's declared pipeline and compare against its expected
/// results. Throws std::invalid_argument on an unknown case name.
CaseResult run_case(const std::string& name, const SolveOptions& opts = {});

/// Human-readable pass/fail table (9 significant digits).
std::string format_case_table(const CaseResult& result);

}  // namespace massflow

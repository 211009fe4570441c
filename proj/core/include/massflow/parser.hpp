#pragma once

#include <optional>
#include <string>
#include <vector>

#include "massflow/plan.hpp"
#include "massflow/topology.hpp"

namespace massflow {

/// Everything one sectioned text document may carry. Scenario and plan
/// sections are optional; a document without them still describes a plant.
struct Document {
    Topology topology;
    std::optional<Scenario> scenario;
    std::optional<AbstractionPlan> plan;
};

struct ParseResult {
    Document document;
    std::vector<Diagnostic> diagnostics;  // parse errors plus validation findings

    bool ok() const { return diagnostics.empty(); }
};

/// Parse the line-oriented sectioned format. Deterministic; never throws on
/// arbitrary text. A non-empty diagnostics list means the document must not
/// be used.
ParseResult parse_document(const std::string& text);
ParseResult parse_file(const std::string& path);

/// Canonical serialization: declaration order, LF line endings, numbers in
/// their shortest round-trip decimal form (at least 9 significant digits).
/// parse(serialize(d)) reproduces d exactly.
std::string serialize(const Document& doc);

/// Numeric formatting helper shared by report writers (9 significant digits).
std::string format_number(double v);

/// Shortest decimal that parses back to exactly the same double; used by the
/// canonical serializer so serialize/parse is lossless.
std::string format_number_exact(double v);

}  // namespace massflow

#pragma once

#include <map>
#include <set>
#include <string>

#include "patternflow/document.hpp"
#include "patternflow/flow_model.hpp"

namespace patternflow {

/// Parse a flow document (JSON text) and validate it. Throws ParseError on
/// malformed text and ValidationError on structural rule violations.
FlowDefinition parse_flow(const std::string& text);

/// Build a FlowDefinition from an already-parsed document. Runs the same
/// validation as parse_flow.
FlowDefinition flow_from_doc(const Doc& root);

/// Canonical text form. parse_flow(render_flow(f)) == f for every valid f.
std::string render_flow(const FlowDefinition& flow);
Doc doc_from_flow(const FlowDefinition& flow);

/// Structural validation: closed step vocabulary, per-type required config,
/// subprocess resolution and acyclicity, placeholder declarations, qos rules.
void validate_flow(const FlowDefinition& flow);

/// Same checks, but subprocess references may also resolve against
/// `sharedSubprocesses` (names registered runtime-wide, outside this flow).
void validate_flow(const FlowDefinition& flow,
                   const std::set<std::string>& sharedSubprocesses);

/// Pure placeholder substitution: every ${p} replaced by bindings[p] or the
/// parameter's default. Structure is untouched otherwise; the result is
/// revalidated. Throws MissingBinding for an uncovered parameter without a
/// default and ValidationError for bindings naming undeclared parameters.
FlowDefinition instantiate_template(const FlowDefinition& tmpl,
                                    const std::map<std::string, std::string>& bindings);

/// True when `type` is in the closed step registry ("custom:<name>" counts
/// for any non-empty name).
bool is_known_step_type(const std::string& type);

}  // namespace patternflow

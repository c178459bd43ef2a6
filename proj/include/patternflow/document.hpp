#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace patternflow {

/// Tree document model. Insertion order is preserved so converting between
/// the text formats keeps element order intact.
using Doc = nlohmann::ordered_json;

/// Sorted-key JSON used for reports and flow definitions (canonical output).
using Json = nlohmann::json;

/// Throws PatternError("ParseError") with a 0-based offset in the message.
Doc parse_json_doc(const std::string& text);
std::string render_json_doc(const Doc& doc);

/// Element-only XML subset: no attributes, no mixed content, arrays as
/// repeated <li> children, synthetic <doc> root for multi-key documents.
Doc parse_xml_doc(const std::string& text);
/// Throws PatternError("MarshalUnsupported") for documents outside the
/// common subset (non-string leaves, empty strings/arrays, "li" keys, keys
/// that are not valid element names).
std::string render_xml_doc(const Doc& doc);

/// Slash-separated object path ("a/b/c"). Returns nullptr when absent.
const Doc* doc_find(const Doc& doc, const std::string& path);
/// Creates intermediate objects as needed.
void doc_set(Doc& doc, const std::string& path, Doc value);

}  // namespace patternflow

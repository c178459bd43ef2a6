#pragma once

#include <string>
#include <vector>

#include "patternflow/document.hpp"
#include "patternflow/message.hpp"

namespace patternflow {

enum class EncodingScheme { base16, base64 };
enum class DocFormat { jsonLike, xmlLike };
enum class SortComparator { lexicographic, numeric };
enum class TargetType { textUtf8, bytes };

struct MappingRule {
  enum class Kind { copy, uppercase, lowercase, constant };
  std::string sourcePath;
  std::string targetPath;
  Kind kind = Kind::copy;
  std::string constantValue;  // kind == constant only
};

/// Builds a fresh document containing exactly the rule targets, in rule
/// order. Missing sources raise PathNotFound when failOnMissing, otherwise
/// the rule is skipped.
Message map_message(const Message& msg, const std::vector<MappingRule>& rules,
                    bool failOnMissing = true);

/// Sets header "content-transfer-encoding" to the scheme name.
Message encode_content(const Message& msg, EncodingScheme scheme);
/// Clears the encoding header. Throws MalformedEncoding on invalid input.
Message decode_content(const Message& msg, EncodingScheme scheme);

/// Renders the body document in the target format. The body must parse in
/// the other format (or the same one; that normalizes it).
Message marshal_content(const Message& msg, DocFormat from, DocFormat to);
Message unmarshal_content(const Message& msg, DocFormat from);

/// Sets/clears header "content-encoding" ("gzip").
Message compress_content(const Message& msg);
Message decompress_content(const Message& msg);

/// Sets header "content-type-class". textUtf8 validates the body and throws
/// InvalidUtf8 on malformed sequences; bytes always succeeds.
Message convert_type(const Message& msg, TargetType target);

/// Splits the body on delimiter, stable-sorts segments, rejoins. numeric
/// requires every segment to parse as a number (NonNumericSegment).
Message sort_content(const Message& msg, const std::string& delimiter,
                     SortComparator comparator);

/// Replaces all non-overlapping left-to-right occurrences of any dictionary
/// key (longest key wins at equal positions). Match count lands in header
/// "matches".
Message find_replace(const Message& msg,
                     const std::vector<std::pair<std::string, std::string>>&
                         dictionary);

/// Adds headers meta.size, meta.sha256, meta.mime (magic-byte sniffing).
Message extract_metadata(const Message& msg);

bool valid_utf8(const Bytes& data);

const char* scheme_name(EncodingScheme scheme);

}  // namespace patternflow

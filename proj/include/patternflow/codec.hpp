#pragma once

#include <string>
#include <string_view>

#include "patternflow/bytes.hpp"

namespace patternflow {

/// RFC 4648 base64, standard alphabet, padded, no line breaks.
std::string base64_encode(const Bytes& data);
/// Strict: rejects non-alphabet characters, bad padding length and non-zero
/// trailing bits with PatternError("MalformedEncoding").
Bytes base64_decode(std::string_view text);

/// Lowercase hex.
std::string base16_encode(const Bytes& data);
/// Case-insensitive; rejects odd length and non-hex digits.
Bytes base16_decode(std::string_view text);

}  // namespace patternflow

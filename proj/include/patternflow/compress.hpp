#pragma once

#include "patternflow/bytes.hpp"

namespace patternflow {

/// gzip container (RFC 1952), deterministic output for a given input: fixed
/// compression level, zeroed mtime, no name field.
Bytes gzip_compress(const Bytes& data);
/// Throws PatternError("CorruptStream") on anything that is not a complete,
/// well-formed gzip stream.
Bytes gzip_decompress(const Bytes& data);

}  // namespace patternflow

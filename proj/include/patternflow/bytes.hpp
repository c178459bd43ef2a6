#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace patternflow {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(const Bytes& b);

/// Lowercase hex, two digits per byte.
std::string to_hex(const Bytes& b);

void put_be16(Bytes& out, std::uint16_t v);
void put_be32(Bytes& out, std::uint32_t v);
void put_be64(Bytes& out, std::uint64_t v);
std::uint16_t get_be16(const std::uint8_t* p);
std::uint32_t get_be32(const std::uint8_t* p);
std::uint64_t get_be64(const std::uint8_t* p);

}  // namespace patternflow

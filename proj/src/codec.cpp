#include "patternflow/codec.hpp"

#include <array>

#include "patternflow/errors.hpp"

namespace patternflow {
namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<int, 256> decode_table() {
  std::array<int, 256> t{};
  t.fill(-1);
  for (int i = 0; i < 64; i++) t[static_cast<unsigned char>(kAlphabet[i])] = i;
  return t;
}

[[noreturn]] void bad(const std::string& what) {
  raise("MalformedEncoding", what);
}

}  // namespace

std::string base64_encode(const Bytes& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= data.size()) {
    std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(kAlphabet[(n >> 6) & 63]);
    out.push_back(kAlphabet[n & 63]);
    i += 3;
  }
  std::size_t rest = data.size() - i;
  if (rest == 1) {
    std::uint32_t n = data[i] << 16;
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rest == 2) {
    std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kAlphabet[(n >> 18) & 63]);
    out.push_back(kAlphabet[(n >> 12) & 63]);
    out.push_back(kAlphabet[(n >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

Bytes base64_decode(std::string_view text) {
  static const std::array<int, 256> table = decode_table();
  if (text.size() % 4 != 0)
    bad("base64 length " + std::to_string(text.size()) +
        " is not a multiple of 4");
  Bytes out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    bool last = i + 4 == text.size();
    int pad = 0;
    int v[4];
    for (int k = 0; k < 4; k++) {
      char c = text[i + k];
      if (c == '=') {
        if (!last || k < 2) bad("padding in unexpected position");
        pad++;
        v[k] = 0;
        continue;
      }
      if (pad > 0) bad("alphabet character after padding");
      v[k] = table[static_cast<unsigned char>(c)];
      if (v[k] < 0) bad(std::string("character '") + c + "' not in alphabet");
    }
    std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    if (pad == 1) {
      if (n & 0xff) bad("non-zero trailing bits");
      out.push_back(static_cast<std::uint8_t>(n >> 16));
      out.push_back(static_cast<std::uint8_t>(n >> 8));
    } else if (pad == 2) {
      if (n & 0xffff) bad("non-zero trailing bits");
      out.push_back(static_cast<std::uint8_t>(n >> 16));
    } else {
      out.push_back(static_cast<std::uint8_t>(n >> 16));
      out.push_back(static_cast<std::uint8_t>(n >> 8));
      out.push_back(static_cast<std::uint8_t>(n));
    }
  }
  return out;
}

std::string base16_encode(const Bytes& data) { return to_hex(data); }

Bytes base16_decode(std::string_view text) {
  if (text.size() % 2 != 0) bad("base16 input has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = nibble(text[i]);
    int lo = nibble(text[i + 1]);
    if (hi < 0 || lo < 0)
      bad(std::string("'") + text[i + (hi < 0 ? 0 : 1)] +
          "' is not a hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

}  // namespace patternflow

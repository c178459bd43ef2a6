#include "patternflow/transform.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "patternflow/codec.hpp"
#include "patternflow/compress.hpp"
#include "patternflow/crypto.hpp"
#include "patternflow/errors.hpp"

namespace patternflow {

namespace {

const char* kEncodingHeader = "content-transfer-encoding";
const char* kCompressionHeader = "content-encoding";

Doc parse_body(const Message& msg, DocFormat format) {
  return format == DocFormat::jsonLike ? parse_json_doc(msg.body_text())
                                       : parse_xml_doc(msg.body_text());
}

std::string render_body(const Doc& doc, DocFormat format) {
  return format == DocFormat::jsonLike ? render_json_doc(doc)
                                       : render_xml_doc(doc);
}

}  // namespace

Message map_message(const Message& msg, const std::vector<MappingRule>& rules,
                    bool failOnMissing) {
  Doc input = parse_json_doc(msg.body_text());
  Doc output = Doc::object();
  for (const auto& rule : rules) {
    if (rule.kind == MappingRule::Kind::constant) {
      doc_set(output, rule.targetPath, Doc(rule.constantValue));
      continue;
    }
    const Doc* src = doc_find(input, rule.sourcePath);
    if (!src) {
      if (failOnMissing)
        raise("PathNotFound", "no value at '" + rule.sourcePath + "'");
      continue;
    }
    Doc value = *src;
    if (rule.kind == MappingRule::Kind::uppercase ||
        rule.kind == MappingRule::Kind::lowercase) {
      if (!value.is_string())
        raise("ConfigError", "case transform needs a string at '" +
                                 rule.sourcePath + "'");
      std::string s = value.get<std::string>();
      for (char& c : s)
        c = rule.kind == MappingRule::Kind::uppercase
                ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      value = Doc(s);
    }
    doc_set(output, rule.targetPath, std::move(value));
  }
  return msg.with_text(render_json_doc(output));
}

const char* scheme_name(EncodingScheme scheme) {
  return scheme == EncodingScheme::base64 ? "base64" : "base16";
}

Message encode_content(const Message& msg, EncodingScheme scheme) {
  std::string text = scheme == EncodingScheme::base64
                         ? base64_encode(msg.body())
                         : base16_encode(msg.body());
  return msg.with_text(text).with_header(kEncodingHeader, scheme_name(scheme));
}

Message decode_content(const Message& msg, EncodingScheme scheme) {
  Bytes data = scheme == EncodingScheme::base64
                   ? base64_decode(msg.body_text())
                   : base16_decode(msg.body_text());
  return msg.with_body(std::move(data)).without_header(kEncodingHeader);
}

Message marshal_content(const Message& msg, DocFormat from, DocFormat to) {
  return msg.with_text(render_body(parse_body(msg, from), to));
}

Message unmarshal_content(const Message& msg, DocFormat from) {
  return msg.with_text(render_json_doc(parse_body(msg, from)));
}

Message compress_content(const Message& msg) {
  return msg.with_body(gzip_compress(msg.body()))
      .with_header(kCompressionHeader, "gzip");
}

Message decompress_content(const Message& msg) {
  return msg.with_body(gzip_decompress(msg.body()))
      .without_header(kCompressionHeader);
}

bool valid_utf8(const Bytes& data) {
  std::size_t i = 0;
  while (i < data.size()) {
    std::uint8_t c = data[i];
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      i++;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > data.size()) return false;
    for (std::size_t k = 1; k < len; k++) {
      if ((data[i + k] & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (data[i + k] & 0x3f);
    }
    static const std::uint32_t minByLen[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < minByLen[len]) return false;                  // overlong
    if (cp > 0x10ffff) return false;                       // out of range
    if (cp >= 0xd800 && cp <= 0xdfff) return false;        // surrogate
    i += len;
  }
  return true;
}

Message convert_type(const Message& msg, TargetType target) {
  if (target == TargetType::textUtf8 && !valid_utf8(msg.body()))
    raise("InvalidUtf8", "body is not valid UTF-8");
  return msg.with_header("content-type-class",
                         target == TargetType::textUtf8 ? "text-utf8"
                                                        : "bytes");
}

Message sort_content(const Message& msg, const std::string& delimiter,
                     SortComparator comparator) {
  if (delimiter.empty()) raise("ConfigError", "sort delimiter must be non-empty");
  std::string body = msg.body_text();
  std::vector<std::string> segments;
  std::size_t start = 0;
  for (;;) {
    std::size_t at = body.find(delimiter, start);
    if (at == std::string::npos) {
      segments.push_back(body.substr(start));
      break;
    }
    segments.push_back(body.substr(start, at - start));
    start = at + delimiter.size();
  }

  if (comparator == SortComparator::numeric) {
    std::vector<double> keys(segments.size());
    for (std::size_t i = 0; i < segments.size(); i++) {
      const std::string& s = segments[i];
      auto [ptr, ec] =
          std::from_chars(s.data(), s.data() + s.size(), keys[i]);
      if (ec != std::errc() || ptr != s.data() + s.size())
        raise("NonNumericSegment", "segment '" + s + "' is not a number");
    }
    std::vector<std::size_t> order(segments.size());
    for (std::size_t i = 0; i < order.size(); i++) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return keys[a] < keys[b];
                     });
    std::vector<std::string> sorted(segments.size());
    for (std::size_t i = 0; i < order.size(); i++)
      sorted[i] = std::move(segments[order[i]]);
    segments = std::move(sorted);
  } else {
    std::stable_sort(segments.begin(), segments.end());
  }

  std::string out;
  for (std::size_t i = 0; i < segments.size(); i++) {
    if (i) out += delimiter;
    out += segments[i];
  }
  return msg.with_text(out);
}

Message find_replace(
    const Message& msg,
    const std::vector<std::pair<std::string, std::string>>& dictionary) {
  for (const auto& [pattern, _] : dictionary)
    if (pattern.empty()) raise("ConfigError", "empty search pattern");

  std::string body = msg.body_text();
  std::string out;
  out.reserve(body.size());
  std::uint64_t matches = 0;
  std::size_t i = 0;
  while (i < body.size()) {
    const std::pair<std::string, std::string>* best = nullptr;
    for (const auto& entry : dictionary) {
      if (body.compare(i, entry.first.size(), entry.first) != 0) continue;
      if (!best || entry.first.size() > best->first.size()) best = &entry;
    }
    if (best) {
      out += best->second;
      i += best->first.size();
      matches++;
    } else {
      out.push_back(body[i++]);
    }
  }
  return msg.with_text(out).with_header("matches", std::to_string(matches));
}

Message extract_metadata(const Message& msg) {
  const Bytes& body = msg.body();
  std::string mime = "application/octet-stream";
  auto starts = [&](std::initializer_list<int> magic) {
    if (body.size() < magic.size()) return false;
    std::size_t i = 0;
    for (int b : magic)
      if (body[i++] != static_cast<std::uint8_t>(b)) return false;
    return true;
  };
  if (starts({'%', 'P', 'D', 'F'}))
    mime = "application/pdf";
  else if (starts({0x89, 'P', 'N', 'G'}))
    mime = "image/png";
  else if (starts({0x1f, 0x8b}))
    mime = "application/gzip";

  return msg.with_header("meta.size", std::to_string(body.size()))
      .with_header("meta.sha256", sha256_hex(body))
      .with_header("meta.mime", mime);
}

}  // namespace patternflow

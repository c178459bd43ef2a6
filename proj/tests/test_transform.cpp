#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>

#include "patternflow/compress.hpp"
#include "patternflow/document.hpp"
#include "patternflow/errors.hpp"
#include "patternflow/transform.hpp"

using namespace patternflow;

static std::string err_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PatternError& e) {
    return e.kind();
  }
  return "";
}

static Message text_msg(const std::string& body, HeaderMap headers = {}) {
  return Message("m-1", to_bytes(body), std::move(headers));
}

TEST_CASE("mapping copies, transforms case and injects constants") {
  Message in = text_msg(R"({"factura":{"emisor":"Empresa SA","importe":"1210.50"}})");
  std::vector<MappingRule> rules{
      {"factura/emisor", "doc/supplier", MappingRule::Kind::copy, ""},
      {"factura/emisor", "doc/supplierUpper", MappingRule::Kind::uppercase, ""},
      {"factura/emisor", "doc/supplierLower", MappingRule::Kind::lowercase, ""},
      {"", "doc/channel", MappingRule::Kind::constant, "FACe"},
  };
  Message out = map_message(in, rules);
  Doc doc = parse_json_doc(out.body_text());
  CHECK(doc["doc"]["supplier"] == "Empresa SA");
  CHECK(doc["doc"]["supplierUpper"] == "EMPRESA SA");
  CHECK(doc["doc"]["supplierLower"] == "empresa sa");
  CHECK(doc["doc"]["channel"] == "FACe");
  CHECK(doc.contains("factura") == false);  // output is built fresh
}

TEST_CASE("mapping honors failOnMissing") {
  Message in = text_msg(R"({"a":"1"})");
  std::vector<MappingRule> rules{{"b", "out", MappingRule::Kind::copy, ""}};
  CHECK(err_kind([&] { map_message(in, rules, true); }) == "PathNotFound");
  Message out = map_message(in, rules, false);
  CHECK(parse_json_doc(out.body_text()).empty());
}

TEST_CASE("encode and decode stamp the transfer-encoding header") {
  Message in = text_msg("hello");
  Message enc = encode_content(in, EncodingScheme::base64);
  CHECK(enc.body_text() == "aGVsbG8=");
  CHECK(*enc.header("content-transfer-encoding") == "base64");
  Message dec = decode_content(enc, EncodingScheme::base64);
  CHECK(dec.body_text() == "hello");
  CHECK(!dec.header("content-transfer-encoding"));

  Message hex = encode_content(in, EncodingScheme::base16);
  CHECK(hex.body_text() == "68656c6c6f");
}

TEST_CASE("marshal json to xml and back is lossless on the element subset") {
  std::string json = R"({"envelope":{"supplier":"Empresa SA","items":["a","b"],"amount":"12"}})";
  Message m = text_msg(json);
  Message xml = marshal_content(m, DocFormat::jsonLike, DocFormat::xmlLike);
  CHECK(xml.body_text() ==
        "<envelope><supplier>Empresa SA</supplier>"
        "<items><li>a</li><li>b</li></items><amount>12</amount></envelope>");
  Message back = marshal_content(xml, DocFormat::xmlLike, DocFormat::jsonLike);
  CHECK(parse_json_doc(back.body_text()) == parse_json_doc(json));
}

TEST_CASE("xml parser rejects input outside the element-only subset") {
  CHECK(err_kind([] { parse_xml_doc("<a b=\"c\">x</a>"); }) == "ParseError");
  CHECK(err_kind([] { parse_xml_doc("<a><b>x</b>"); }) == "ParseError");
  CHECK(err_kind([] { parse_xml_doc("<a>x</a><b>y</b>"); }) == "ParseError");
  CHECK(err_kind([] { parse_xml_doc("plain text"); }) == "ParseError");
}

TEST_CASE("unstructured json values cannot cross into xml") {
  Message m = text_msg(R"({"a":12})");  // non-string leaf
  CHECK(err_kind([&] {
          marshal_content(m, DocFormat::jsonLike, DocFormat::xmlLike);
        }) == "MarshalUnsupported");
}

TEST_CASE("json parse errors carry a byte offset") {
  try {
    parse_json_doc("{\"a\": }");
    FAIL("expected ParseError");
  } catch (const PatternError& e) {
    CHECK(e.kind() == "ParseError");
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
}

TEST_CASE("gzip compression is deterministic and round trips") {
  std::string text(4096, 'a');
  for (std::size_t i = 0; i < text.size(); i += 7) text[i] = 'b';
  Message in = text_msg(text);
  Message z1 = compress_content(in);
  Message z2 = compress_content(in);
  CHECK(z1.body() == z2.body());
  CHECK(z1.body().size() < in.body().size());
  CHECK(z1.body()[0] == 0x1f);  // gzip magic
  CHECK(z1.body()[1] == 0x8b);
  CHECK(*z1.header("content-encoding") == "gzip");

  Message out = decompress_content(z1);
  CHECK(out.body_text() == text);
  CHECK(!out.header("content-encoding"));
}

TEST_CASE("corrupt gzip streams are rejected") {
  Message z = compress_content(text_msg("payload payload payload"));
  Bytes truncated(z.body().begin(), z.body().end() - 4);
  CHECK(err_kind([&] { decompress_content(z.with_body(truncated)); }) ==
        "CorruptStream");
  Bytes garbage = z.body();
  garbage[10] ^= 0xff;
  std::string kind = err_kind([&] { decompress_content(z.with_body(garbage)); });
  CHECK(kind == "CorruptStream");
  CHECK(err_kind([&] { decompress_content(text_msg("not gzip")); }) ==
        "CorruptStream");
}

TEST_CASE("type conversion validates utf-8") {
  Message ok = convert_type(text_msg("caf\xc3\xa9"), TargetType::textUtf8);
  CHECK(*ok.header("content-type-class") == "text-utf8");
  CHECK(err_kind([&] {
          convert_type(text_msg("caf\xc3"), TargetType::textUtf8);
        }) == "InvalidUtf8");
  Message raw = convert_type(text_msg("caf\xc3"), TargetType::bytes);
  CHECK(*raw.header("content-type-class") == "bytes");
}

TEST_CASE("sorting splits on the delimiter and compares as asked") {
  Message lex = sort_content(text_msg("pear,apple,mango"), ",",
                             SortComparator::lexicographic);
  CHECK(lex.body_text() == "apple,mango,pear");

  // numeric order differs from lexicographic: 9 < 10 < 100
  Message num = sort_content(text_msg("100\n9\n10"), "\n", SortComparator::numeric);
  CHECK(num.body_text() == "9\n10\n100");
  Message lex2 = sort_content(text_msg("100\n9\n10"), "\n",
                              SortComparator::lexicographic);
  CHECK(lex2.body_text() == "10\n100\n9");

  CHECK(err_kind([&] {
          sort_content(text_msg("1,x,3"), ",", SortComparator::numeric);
        }) == "NonNumericSegment");
}

TEST_CASE("sorting agrees with std::sort on random segment lists") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    std::vector<std::string> parts;
    std::uint64_t state = seed * 2654435761u;
    for (int i = 0; i < 50; ++i) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      parts.push_back(std::to_string(state % 1000));
    }
    std::string joined;
    for (std::size_t i = 0; i < parts.size(); ++i)
      joined += (i ? "|" : "") + parts[i];
    Message out = sort_content(text_msg(joined), "|", SortComparator::lexicographic);
    std::sort(parts.begin(), parts.end());
    std::string expected;
    for (std::size_t i = 0; i < parts.size(); ++i)
      expected += (i ? "|" : "") + parts[i];
    CHECK(out.body_text() == expected);
  }
}

TEST_CASE("find-replace prefers the longest match, scanning left to right") {
  std::vector<std::pair<std::string, std::string>> rules{
      {"ab", "X"}, {"abc", "Y"}};
  Message out = find_replace(text_msg("abcab"), rules);
  CHECK(out.body_text() == "YX");
  CHECK(*out.header("matches") == "2");

  Message none = find_replace(text_msg("zzz"), rules);
  CHECK(none.body_text() == "zzz");
  CHECK(*none.header("matches") == "0");

  // replacements are not rescanned
  Message once = find_replace(text_msg("aa"), {{"aa", "aaaa"}});
  CHECK(once.body_text() == "aaaa");
  CHECK(*once.header("matches") == "1");
}

TEST_CASE("metadata extraction stamps size, digest and mime class") {
  Message m = extract_metadata(text_msg("abc"));
  CHECK(*m.header("meta.size") == "3");
  CHECK(*m.header("meta.sha256") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(*m.header("meta.mime") == "application/octet-stream");
  CHECK(m.body_text() == "abc");

  Message pdf = extract_metadata(text_msg("%PDF-1.7 rest"));
  CHECK(*pdf.header("meta.mime") == "application/pdf");
  Message png = extract_metadata(text_msg("\x89PNGxxxx"));
  CHECK(*png.header("meta.mime") == "image/png");
  Message gz = extract_metadata(compress_content(text_msg("zzz")));
  CHECK(*gz.header("meta.mime") == "application/gzip");
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "patternflow/channel.hpp"
#include "patternflow/codec.hpp"
#include "patternflow/crypto.hpp"
#include "patternflow/exchange.hpp"
#include "patternflow/message.hpp"
#include "patternflow/predicate.hpp"
#include "patternflow/rng.hpp"

using namespace patternflow;

static std::string err_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PatternError& e) {
    return e.kind();
  }
  return "";
}

TEST_CASE("base64 matches the published reference vectors") {
  // RFC 4648 section 10 vectors, frozen.
  const std::pair<const char*, const char*> vectors[] = {
      {"", ""},           {"f", "Zg=="},       {"fo", "Zm8="},
      {"foo", "Zm9v"},    {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"},
  };
  for (const auto& [plain, encoded] : vectors) {
    CHECK(base64_encode(to_bytes(plain)) == encoded);
    CHECK(to_string(base64_decode(encoded)) == plain);
  }
}

TEST_CASE("base64 decode is strict") {
  CHECK(err_kind([] { base64_decode("Zg="); }) == "MalformedEncoding");
  CHECK(err_kind([] { base64_decode("Zg===");   }) == "MalformedEncoding");
  CHECK(err_kind([] { base64_decode("Zm9v!");   }) == "MalformedEncoding");
  CHECK(err_kind([] { base64_decode("Zg==Zg=="); }) == "MalformedEncoding");
  CHECK(err_kind([] { base64_decode("Z m9v");   }) == "MalformedEncoding");
}

TEST_CASE("base16 round trip and case handling") {
  CHECK(base16_encode(to_bytes("foo")) == "666f6f");
  CHECK(to_string(base16_decode("666f6f")) == "foo");
  CHECK(to_string(base16_decode("666F6F")) == "foo");
  CHECK(err_kind([] { base16_decode("abc"); }) == "MalformedEncoding");
  CHECK(err_kind([] { base16_decode("zz"); }) == "MalformedEncoding");
}

TEST_CASE("sha256 matches the published reference vectors") {
  // NIST FIPS 180-4 example digests, frozen.
  CHECK(sha256_hex(to_bytes("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(to_bytes("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(to_bytes("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("big-endian packing round trips") {
  Bytes buf;
  put_be64(buf, 0x0102030405060708ull);
  CHECK(buf.size() == 8);
  CHECK(get_be64(buf.data()) == 0x0102030405060708ull);
  Bytes b2;
  put_be32(b2, 0xdeadbeef);
  CHECK(get_be32(b2.data()) == 0xdeadbeef);
}

TEST_CASE("reference cipher round trips and rejects the wrong key") {
  ReferenceCryptoProvider provider;
  Bytes key = to_bytes("k1"), other = to_bytes("k2");
  Bytes plain = to_bytes("attack at dawn, repeat, attack at dawn");
  Bytes cipher = provider.encrypt(key, plain);
  CHECK(cipher != plain);
  CHECK(provider.decrypt(key, cipher) == plain);
  CHECK(err_kind([&] { provider.decrypt(other, cipher); }) == "DecryptFailure");

  Bytes tampered = cipher;
  tampered[tampered.size() - 1] ^= 0x01;
  CHECK(err_kind([&] { provider.decrypt(key, tampered); }) == "DecryptFailure");
}

TEST_CASE("reference signatures verify and detect tampering") {
  ReferenceCryptoProvider provider;
  KeyPair pair = keypair_from_seed("corporate-es");
  Bytes data = to_bytes("payload");
  Bytes sig = provider.sign(pair.privateKey, data);
  CHECK(provider.verify(pair.certificate, data, sig));
  Bytes bad = data;
  bad[0] ^= 0x80;
  CHECK_FALSE(provider.verify(pair.certificate, bad, sig));
  CHECK_FALSE(provider.verify(keypair_from_seed("other").certificate, data, sig));
}

TEST_CASE("keypair derivation is deterministic") {
  CHECK(keypair_from_seed("a").privateKey == keypair_from_seed("a").privateKey);
  CHECK(keypair_from_seed("a").privateKey != keypair_from_seed("b").privateKey);
}

TEST_CASE("messages are immutable value objects") {
  Message m("id-1", to_bytes("body"), {{"k", "v"}});
  Message m2 = m.with_text("other").with_header("h", "1");
  CHECK(m.body_text() == "body");
  CHECK(!m.header("h"));
  CHECK(m2.body_text() == "other");
  CHECK(m2.id() == "id-1");
  CHECK(*m2.header("h") == "1");
  Message m3 = m2.without_header("h");
  CHECK(!m3.header("h"));
  Message m4 = m.with_attachment("a", to_bytes("x"));
  CHECK(m4.attachments().count("a") == 1);
  CHECK(m.attachments().empty());
}

TEST_CASE("id generator format is stable") {
  IdGenerator gen(7);
  std::string first = gen.next();
  std::string second = gen.next();
  CHECK(first != second);
  CHECK(first.find('-') != std::string::npos);
  IdGenerator gen2(7);
  CHECK(gen2.next() == first);
}

TEST_CASE("exchange records history and properties") {
  Exchange ex(Message("m1", to_bytes("x")), "inst-1");
  ex.record("step-a", 5, "ok");
  ex.record("step-b", 6, "failed");
  REQUIRE(ex.history().size() == 2);
  CHECK(ex.history()[0].step == "step-a");
  CHECK(ex.history()[1].outcome == "failed");
  ex.set_property("p", "1");
  CHECK(*ex.property("p") == "1");
  CHECK(!ex.property("q"));
  CHECK(!ex.exception());
  ex.set_exception(ExceptionRecord{"Kind", "msg", "step-b", 1});
  REQUIRE(ex.exception());
  CHECK(ex.exception()->kind == "Kind");
  ex.clear_exception();
  CHECK(!ex.exception());
}

TEST_CASE("queue channel is FIFO with a hard capacity") {
  Channel ch("q", 2, ChannelMode::queue);
  ch.send(Message("1", to_bytes("a")));
  ch.send(Message("2", to_bytes("b")));
  CHECK(err_kind([&] { ch.send(Message("3", to_bytes("c"))); }) == "ChannelFull");
  CHECK(ch.pending() == 2);
  auto m = ch.receive();
  REQUIRE(m);
  CHECK(m->id() == "1");
  CHECK(ch.receive()->id() == "2");
  CHECK(!ch.receive());
  CHECK(ch.sent_total() == 2);
}

TEST_CASE("direct channel needs a consumer and counts deliveries") {
  Channel ch("d", 0, ChannelMode::direct);
  CHECK(err_kind([&] { ch.send(Message("1", to_bytes("a"))); }) == "NoConsumer");
  std::vector<std::string> seen;
  ch.set_consumer([&](const Message& m) { seen.push_back(m.id()); });
  ch.send(Message("2", to_bytes("b")));
  CHECK(seen == std::vector<std::string>{"2"});
  CHECK(ch.delivered_total() == 1);

  int listened = 0;
  ch.add_listener([&](const Message&) { ++listened; });
  ch.send(Message("3", to_bytes("c")));
  CHECK(listened == 1);
  CHECK(seen.size() == 2);
}

TEST_CASE("predicates evaluate against the exchange") {
  Exchange ex(Message("m", to_bytes("hello"), {{"mode", "manual"}, {"n", "15"}}));
  ex.set_property("tries", "3");
  auto holds = [&](const std::string& text) {
    return Predicate::parse(text).eval(ex);
  };
  CHECK(holds("header(\"mode\") == \"manual\""));
  CHECK_FALSE(holds("header(\"mode\") != \"manual\""));
  CHECK(holds("header(\"n\") > 9"));          // numeric, not lexicographic
  CHECK(holds("property(\"tries\") <= 3"));
  CHECK(holds("bodySize() == 5"));
  CHECK(holds("body() == \"hello\""));
  CHECK(holds("!(header(\"mode\") == \"automatic\")"));
  CHECK(holds("header(\"missing\") == \"\" || header(\"mode\") == \"manual\""));
  // && binds tighter than ||
  CHECK(holds("header(\"mode\") == \"manual\" || header(\"mode\") == \"x\" && bodySize() == 0"));
}

TEST_CASE("predicate syntax errors carry an offset") {
  try {
    Predicate::parse("header(\"a\" == 1");
    FAIL("expected a syntax error");
  } catch (const PatternError& e) {
    CHECK(e.kind() == "PredicateSyntax");
  }
}

TEST_CASE("deterministic rng replays a seed bit for bit") {
  DeterministicRng a(99), b(99), c(100);
  bool anyDiff = false;
  for (int i = 0; i < 64; ++i) {
    auto x = a.next_u64();
    CHECK(x == b.next_u64());
    if (x != c.next_u64()) anyDiff = true;
  }
  CHECK(anyDiff);
  DeterministicRng d(1);
  for (int i = 0; i < 1000; ++i) {
    double v = d.next_double();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

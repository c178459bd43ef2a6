#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "patternflow/security.hpp"

using namespace patternflow;
namespace fs = std::filesystem;

static std::string err_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PatternError& e) {
    return e.kind();
  }
  return "";
}

namespace {

struct SecurityRig {
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>();
  ReferenceCryptoProvider provider;
  KeyStore keys;
  TrustStore trust;
  std::shared_ptr<SecureStore> creds;
  TokenService tokens;

  SecurityRig()
      : creds(std::make_shared<SecureStore>(
            std::make_shared<DataStore>("creds", "", clock), clock)),
        tokens(creds, clock) {
    KeyPair pair = keypair_from_seed("corporate-es");
    keys.add("corporate-es", pair);
    trust.add("corporate-es", pair.certificate);
  }
};

Message sample_message() {
  return Message("m-1", to_bytes("factura body"),
                 {{"dept", "finance"}, {"mode", "automatic"}},
                 {{"annex", to_bytes("annex bytes")}});
}

}  // namespace

TEST_CASE("body encryption hides and restores the payload") {
  SecurityRig rig;
  Message m = sample_message();
  Message enc = encrypt_message(m, rig.keys, "corporate-es",
                                {MessagePart::body}, rig.provider);
  CHECK(enc.body() != m.body());
  CHECK(*enc.header("dept") == "finance");  // headers untouched
  CHECK(enc.header(sec_header::encrypted));

  Message dec = decrypt_message(enc, rig.keys, "corporate-es", rig.provider);
  CHECK(dec.body() == m.body());
  CHECK(!dec.header(sec_header::encrypted));
}

TEST_CASE("header and attachment encryption cover their parts") {
  SecurityRig rig;
  Message m = sample_message();
  Message enc = encrypt_message(
      m, rig.keys, "corporate-es",
      {MessagePart::body, MessagePart::headers, MessagePart::attachments},
      rig.provider);
  CHECK(!enc.header("dept"));  // folded away
  CHECK(enc.attachments().at("annex") != m.attachments().at("annex"));

  Message dec = decrypt_message(enc, rig.keys, "corporate-es", rig.provider);
  CHECK(dec.body() == m.body());
  CHECK(*dec.header("dept") == "finance");
  CHECK(dec.attachments().at("annex") == m.attachments().at("annex"));
}

TEST_CASE("decryption failures carry distinct kinds") {
  SecurityRig rig;
  rig.keys.add("other", keypair_from_seed("other"));
  Message m = sample_message();
  CHECK(err_kind([&] {
          decrypt_message(m, rig.keys, "corporate-es", rig.provider);
        }) == "NotEncrypted");
  Message enc = encrypt_message(m, rig.keys, "corporate-es",
                                {MessagePart::body}, rig.provider);
  CHECK(err_kind([&] {
          decrypt_message(enc, rig.keys, "other", rig.provider);
        }) == "DecryptFailure");
}

TEST_CASE("signing stamps signer and survives verification") {
  SecurityRig rig;
  Message signedMsg =
      sign_message(sample_message(), rig.keys, "corporate-es", rig.provider);
  CHECK(*signedMsg.header(sec_header::signer) == "corporate-es");
  REQUIRE(signedMsg.header(sec_header::signature));

  Exchange ex(signedMsg);
  verify_message(ex, rig.trust, "corporate-es", rig.provider);
  CHECK(*ex.property("verified") == "true");
}

TEST_CASE("verification rejects tampered bodies and missing signatures") {
  SecurityRig rig;
  Message signedMsg =
      sign_message(sample_message(), rig.keys, "corporate-es", rig.provider);

  Bytes tampered = signedMsg.body();
  tampered[0] ^= 0x01;  // one bit
  Exchange bad(signedMsg.with_body(tampered));
  CHECK(err_kind([&] {
          verify_message(bad, rig.trust, "corporate-es", rig.provider);
        }) == "VerificationFailed");

  Exchange unsignedEx(sample_message());
  CHECK(err_kind([&] {
          verify_message(unsignedEx, rig.trust, "corporate-es", rig.provider);
        }) == "MissingSignature");
}

TEST_CASE("tokens validate, expire and refresh once") {
  SecurityRig rig;
  AuthToken t = rig.tokens.issue("alice", {"submitter"}, Tick{100}, true);
  AuthToken seen = rig.tokens.validate(t.tokenId);
  CHECK(seen.subject == "alice");
  CHECK(seen.roles.count("submitter") == 1);

  rig.clock->advance(101);
  CHECK(err_kind([&] { rig.tokens.validate(t.tokenId); }) == "TokenExpired");

  // still inside the refresh grace window
  AuthToken fresh = rig.tokens.refresh(t.tokenId);
  CHECK(fresh.tokenId != t.tokenId);
  CHECK(fresh.subject == "alice");
  CHECK(rig.tokens.validate(fresh.tokenId).subject == "alice");

  // the old id is retired: second refresh and validate both fail
  CHECK(err_kind([&] { rig.tokens.refresh(t.tokenId); }) != "");
  CHECK(err_kind([&] { rig.tokens.validate(t.tokenId); }) != "");

  CHECK(err_kind([&] { rig.tokens.validate("nope"); }) == "TokenUnknown");
}

TEST_CASE("refresh grace window closes") {
  SecurityRig rig;
  AuthToken t = rig.tokens.issue("bob", {}, Tick{10}, true);
  rig.clock->advance(10 + TokenService::kRefreshGrace + 1);
  CHECK(err_kind([&] { rig.tokens.refresh(t.tokenId); }) == "TokenExpired");
}

TEST_CASE("non-refreshable tokens cannot refresh") {
  SecurityRig rig;
  AuthToken t = rig.tokens.issue("carol", {}, Tick{10}, false);
  CHECK(err_kind([&] { rig.tokens.refresh(t.tokenId); }) == "NotRefreshable");
}

TEST_CASE("authorization checks roles and stamps the principal") {
  SecurityRig rig;
  AuditLog audit(rig.clock);
  AuthToken t = rig.tokens.issue("alice", {"submitter"});

  Exchange ok(sample_message().with_header(sec_header::token, t.tokenId));
  authorize(ok, {"submitter"}, rig.tokens, &audit);
  CHECK(*ok.message().header(sec_header::principal) == "alice");

  Exchange denied(sample_message().with_header(sec_header::token, t.tokenId));
  try {
    authorize(denied, {"approver", "submitter"}, rig.tokens, &audit);
    FAIL("expected AuthorizationDenied");
  } catch (const PatternError& e) {
    CHECK(e.kind() == "AuthorizationDenied");
    CHECK(std::string(e.what()).find("approver") != std::string::npos);
  }
  CHECK(audit.records_of_kind("authorization-denied").size() == 1);

  Exchange noToken(sample_message());
  CHECK(err_kind([&] { authorize(noToken, {"x"}, rig.tokens); }) != "");
}

TEST_CASE("principal propagation needs a valid token") {
  SecurityRig rig;
  AuthToken t = rig.tokens.issue("alice", {"submitter"});
  Message carried =
      propagate_principal(sample_message().with_header(sec_header::token, t.tokenId),
                          rig.tokens);
  CHECK(*carried.header(sec_header::principal) == "alice");
  CHECK(err_kind([&] { propagate_principal(sample_message(), rig.tokens); }) ==
        "NoPrincipal");
}

TEST_CASE("audit chain verification pinpoints mutations") {
  auto clock = std::make_shared<ManualClock>();
  AuditLog log(clock);
  for (int i = 0; i < 20; ++i) {
    clock->advance(1);
    log.append("event", "actor-" + std::to_string(i % 3),
               "details " + std::to_string(i));
  }
  CHECK(!log.verify_chain());

  // every single-field mutation must be detected at or after its record
  for (std::size_t victim = 0; victim < 20; ++victim) {
    auto copy = log.records();
    copy[victim].details += "!";
    auto broken = AuditLog::verify_records(copy);
    REQUIRE(broken);
    CHECK(*broken == copy[victim].seq);
  }
}

TEST_CASE("audit log file round trips with escaping") {
  fs::path file = fs::temp_directory_path() /
                  ("pf-audit-" + std::to_string(::getpid()) + ".log");
  fs::remove(file);
  auto clock = std::make_shared<ManualClock>();
  {
    AuditLog log(clock, file);
    log.append("kind|with|pipes", "actor\\slash", "line\nbreak and | pipe");
    log.append("plain", "actor", "details");
  }
  auto records = AuditLog::load_records(file);
  REQUIRE(records.size() == 2);
  CHECK(records[0].kind == "kind|with|pipes");
  CHECK(records[0].actor == "actor\\slash");
  CHECK(records[0].details == "line\nbreak and | pipe");
  CHECK(!AuditLog::verify_records(records));

  // flip one byte inside the stored file: chain must break
  std::string text;
  {
    std::ifstream in(file);
    std::getline(in, text, '\0');
  }
  auto at = text.find("details");
  text[at] = 'X';
  {
    std::ofstream out(file, std::ios::trunc);
    out << text;
  }
  auto tampered = AuditLog::load_records(file);
  CHECK(AuditLog::verify_records(tampered));
  fs::remove(file);
}

TEST_CASE("secure channel encrypts in flight and checks integrity") {
  SecurityRig rig;
  Bytes channelKey = keypair_from_seed("channel").privateKey;

  auto inner = std::make_shared<Channel>("sec", 16, ChannelMode::queue);
  SecureChannel ch(inner, {ChannelSecurityMode::encrypted,
                           ChannelSecurityMode::integrity},
                   channelKey, rig.provider);
  Message m = sample_message();
  ch.send(m);

  // the raw queued payload is ciphertext
  CHECK(inner->pending() == 1);
  auto received = ch.receive();
  REQUIRE(received);
  CHECK(received->body() == m.body());

  // tamper inside the queue: receive must reject
  ch.send(m);
  inner->mutate_queued(0, [](Message& queued) {
    Bytes b = queued.body();
    if (!b.empty()) b[0] ^= 0x40;
    queued = queued.with_body(b);
  });
  CHECK(err_kind([&] { ch.receive(); }) != "");
}

TEST_CASE("authenticated channels demand a valid sender token") {
  SecurityRig rig;
  auto inner = std::make_shared<Channel>("auth", 16, ChannelMode::queue);
  SecureChannel ch(inner, {ChannelSecurityMode::authenticated}, {},
                   rig.provider, &rig.tokens);
  CHECK(err_kind([&] { ch.send(sample_message()); }) == "AuthenticationFailed");

  AuthToken t = rig.tokens.issue("alice", {});
  ch.send(sample_message().with_header(sec_header::token, t.tokenId));
  CHECK(inner->pending() == 1);
}

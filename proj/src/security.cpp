#include "patternflow/security.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "patternflow/codec.hpp"
#include "patternflow/errors.hpp"

namespace patternflow {
namespace {

bool is_sec_header(const std::string& name) {
  return name.rfind("sec.", 0) == 0;
}

std::string parts_tag(const std::set<MessagePart>& parts) {
  std::string tag = "ref;parts=";
  bool first = true;
  for (MessagePart p : {MessagePart::body, MessagePart::headers,
                        MessagePart::attachments}) {
    if (!parts.count(p)) continue;
    if (!first) tag += ",";
    first = false;
    tag += p == MessagePart::body ? "body"
           : p == MessagePart::headers ? "headers"
                                       : "attachments";
  }
  return tag;
}

std::set<MessagePart> parts_from_tag(const std::string& tag) {
  std::set<MessagePart> parts;
  if (tag.find("body") != std::string::npos) parts.insert(MessagePart::body);
  if (tag.find("headers") != std::string::npos)
    parts.insert(MessagePart::headers);
  if (tag.find("attachments") != std::string::npos)
    parts.insert(MessagePart::attachments);
  return parts;
}

}  // namespace

Message encrypt_message(const Message& msg, const KeyStore& keys,
                        const std::string& keyAlias,
                        const std::set<MessagePart>& parts,
                        const CryptoProvider& provider) {
  Bytes key = keys.get_private(keyAlias).privateKey;
  Message out = msg;

  if (parts.count(MessagePart::headers)) {
    nlohmann::json folded = nlohmann::json::object();
    HeaderMap kept;
    for (const auto& [name, value] : out.headers()) {
      if (is_sec_header(name))
        kept[name] = value;
      else
        folded[name] = value;
    }
    Bytes blob = provider.encrypt(key, to_bytes(folded.dump()));
    kept[sec_header::encryptedHeaders] = base64_encode(blob);
    out = out.with_headers(std::move(kept));
  }

  if (parts.count(MessagePart::body))
    out = out.with_body(provider.encrypt(key, out.body()));

  if (parts.count(MessagePart::attachments))
    for (const auto& [name, data] : msg.attachments())
      out = out.with_attachment(name, provider.encrypt(key, data));

  return out.with_header(sec_header::encrypted, parts_tag(parts));
}

Message decrypt_message(const Message& msg, const KeyStore& keys,
                        const std::string& keyAlias,
                        const CryptoProvider& provider) {
  auto tag = msg.header(sec_header::encrypted);
  if (!tag) raise("NotEncrypted", "message carries no encryption marker");
  Bytes key = keys.get_private(keyAlias).privateKey;
  std::set<MessagePart> parts = parts_from_tag(*tag);
  Message out = msg.without_header(sec_header::encrypted);

  if (parts.count(MessagePart::body))
    out = out.with_body(provider.decrypt(key, out.body()));

  if (parts.count(MessagePart::attachments))
    for (const auto& [name, data] : msg.attachments())
      out = out.with_attachment(name, provider.decrypt(key, data));

  if (parts.count(MessagePart::headers)) {
    auto blob = out.header(sec_header::encryptedHeaders);
    if (!blob) raise("DecryptFailure", "encrypted-headers blob missing");
    Bytes plain = provider.decrypt(key, base64_decode(*blob));
    out = out.without_header(sec_header::encryptedHeaders);
    auto folded = nlohmann::json::parse(to_string(plain));
    for (const auto& [name, value] : folded.items())
      out = out.with_header(name, value.get<std::string>());
  }

  return out;
}

Message sign_message(const Message& msg, const KeyStore& keys,
                     const std::string& privAlias,
                     const CryptoProvider& provider) {
  Bytes priv = keys.get_private(privAlias).privateKey;
  Bytes sig = provider.sign(priv, msg.body());
  return msg.with_header(sec_header::signature, to_hex(sig))
      .with_header(sec_header::signer, privAlias);
}

void verify_message(Exchange& exchange, const TrustStore& trust,
                    const std::string& trustAlias,
                    const CryptoProvider& provider) {
  const Message& msg = exchange.message();
  auto sigHex = msg.header(sec_header::signature);
  if (!sigHex) raise("MissingSignature", "message is not signed");
  Certificate cert = trust.get_cert(trustAlias);
  if (!provider.verify(cert, msg.body(), base16_decode(*sigHex)))
    raise("VerificationFailed",
          "signature does not match content for alias '" + trustAlias + "'");
  exchange.set_property("verified", "true");
}

TokenService::TokenService(std::shared_ptr<SecureStore> store, ClockPtr clock,
                           AuditLog* audit)
    : store_(std::move(store)), clock_(std::move(clock)), audit_(audit) {}

void TokenService::store_token(const AuthToken& token, bool retired,
                               std::optional<Tick> ttl) {
  nlohmann::json doc;
  doc["subject"] = token.subject;
  doc["roles"] = token.roles;
  doc["issuedAt"] = token.issuedAt;
  if (token.expiresAt) doc["expiresAt"] = *token.expiresAt;
  if (ttl) doc["ttl"] = *ttl;
  doc["refreshable"] = token.refreshable;
  doc["retired"] = retired;
  store_->put(token.tokenId, CredentialKind::token, to_bytes(doc.dump()));
}

AuthToken TokenService::load(const std::string& tokenId, bool& retired,
                             std::optional<Tick>& ttl) const {
  Bytes raw;
  try {
    raw = store_->get(tokenId);
  } catch (const PatternError& e) {
    if (e.kind() == "UnknownAlias")
      raise("TokenUnknown", "no token '" + tokenId + "'");
    throw;
  }
  auto doc = nlohmann::json::parse(to_string(raw));
  AuthToken token;
  token.tokenId = tokenId;
  token.subject = doc["subject"].get<std::string>();
  token.roles = doc["roles"].get<std::set<std::string>>();
  token.issuedAt = doc["issuedAt"].get<Tick>();
  if (doc.contains("expiresAt")) token.expiresAt = doc["expiresAt"].get<Tick>();
  token.refreshable = doc["refreshable"].get<bool>();
  retired = doc["retired"].get<bool>();
  ttl.reset();
  if (doc.contains("ttl")) ttl = doc["ttl"].get<Tick>();
  return token;
}

AuthToken TokenService::issue(const std::string& subject,
                              const std::set<std::string>& roles,
                              std::optional<Tick> ttl, bool refreshable) {
  std::lock_guard lock(mutex_);
  Tick now = clock_->now();
  AuthToken token;
  std::uint64_t n = ++issued_;
  token.tokenId =
      "tok-" + std::to_string(n) + "-" +
      sha256_hex(to_bytes(subject + "#" + std::to_string(n))).substr(0, 12);
  token.subject = subject;
  token.roles = roles;
  token.issuedAt = now;
  if (ttl) token.expiresAt = now + *ttl;
  token.refreshable = refreshable;
  store_token(token, false, ttl);
  if (audit_)
    audit_->append("token-issued", subject, "token " + token.tokenId);
  return token;
}

AuthToken TokenService::validate(const std::string& tokenId) const {
  bool retired = false;
  std::optional<Tick> ttl;
  AuthToken token = load(tokenId, retired, ttl);
  if (retired) raise("TokenUnknown", "token '" + tokenId + "' was retired");
  if (token.expiresAt && clock_->now() > *token.expiresAt)
    raise("TokenExpired", "token '" + tokenId + "' expired at " +
                              std::to_string(*token.expiresAt));
  return token;
}

AuthToken TokenService::refresh(const std::string& tokenId) {
  std::lock_guard lock(mutex_);
  bool retired = false;
  std::optional<Tick> ttl;
  AuthToken old = load(tokenId, retired, ttl);
  if (retired) raise("TokenUnknown", "token '" + tokenId + "' was retired");
  if (!old.refreshable)
    raise("NotRefreshable", "token '" + tokenId + "' is not refreshable");
  Tick now = clock_->now();
  if (old.expiresAt && now > *old.expiresAt + kRefreshGrace)
    raise("TokenExpired", "token '" + tokenId + "' is beyond the refresh grace window");

  store_token(old, true, ttl);  // retire the old id; refresh is single-use

  AuthToken fresh;
  std::uint64_t n = ++issued_;
  fresh.tokenId =
      "tok-" + std::to_string(n) + "-" +
      sha256_hex(to_bytes(old.subject + "#" + std::to_string(n))).substr(0, 12);
  fresh.subject = old.subject;
  fresh.roles = old.roles;
  fresh.issuedAt = now;
  if (ttl) fresh.expiresAt = now + *ttl;
  fresh.refreshable = old.refreshable;
  store_token(fresh, false, ttl);
  if (audit_)
    audit_->append("token-refreshed", old.subject,
                   tokenId + " -> " + fresh.tokenId);
  return fresh;
}

void authorize(Exchange& exchange, const std::set<std::string>& requiredRoles,
               const TokenService& tokens, AuditLog* audit) {
  auto tokenId = exchange.message().header(sec_header::token);
  if (!tokenId) {
    if (audit)
      audit->append("authorization-denied", "-", "no token presented");
    raise("AuthorizationDenied", "no token presented");
  }
  AuthToken token;
  try {
    token = tokens.validate(*tokenId);
  } catch (const PatternError& e) {
    if (audit)
      audit->append("authorization-denied", *tokenId, e.kind());
    throw;
  }
  std::vector<std::string> missing;
  for (const auto& role : requiredRoles)
    if (!token.roles.count(role)) missing.push_back(role);
  if (!missing.empty()) {
    std::string list;
    for (const auto& role : missing) {
      if (!list.empty()) list += ",";
      list += role;
    }
    if (audit)
      audit->append("authorization-denied", token.subject,
                    "missing roles: " + list);
    raise("AuthorizationDenied", "missing roles: " + list);
  }
  exchange.set_message(
      exchange.message().with_header(sec_header::principal, token.subject));
}

Message propagate_principal(const Message& msg, const TokenService& tokens) {
  auto tokenId = msg.header(sec_header::token);
  if (!tokenId)
    raise("NoPrincipal", "no token to derive a principal from");
  AuthToken token = tokens.validate(*tokenId);
  return msg.with_header(sec_header::principal, token.subject);
}

namespace {

std::string escape_field(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\')
      out += "\\\\";
    else if (c == '|')
      out += "\\|";
    else if (c == '\n')
      out += "\\n";
    else
      out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_unescape(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (std::size_t i = 0; i < line.size(); i++) {
    char c = line[i];
    if (c == '\\' && i + 1 < line.size()) {
      char next = line[++i];
      if (next == 'n')
        cur.push_back('\n');
      else
        cur.push_back(next);
      continue;
    }
    if (c == '|') {
      fields.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string canonical_bytes(const AuditRecord& r) {
  return std::to_string(r.seq) + "|" + std::to_string(r.timestamp) + "|" +
         r.kind + "|" + r.actor + "|" + r.details;
}

}  // namespace

AuditLog::AuditLog(ClockPtr clock, std::filesystem::path file)
    : clock_(std::move(clock)), file_(std::move(file)) {
  if (!file_.empty() && file_.has_parent_path())
    std::filesystem::create_directories(file_.parent_path());
}

AuditRecord AuditLog::append(const std::string& kind, const std::string& actor,
                             const std::string& details) {
  std::lock_guard lock(mutex_);
  AuditRecord rec;
  rec.seq = records_.size();
  rec.timestamp = clock_->now();
  rec.kind = kind;
  rec.actor = actor;
  rec.details = details;
  std::string prev = records_.empty() ? "" : records_.back().chainHash;
  rec.chainHash = sha256_hex(to_bytes(prev + canonical_bytes(rec)));
  records_.push_back(rec);

  if (!file_.empty()) {
    std::ofstream out(file_, std::ios::app);
    out << std::to_string(rec.seq) << "|" << std::to_string(rec.timestamp)
        << "|" << escape_field(rec.kind) << "|" << escape_field(rec.actor)
        << "|" << escape_field(rec.details) << "|" << rec.chainHash << "\n";
  }
  return rec;
}

std::optional<std::uint64_t> AuditLog::verify_records(
    const std::vector<AuditRecord>& records) {
  std::string prev;
  for (std::size_t i = 0; i < records.size(); i++) {
    const AuditRecord& rec = records[i];
    if (rec.seq != i) return i;
    if (sha256_hex(to_bytes(prev + canonical_bytes(rec))) != rec.chainHash)
      return i;
    prev = rec.chainHash;
  }
  return std::nullopt;
}

std::optional<std::uint64_t> AuditLog::verify_chain() const {
  std::lock_guard lock(mutex_);
  return verify_records(records_);
}

std::vector<AuditRecord> AuditLog::records_of_kind(
    const std::string& kind) const {
  std::lock_guard lock(mutex_);
  std::vector<AuditRecord> out;
  for (const auto& rec : records_)
    if (rec.kind == kind) out.push_back(rec);
  return out;
}

std::vector<AuditRecord> AuditLog::load_records(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) raise("ParseError", "cannot open audit log " + file.string());
  std::vector<AuditRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_unescape(line);
    if (fields.size() != 6)
      raise("ParseError", "audit line has " + std::to_string(fields.size()) +
                              " fields, expected 6");
    AuditRecord rec;
    rec.seq = std::stoull(fields[0]);
    rec.timestamp = std::stoull(fields[1]);
    rec.kind = fields[2];
    rec.actor = fields[3];
    rec.details = fields[4];
    rec.chainHash = fields[5];
    records.push_back(std::move(rec));
  }
  return records;
}

AuditHook AuditLog::hook() {
  return [this](const std::string& kind, const std::string& actor,
                const std::string& details) { append(kind, actor, details); };
}

SecureChannel::SecureChannel(std::shared_ptr<Channel> inner,
                             std::set<ChannelSecurityMode> modes,
                             Bytes channelKey, const CryptoProvider& provider,
                             const TokenService* tokens)
    : inner_(std::move(inner)),
      modes_(std::move(modes)),
      key_(std::move(channelKey)),
      provider_(provider),
      tokens_(tokens) {}

void SecureChannel::send(const Message& m) {
  Message out = m;
  if (modes_.count(ChannelSecurityMode::authenticated)) {
    auto tokenId = m.header(sec_header::token);
    if (!tokenId)
      raise("AuthenticationFailed", "sender presented no token");
    if (!tokens_)
      raise("AuthenticationFailed", "channel has no token validator");
    try {
      tokens_->validate(*tokenId);
    } catch (const PatternError& e) {
      raise("AuthenticationFailed", e.kind());
    }
  }
  if (modes_.count(ChannelSecurityMode::encrypted))
    out = out.with_body(provider_.encrypt(key_, out.body()));
  if (modes_.count(ChannelSecurityMode::integrity))
    out = out.with_header(sec_header::checksum, sha256_hex(out.body()));
  inner_->send(out);
}

std::optional<Message> SecureChannel::receive() {
  auto m = inner_->receive();
  if (!m) return std::nullopt;
  Message out = *m;
  if (modes_.count(ChannelSecurityMode::integrity)) {
    auto sum = out.header(sec_header::checksum);
    if (!sum || *sum != sha256_hex(out.body()))
      raise("IntegrityViolation", "payload checksum mismatch on channel '" +
                                      inner_->name() + "'");
    out = out.without_header(sec_header::checksum);
  }
  if (modes_.count(ChannelSecurityMode::encrypted))
    out = out.with_body(provider_.decrypt(key_, out.body()));
  return out;
}

EncryptingStore::EncryptingStore(std::shared_ptr<KeyValueStore> inner,
                                 Bytes key, const CryptoProvider& provider,
                                 bool encrypt, bool safeMode)
    : inner_(std::move(inner)),
      key_(std::move(key)),
      provider_(provider),
      encrypt_(encrypt),
      safeMode_(safeMode) {}

void EncryptingStore::put(const std::string& key, Bytes value,
                          PutOptions opts) {
  Bytes payload = std::move(value);
  if (encrypt_) payload = provider_.encrypt(key_, payload);
  if (safeMode_) {
    Bytes sum = sha256(payload);
    sum.insert(sum.end(), payload.begin(), payload.end());
    payload = std::move(sum);
  }
  inner_->put(key, std::move(payload), opts);
}

Bytes EncryptingStore::get(const std::string& key,
                           const std::string& callerScope) {
  Bytes payload = inner_->get(key, callerScope);
  if (safeMode_) {
    if (payload.size() < 32)
      raise("IntegrityViolation", "stored record shorter than its checksum");
    Bytes sum(payload.begin(), payload.begin() + 32);
    Bytes rest(payload.begin() + 32, payload.end());
    if (sha256(rest) != sum)
      raise("IntegrityViolation", "stored record checksum mismatch");
    payload = std::move(rest);
  }
  if (encrypt_) payload = provider_.decrypt(key_, payload);
  return payload;
}

bool EncryptingStore::remove(const std::string& key) {
  return inner_->remove(key);
}

std::vector<std::string> EncryptingStore::query(const std::string& keyPrefix) {
  return inner_->query(keyPrefix);
}

}  // namespace patternflow

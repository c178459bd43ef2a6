#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "patternflow/channel.hpp"
#include "patternflow/clock.hpp"
#include "patternflow/exchange.hpp"
#include "patternflow/stores.hpp"

namespace patternflow {

/// Security state travels in reserved headers.
namespace sec_header {
inline constexpr const char* encrypted = "sec.encrypted";
inline constexpr const char* encryptedHeaders = "sec.hdr";
inline constexpr const char* signature = "sec.signature";
inline constexpr const char* signer = "sec.signer";
inline constexpr const char* principal = "sec.principal";
inline constexpr const char* checksum = "sec.checksum";
inline constexpr const char* token = "sec.token";
}  // namespace sec_header

enum class MessagePart { body, headers, attachments };

/// Encrypts the selected parts with the alias's key. Headers are folded into
/// one ciphertext blob under sec.hdr (reserved sec.* headers stay readable);
/// attachments are ciphered value-wise in place. sec.encrypted records the
/// covered parts for decrypt.
Message encrypt_message(const Message& msg, const KeyStore& keys,
                        const std::string& keyAlias,
                        const std::set<MessagePart>& parts,
                        const CryptoProvider& provider);

/// Inverse of encrypt_message. Throws NotEncrypted without the marker
/// header, DecryptFailure on wrong key or corrupt content.
Message decrypt_message(const Message& msg, const KeyStore& keys,
                        const std::string& keyAlias,
                        const CryptoProvider& provider);

/// Signs the body; sets sec.signature (hex) and sec.signer.
Message sign_message(const Message& msg, const KeyStore& keys,
                     const std::string& privAlias,
                     const CryptoProvider& provider);

/// Read-only check against the trusted certificate; sets exchange property
/// "verified" to "true". Throws MissingSignature / VerificationFailed.
void verify_message(Exchange& exchange, const TrustStore& trust,
                    const std::string& trustAlias,
                    const CryptoProvider& provider);

struct AuthToken {
  std::string tokenId;
  std::string subject;
  std::set<std::string> roles;
  Tick issuedAt = 0;
  std::optional<Tick> expiresAt;
  bool refreshable = false;
};

class AuditLog;

/// Issues, validates and refreshes tokens persisted in a SecureStore.
/// Refresh is single-use: the old id is retired and a fresh token minted.
/// Expired refreshable tokens stay refreshable for a 30-tick grace window.
class TokenService {
 public:
  TokenService(std::shared_ptr<SecureStore> store, ClockPtr clock,
               AuditLog* audit = nullptr);

  AuthToken issue(const std::string& subject,
                  const std::set<std::string>& roles,
                  std::optional<Tick> ttl = std::nullopt,
                  bool refreshable = false);
  /// Throws TokenUnknown / TokenExpired.
  AuthToken validate(const std::string& tokenId) const;
  /// Throws TokenUnknown / NotRefreshable / TokenExpired (beyond grace).
  AuthToken refresh(const std::string& tokenId);

  static constexpr Tick kRefreshGrace = 30;

 private:
  AuthToken load(const std::string& tokenId, bool& retired,
                 std::optional<Tick>& ttl) const;
  void store_token(const AuthToken& token, bool retired,
                   std::optional<Tick> ttl);

  std::shared_ptr<SecureStore> store_;
  ClockPtr clock_;
  AuditLog* audit_;
  std::mutex mutex_;
  std::uint64_t issued_ = 0;
};

/// Checks the exchange's sec.token against required roles. On pass the
/// message gains sec.principal; on deny an audit event is written and
/// AuthorizationDenied (naming the missing roles) is thrown. Expiry wins
/// over role checks (TokenExpired).
void authorize(Exchange& exchange, const std::set<std::string>& requiredRoles,
               const TokenService& tokens, AuditLog* audit = nullptr);

/// Validates the carried token and stamps sec.principal so a delegate target
/// authorizes as the original subject. Throws NoPrincipal without a token.
Message propagate_principal(const Message& msg, const TokenService& tokens);

struct AuditRecord {
  std::uint64_t seq = 0;
  Tick timestamp = 0;
  std::string kind;
  std::string actor;
  std::string details;
  std::string chainHash;
};

/// Hash-chained, optionally file-backed event log. Record i's chainHash
/// covers record i-1's chainHash, so any mutation of a stored record breaks
/// verification at that record or its successor.
///
/// File format: one record per line, `seq|timestamp|kind|actor|details|chainHash`
/// with backslash and pipe escaped as \\ and \|. The chain is computed over
/// the unescaped canonical bytes `seq|timestamp|kind|actor|details`.
class AuditLog {
 public:
  explicit AuditLog(ClockPtr clock, std::filesystem::path file = {});

  AuditRecord append(const std::string& kind, const std::string& actor,
                     const std::string& details);

  /// nullopt when intact, otherwise the first broken sequence number.
  std::optional<std::uint64_t> verify_chain() const;

  const std::vector<AuditRecord>& records() const { return records_; }
  std::vector<AuditRecord> records_of_kind(const std::string& kind) const;

  /// Offline verification of a possibly tampered log file.
  static std::vector<AuditRecord> load_records(
      const std::filesystem::path& file);
  static std::optional<std::uint64_t> verify_records(
      const std::vector<AuditRecord>& records);

  AuditHook hook();

 private:
  ClockPtr clock_;
  std::filesystem::path file_;
  mutable std::mutex mutex_;
  std::vector<AuditRecord> records_;
};

enum class ChannelSecurityMode { encrypted, authenticated, integrity };

/// Transport-level wrapper: encrypts payloads at rest in the channel,
/// requires a valid sender token, and/or attaches a per-message checksum
/// verified on receive. An empty mode set is a transparent pass-through.
class SecureChannel {
 public:
  SecureChannel(std::shared_ptr<Channel> inner,
                std::set<ChannelSecurityMode> modes, Bytes channelKey,
                const CryptoProvider& provider,
                const TokenService* tokens = nullptr);

  /// Throws AuthenticationFailed in authenticated mode for a missing,
  /// unknown or expired sender token.
  void send(const Message& m);
  /// Throws IntegrityViolation / DecryptFailure on tampered payloads.
  std::optional<Message> receive();

  Channel& inner() { return *inner_; }

 private:
  std::shared_ptr<Channel> inner_;
  std::set<ChannelSecurityMode> modes_;
  Bytes key_;
  const CryptoProvider& provider_;
  const TokenService* tokens_;
};

/// At-rest protection decorator: values are encrypted and/or checksummed
/// before they reach the inner store, so the raw log never holds plaintext.
class EncryptingStore final : public KeyValueStore {
 public:
  EncryptingStore(std::shared_ptr<KeyValueStore> inner, Bytes key,
                  const CryptoProvider& provider, bool encrypt = true,
                  bool safeMode = false);

  void put(const std::string& key, Bytes value, PutOptions opts = {}) override;
  Bytes get(const std::string& key, const std::string& callerScope) override;
  bool remove(const std::string& key) override;
  std::vector<std::string> query(const std::string& keyPrefix) override;

 private:
  std::shared_ptr<KeyValueStore> inner_;
  Bytes key_;
  const CryptoProvider& provider_;
  bool encrypt_;
  bool safeMode_;
};

}  // namespace patternflow

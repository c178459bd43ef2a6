#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "patternflow/bytes.hpp"
#include "patternflow/clock.hpp"
#include "patternflow/crypto.hpp"

namespace patternflow {

enum class Visibility : std::uint8_t { global = 0, local = 1 };

struct PutOptions {
  std::uint32_t ttl = 0;  // ticks; 0 = no expiry
  Visibility visibility = Visibility::global;
  std::string scope;  // owning flow for local entries; "" = store owner
};

/// Keyed byte store accessor. get() takes the caller's flow scope so stores
/// can enforce local-entry visibility.
class KeyValueStore {
 public:
  virtual ~KeyValueStore() = default;

  virtual void put(const std::string& key, Bytes value,
                   PutOptions opts = {}) = 0;
  /// Throws KeyNotFound / ScopeViolation / StoreUnavailable.
  virtual Bytes get(const std::string& key,
                    const std::string& callerScope = "") = 0;
  /// Returns whether the key existed.
  virtual bool remove(const std::string& key) = 0;
  /// Keys with the given prefix, sorted lexicographically.
  virtual std::vector<std::string> query(const std::string& keyPrefix) = 0;
};

/// Persistent store backed by an append-only record log, replayed with
/// last-writer-wins on open. With an empty directory it runs memory-only
/// (used for scratch stores in tests).
///
/// Record layout (all integers big-endian):
///   u32 length, then: opcode u8 (1=put, 2=delete), key length u16, key,
///   value length u32, value, ttl u32, created-at u64, visibility u8,
///   scope length u16, scope (owning flow of a local entry).
class DataStore final : public KeyValueStore {
 public:
  DataStore(std::string name, std::filesystem::path dir, ClockPtr clock,
            std::string owner = "");
  ~DataStore() override;

  void put(const std::string& key, Bytes value, PutOptions opts = {}) override;
  Bytes get(const std::string& key, const std::string& callerScope) override;
  bool remove(const std::string& key) override;
  std::vector<std::string> query(const std::string& keyPrefix) override;

  const std::string& name() const { return name_; }
  const std::string& owner() const { return owner_; }
  std::filesystem::path file_path() const;

  /// Replica fault injection: a dead store throws StoreUnavailable on every
  /// accessor call until revived.
  void kill();
  void revive();
  bool alive() const;

 private:
  struct Entry {
    Bytes value;
    Tick createdAt = 0;
    std::uint32_t ttl = 0;
    Visibility visibility = Visibility::global;
    std::string scope;
  };

  void check_alive() const;
  bool expired(const Entry& e) const;
  void append_record(std::uint8_t opcode, const std::string& key,
                     const Bytes& value, std::uint32_t ttl, Visibility vis,
                     const std::string& scope);
  void replay();

  std::string name_;
  std::filesystem::path dir_;
  ClockPtr clock_;
  std::string owner_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
  bool alive_ = true;
};

/// Flow-instance variables. Never persisted; dropped with the instance.
class TransientStore {
 public:
  void set(const std::string& name, std::string value);
  /// Throws UnknownVariable.
  std::string get(const std::string& name) const;
  bool has(const std::string& name) const;

 private:
  std::map<std::string, std::string> variables_;
};

using AuditHook =
    std::function<void(const std::string& kind, const std::string& actor,
                       const std::string& details)>;

/// Private keys with their certificates. Material never leaves the process;
/// every access emits an audit event through the hook.
class KeyStore {
 public:
  void add(const std::string& alias, KeyPair pair);
  /// Throws UnknownAlias.
  KeyPair get_private(const std::string& alias) const;
  bool has(const std::string& alias) const;
  void set_audit_hook(AuditHook hook) { audit_ = std::move(hook); }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, KeyPair> pairs_;
  AuditHook audit_;
};

/// Peer certificates only; no private material.
class TrustStore {
 public:
  void add(const std::string& alias, Certificate cert);
  /// Throws UnknownAlias.
  Certificate get_cert(const std::string& alias) const;
  bool has(const std::string& alias) const;
  void set_audit_hook(AuditHook hook) { audit_ = std::move(hook); }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Certificate> certs_;
  AuditHook audit_;
};

enum class CredentialKind { userPassword, token };

/// Credential store over an inner KeyValueStore (typically an encrypting
/// wrapper so secrets are never plaintext at rest). Listing exposes ids and
/// kinds only.
class SecureStore {
 public:
  SecureStore(std::shared_ptr<KeyValueStore> inner, ClockPtr clock);

  void put(const std::string& credentialId, CredentialKind kind, Bytes secret,
           std::optional<Tick> expiresAt = std::nullopt);
  /// Throws UnknownAlias / ExpiredCredential.
  Bytes get(const std::string& credentialId) const;
  bool remove(const std::string& credentialId);
  std::vector<std::pair<std::string, CredentialKind>> list() const;
  void set_audit_hook(AuditHook hook) { audit_ = std::move(hook); }

 private:
  std::shared_ptr<KeyValueStore> inner_;
  ClockPtr clock_;
  AuditHook audit_;
};

/// Quorum-write, first-hit-read replication over N data stores.
class RedundantStore {
 public:
  RedundantStore(std::vector<std::shared_ptr<DataStore>> replicas,
                 std::size_t writeQuorum);

  /// Throws QuorumUnavailable when fewer than writeQuorum replicas accept.
  void put(const std::string& key, const Bytes& value, PutOptions opts = {});
  /// First replica (in order) that is alive and holds the key.
  Bytes get(const std::string& key, const std::string& callerScope = "") const;
  bool remove(const std::string& key);
  std::vector<std::string> query(const std::string& keyPrefix) const;

  std::size_t replica_count() const { return replicas_.size(); }
  DataStore& replica(std::size_t i) { return *replicas_[i]; }

 private:
  std::vector<std::shared_ptr<DataStore>> replicas_;
  std::size_t writeQuorum_;
};

/// Opens (and caches) named data stores under one data directory.
class StoreManager {
 public:
  StoreManager(std::filesystem::path dataDir, ClockPtr clock);

  std::shared_ptr<DataStore> open(const std::string& name,
                                  const std::string& owner = "");
  const std::filesystem::path& data_dir() const { return dataDir_; }

 private:
  std::filesystem::path dataDir_;
  ClockPtr clock_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<DataStore>> open_;
};

}  // namespace patternflow

#include "patternflow/stores.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "patternflow/codec.hpp"
#include "patternflow/errors.hpp"

namespace patternflow {

DataStore::DataStore(std::string name, std::filesystem::path dir,
                     ClockPtr clock, std::string owner)
    : name_(std::move(name)),
      dir_(std::move(dir)),
      clock_(std::move(clock)),
      owner_(std::move(owner)) {
  if (!dir_.empty()) {
    std::filesystem::create_directories(dir_);
    replay();
  }
}

DataStore::~DataStore() = default;

std::filesystem::path DataStore::file_path() const {
  return dir_ / (name_ + ".log");
}

void DataStore::check_alive() const {
  if (!alive_)
    raise("StoreUnavailable", "store '" + name_ + "' is not reachable");
}

bool DataStore::expired(const Entry& e) const {
  return e.ttl != 0 && clock_->now() > e.createdAt + e.ttl;
}

void DataStore::append_record(std::uint8_t opcode, const std::string& key,
                              const Bytes& value, std::uint32_t ttl,
                              Visibility vis, const std::string& scope) {
  if (dir_.empty()) return;
  Bytes rec;
  rec.push_back(opcode);
  put_be16(rec, static_cast<std::uint16_t>(key.size()));
  rec.insert(rec.end(), key.begin(), key.end());
  put_be32(rec, static_cast<std::uint32_t>(value.size()));
  rec.insert(rec.end(), value.begin(), value.end());
  put_be32(rec, ttl);
  put_be64(rec, clock_->now());
  rec.push_back(static_cast<std::uint8_t>(vis));
  put_be16(rec, static_cast<std::uint16_t>(scope.size()));
  rec.insert(rec.end(), scope.begin(), scope.end());

  Bytes framed;
  put_be32(framed, static_cast<std::uint32_t>(rec.size()));
  framed.insert(framed.end(), rec.begin(), rec.end());

  std::ofstream out(file_path(), std::ios::binary | std::ios::app);
  out.write(reinterpret_cast<const char*>(framed.data()),
            static_cast<std::streamsize>(framed.size()));
  out.flush();
  if (!out)
    raise("StoreUnavailable", "cannot append to " + file_path().string());
}

void DataStore::replay() {
  std::ifstream in(file_path(), std::ios::binary);
  if (!in) return;
  Bytes data((std::istreambuf_iterator<char>(in)),
             std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (pos + 4 <= data.size()) {
    std::uint32_t len = get_be32(data.data() + pos);
    pos += 4;
    if (pos + len > data.size()) break;  // torn tail record: ignore
    const std::uint8_t* p = data.data() + pos;
    const std::uint8_t* end = p + len;
    if (end - p < 3) break;
    std::uint8_t opcode = *p++;
    std::uint16_t keyLen = get_be16(p);
    p += 2;
    if (end - p < static_cast<std::ptrdiff_t>(keyLen) + 4) break;
    std::string key(reinterpret_cast<const char*>(p), keyLen);
    p += keyLen;
    std::uint32_t valueLen = get_be32(p);
    p += 4;
    if (end - p < static_cast<std::ptrdiff_t>(valueLen) + 15) break;
    Bytes value(p, p + valueLen);
    p += valueLen;
    std::uint32_t ttl = get_be32(p);
    p += 4;
    Tick createdAt = get_be64(p);
    p += 8;
    auto vis = static_cast<Visibility>(*p++);
    std::uint16_t scopeLen = get_be16(p);
    p += 2;
    if (end - p < static_cast<std::ptrdiff_t>(scopeLen)) break;
    std::string scope(reinterpret_cast<const char*>(p), scopeLen);

    if (opcode == 1)
      entries_[key] = Entry{std::move(value), createdAt, ttl, vis,
                            std::move(scope)};
    else if (opcode == 2)
      entries_.erase(key);
    pos += len;
  }
}

void DataStore::put(const std::string& key, Bytes value, PutOptions opts) {
  std::lock_guard lock(mutex_);
  check_alive();
  std::string scope = opts.scope.empty() ? owner_ : opts.scope;
  append_record(1, key, value, opts.ttl, opts.visibility, scope);
  entries_[key] = Entry{std::move(value), clock_->now(), opts.ttl,
                        opts.visibility, std::move(scope)};
}

Bytes DataStore::get(const std::string& key, const std::string& callerScope) {
  std::lock_guard lock(mutex_);
  check_alive();
  auto it = entries_.find(key);
  if (it != entries_.end() && expired(it->second)) {
    entries_.erase(it);
    it = entries_.end();
  }
  if (it == entries_.end())
    raise("KeyNotFound", "no entry '" + key + "' in store '" + name_ + "'");
  if (it->second.visibility == Visibility::local &&
      callerScope != it->second.scope)
    raise("ScopeViolation", "entry '" + key + "' is local to flow '" +
                                it->second.scope + "'");
  return it->second.value;
}

bool DataStore::remove(const std::string& key) {
  std::lock_guard lock(mutex_);
  check_alive();
  auto it = entries_.find(key);
  bool existed = it != entries_.end() && !expired(it->second);
  if (it != entries_.end()) entries_.erase(it);
  append_record(2, key, {}, 0, Visibility::global, "");
  return existed;
}

std::vector<std::string> DataStore::query(const std::string& keyPrefix) {
  std::lock_guard lock(mutex_);
  check_alive();
  std::vector<std::string> out;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (expired(it->second)) {
      it = entries_.erase(it);
      continue;
    }
    if (it->first.compare(0, keyPrefix.size(), keyPrefix) == 0)
      out.push_back(it->first);
    ++it;
  }
  return out;  // std::map iteration is already sorted
}

void DataStore::kill() {
  std::lock_guard lock(mutex_);
  alive_ = false;
}

void DataStore::revive() {
  std::lock_guard lock(mutex_);
  alive_ = true;
}

bool DataStore::alive() const {
  std::lock_guard lock(mutex_);
  return alive_;
}

void TransientStore::set(const std::string& name, std::string value) {
  variables_[name] = std::move(value);
}

std::string TransientStore::get(const std::string& name) const {
  auto it = variables_.find(name);
  if (it == variables_.end())
    raise("UnknownVariable", "no variable '" + name + "' in this instance");
  return it->second;
}

bool TransientStore::has(const std::string& name) const {
  return variables_.count(name) > 0;
}

void KeyStore::add(const std::string& alias, KeyPair pair) {
  std::lock_guard lock(mutex_);
  pairs_[alias] = std::move(pair);
  if (audit_) audit_("key-config", "keystore", "alias " + alias + " added");
}

KeyPair KeyStore::get_private(const std::string& alias) const {
  std::lock_guard lock(mutex_);
  auto it = pairs_.find(alias);
  if (it == pairs_.end())
    raise("UnknownAlias", "no key pair under alias '" + alias + "'");
  if (audit_) audit_("key-access", "keystore", "alias " + alias);
  return it->second;
}

bool KeyStore::has(const std::string& alias) const {
  std::lock_guard lock(mutex_);
  return pairs_.count(alias) > 0;
}

void TrustStore::add(const std::string& alias, Certificate cert) {
  std::lock_guard lock(mutex_);
  certs_[alias] = std::move(cert);
  if (audit_) audit_("key-config", "truststore", "alias " + alias + " added");
}

Certificate TrustStore::get_cert(const std::string& alias) const {
  std::lock_guard lock(mutex_);
  auto it = certs_.find(alias);
  if (it == certs_.end())
    raise("UnknownAlias", "no certificate under alias '" + alias + "'");
  if (audit_) audit_("key-access", "truststore", "alias " + alias);
  return it->second;
}

bool TrustStore::has(const std::string& alias) const {
  std::lock_guard lock(mutex_);
  return certs_.count(alias) > 0;
}

namespace {

const char* credential_kind_name(CredentialKind kind) {
  return kind == CredentialKind::userPassword ? "userPassword" : "token";
}

CredentialKind credential_kind_from(const std::string& name) {
  if (name == "userPassword") return CredentialKind::userPassword;
  if (name == "token") return CredentialKind::token;
  raise("ParseError", "unknown credential kind '" + name + "'");
}

}  // namespace

SecureStore::SecureStore(std::shared_ptr<KeyValueStore> inner, ClockPtr clock)
    : inner_(std::move(inner)), clock_(std::move(clock)) {}

void SecureStore::put(const std::string& credentialId, CredentialKind kind,
                      Bytes secret, std::optional<Tick> expiresAt) {
  nlohmann::json doc;
  doc["kind"] = credential_kind_name(kind);
  doc["secret"] = base16_encode(secret);
  if (expiresAt) doc["expiresAt"] = *expiresAt;
  inner_->put(credentialId, to_bytes(doc.dump()));
  if (audit_)
    audit_("credential-config", "securestore", "credential " + credentialId +
                                                   " stored");
}

Bytes SecureStore::get(const std::string& credentialId) const {
  Bytes raw;
  try {
    raw = inner_->get(credentialId);
  } catch (const PatternError& e) {
    if (e.kind() == "KeyNotFound")
      raise("UnknownAlias", "no credential '" + credentialId + "'");
    throw;
  }
  auto doc = nlohmann::json::parse(to_string(raw));
  if (doc.contains("expiresAt") &&
      clock_->now() > doc["expiresAt"].get<Tick>())
    raise("ExpiredCredential", "credential '" + credentialId + "' expired");
  if (audit_) audit_("credential-access", "securestore", credentialId);
  return base16_decode(doc["secret"].get<std::string>());
}

bool SecureStore::remove(const std::string& credentialId) {
  return inner_->remove(credentialId);
}

std::vector<std::pair<std::string, CredentialKind>> SecureStore::list() const {
  std::vector<std::pair<std::string, CredentialKind>> out;
  for (const auto& id : inner_->query("")) {
    auto doc = nlohmann::json::parse(to_string(inner_->get(id)));
    out.emplace_back(id, credential_kind_from(doc["kind"].get<std::string>()));
  }
  return out;
}

RedundantStore::RedundantStore(
    std::vector<std::shared_ptr<DataStore>> replicas, std::size_t writeQuorum)
    : replicas_(std::move(replicas)), writeQuorum_(writeQuorum) {
  if (replicas_.size() < 2)
    raise("ConfigError", "redundant store needs at least 2 replicas");
  if (writeQuorum_ == 0 || writeQuorum_ > replicas_.size())
    raise("ConfigError", "write quorum out of range");
}

void RedundantStore::put(const std::string& key, const Bytes& value,
                         PutOptions opts) {
  std::size_t accepted = 0;
  for (auto& replica : replicas_) {
    try {
      replica->put(key, value, opts);
      accepted++;
    } catch (const PatternError&) {
    }
  }
  if (accepted < writeQuorum_)
    raise("QuorumUnavailable",
          std::to_string(accepted) + " of required " +
              std::to_string(writeQuorum_) + " replicas accepted the write");
}

Bytes RedundantStore::get(const std::string& key,
                          const std::string& callerScope) const {
  for (const auto& replica : replicas_) {
    try {
      return replica->get(key, callerScope);
    } catch (const PatternError& e) {
      if (e.kind() == "ScopeViolation") throw;
    }
  }
  raise("KeyNotFound", "no live replica holds '" + key + "'");
}

bool RedundantStore::remove(const std::string& key) {
  bool existed = false;
  for (auto& replica : replicas_) {
    try {
      existed = replica->remove(key) || existed;
    } catch (const PatternError&) {
    }
  }
  return existed;
}

std::vector<std::string> RedundantStore::query(
    const std::string& keyPrefix) const {
  std::vector<std::string> out;
  for (const auto& replica : replicas_) {
    try {
      auto keys = replica->query(keyPrefix);
      out.insert(out.end(), keys.begin(), keys.end());
    } catch (const PatternError&) {
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StoreManager::StoreManager(std::filesystem::path dataDir, ClockPtr clock)
    : dataDir_(std::move(dataDir)), clock_(std::move(clock)) {}

std::shared_ptr<DataStore> StoreManager::open(const std::string& name,
                                              const std::string& owner) {
  std::lock_guard lock(mutex_);
  auto it = open_.find(name);
  if (it != open_.end()) return it->second;
  auto store = std::make_shared<DataStore>(name, dataDir_, clock_, owner);
  open_[name] = store;
  return store;
}

}  // namespace patternflow

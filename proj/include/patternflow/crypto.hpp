#pragma once

#include <string>

#include "patternflow/bytes.hpp"

namespace patternflow {

Bytes sha256(const Bytes& data);
std::string sha256_hex(const Bytes& data);

struct Certificate {
  std::string subject;
  Bytes secret;  // verification material; mirrors the private key in the
                 // reference scheme

  bool operator==(const Certificate&) const = default;
};

struct KeyPair {
  Bytes privateKey;
  Certificate certificate;
};

/// Symmetric-ish provider abstraction. The runtime only ever talks to this
/// interface, so the reference scheme below can be swapped for a real one
/// without touching any pattern code.
class CryptoProvider {
 public:
  virtual ~CryptoProvider() = default;

  virtual Bytes encrypt(const Bytes& key, const Bytes& plain) const = 0;
  /// Throws PatternError("DecryptFailure") on wrong key or corrupt blob.
  virtual Bytes decrypt(const Bytes& key, const Bytes& cipher) const = 0;
  virtual Bytes sign(const Bytes& privateKey, const Bytes& data) const = 0;
  virtual bool verify(const Certificate& cert, const Bytes& data,
                      const Bytes& signature) const = 0;
  virtual Bytes digest(const Bytes& data) const = 0;
};

/// Deterministic, dependency-light scheme for testing and simulation. Not
/// secure against a real adversary; it exists so every security pattern has
/// exercisable, reproducible behaviour.
///
///   encrypt: digest(key || plain)[0..8) || (plain XOR keystream(key))
///            keystream block i = digest(key || be64(i))
///   sign:    digest(privateKey || data)
///   verify:  recompute with the certificate's embedded secret
class ReferenceCryptoProvider final : public CryptoProvider {
 public:
  Bytes encrypt(const Bytes& key, const Bytes& plain) const override;
  Bytes decrypt(const Bytes& key, const Bytes& cipher) const override;
  Bytes sign(const Bytes& privateKey, const Bytes& data) const override;
  bool verify(const Certificate& cert, const Bytes& data,
              const Bytes& signature) const override;
  Bytes digest(const Bytes& data) const override;
};

/// Deterministically derives a key pair from a seed string. Used to provision
/// keystore aliases referenced by flow definitions.
KeyPair keypair_from_seed(const std::string& seed);

}  // namespace patternflow

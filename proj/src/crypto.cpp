#include "patternflow/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>

#include "patternflow/errors.hpp"

namespace patternflow {

Bytes sha256(const Bytes& data) {
  Bytes out(32);
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
             nullptr);
  out.resize(len);
  return out;
}

std::string sha256_hex(const Bytes& data) { return to_hex(sha256(data)); }

namespace {

Bytes concat(const Bytes& a, const Bytes& b) {
  Bytes out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void xor_keystream(const Bytes& key, Bytes& data) {
  for (std::size_t block = 0; block * 32 < data.size(); block++) {
    Bytes input = key;
    put_be64(input, block);
    Bytes pad = sha256(input);
    std::size_t base = block * 32;
    for (std::size_t i = 0; i < 32 && base + i < data.size(); i++)
      data[base + i] ^= pad[i];
  }
}

constexpr std::size_t kCheckLen = 8;

}  // namespace

Bytes ReferenceCryptoProvider::encrypt(const Bytes& key,
                                       const Bytes& plain) const {
  Bytes check = sha256(concat(key, plain));
  Bytes out(check.begin(), check.begin() + kCheckLen);
  Bytes payload = plain;
  xor_keystream(key, payload);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes ReferenceCryptoProvider::decrypt(const Bytes& key,
                                       const Bytes& cipher) const {
  if (cipher.size() < kCheckLen)
    raise("DecryptFailure", "ciphertext shorter than integrity prefix");
  Bytes payload(cipher.begin() + kCheckLen, cipher.end());
  xor_keystream(key, payload);
  Bytes check = sha256(concat(key, payload));
  if (!std::equal(check.begin(), check.begin() + kCheckLen, cipher.begin()))
    raise("DecryptFailure", "integrity check failed (wrong key or corrupt data)");
  return payload;
}

Bytes ReferenceCryptoProvider::sign(const Bytes& privateKey,
                                    const Bytes& data) const {
  return sha256(concat(privateKey, data));
}

bool ReferenceCryptoProvider::verify(const Certificate& cert,
                                     const Bytes& data,
                                     const Bytes& signature) const {
  return sign(cert.secret, data) == signature;
}

Bytes ReferenceCryptoProvider::digest(const Bytes& data) const {
  return sha256(data);
}

KeyPair keypair_from_seed(const std::string& seed) {
  Bytes priv = sha256(to_bytes("key:" + seed));
  return KeyPair{priv, Certificate{seed, priv}};
}

}  // namespace patternflow

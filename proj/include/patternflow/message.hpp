#pragma once

#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "patternflow/bytes.hpp"
#include "patternflow/rng.hpp"

namespace patternflow {

using HeaderMap = std::map<std::string, std::string>;
using AttachmentMap = std::map<std::string, Bytes>;

/// Immutable transport unit: opaque body, string headers, named binary
/// attachments. Builders return modified copies; the id is preserved so a
/// transformed message stays the same logical message (redelivery and
/// deduplication key on it).
class Message {
 public:
  Message() = default;

  Message(std::string id, Bytes body, HeaderMap headers = {},
          AttachmentMap attachments = {})
      : id_(std::move(id)),
        body_(std::move(body)),
        headers_(std::move(headers)),
        attachments_(std::move(attachments)) {}

  const std::string& id() const { return id_; }
  const Bytes& body() const { return body_; }
  const HeaderMap& headers() const { return headers_; }
  const AttachmentMap& attachments() const { return attachments_; }

  std::string body_text() const { return to_string(body_); }

  std::optional<std::string> header(const std::string& name) const {
    auto it = headers_.find(name);
    if (it == headers_.end()) return std::nullopt;
    return it->second;
  }

  Message with_body(Bytes body) const {
    Message m = *this;
    m.body_ = std::move(body);
    return m;
  }

  Message with_text(std::string_view text) const {
    return with_body(to_bytes(text));
  }

  Message with_header(const std::string& name, std::string value) const {
    Message m = *this;
    m.headers_[name] = std::move(value);
    return m;
  }

  Message without_header(const std::string& name) const {
    Message m = *this;
    m.headers_.erase(name);
    return m;
  }

  Message with_headers(HeaderMap headers) const {
    Message m = *this;
    m.headers_ = std::move(headers);
    return m;
  }

  Message with_attachment(const std::string& name, Bytes data) const {
    Message m = *this;
    m.attachments_[name] = std::move(data);
    return m;
  }

  Message without_attachment(const std::string& name) const {
    Message m = *this;
    m.attachments_.erase(name);
    return m;
  }

  bool operator==(const Message&) const = default;

 private:
  std::string id_;
  Bytes body_;
  HeaderMap headers_;
  AttachmentMap attachments_;
};

/// Mints ids of the form "<counter>-<16 hex digits>". Counter is monotonic
/// per generator; the hex half comes from the seeded generator so a runtime
/// with a fixed seed mints a reproducible id sequence.
class IdGenerator {
 public:
  explicit IdGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    std::lock_guard lock(mutex_);
    std::uint64_t n = ++counter_;
    std::uint64_t r = rng_.next_u64();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(r));
    return std::to_string(n) + "-" + buf;
  }

 private:
  std::mutex mutex_;
  std::uint64_t counter_ = 0;
  DeterministicRng rng_;
};

}  // namespace patternflow

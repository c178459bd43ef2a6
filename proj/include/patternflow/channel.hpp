#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "patternflow/errors.hpp"
#include "patternflow/message.hpp"

namespace patternflow {

enum class ChannelMode { direct, queue };

using Consumer = std::function<void(const Message&)>;
using ChannelListener = std::function<void(const Message&)>;

/// Point-to-point message conduit. In direct mode send() hands the message to
/// the registered consumer synchronously; in queue mode messages buffer up to
/// capacity and are pulled with receive().
class Channel {
 public:
  Channel(std::string name, std::size_t capacity, ChannelMode mode,
          std::string formatTag = "")
      : name_(std::move(name)),
        capacity_(capacity),
        mode_(mode),
        formatTag_(std::move(formatTag)) {}

  const std::string& name() const { return name_; }
  ChannelMode mode() const { return mode_; }
  const std::string& format_tag() const { return formatTag_; }
  std::size_t capacity() const { return capacity_; }

  void set_consumer(Consumer c) {
    std::lock_guard lock(mutex_);
    consumer_ = std::move(c);
  }

  void add_listener(ChannelListener l) {
    std::lock_guard lock(mutex_);
    listeners_.push_back(std::move(l));
  }

  /// Runs after a message is enqueued (queue mode), outside the channel lock.
  /// Used for pump-style wiring such as the join router.
  void add_enqueue_hook(std::function<void()> hook) {
    std::lock_guard lock(mutex_);
    enqueueHooks_.push_back(std::move(hook));
  }

  void send(const Message& m) {
    std::vector<ChannelListener> observers;
    {
      std::lock_guard lock(mutex_);
      observers = listeners_;
    }
    // Observers run outside the lock; wrappers installed by the runtime
    // swallow their exceptions.
    for (auto& l : observers) l(m);

    Consumer target;
    {
      std::lock_guard lock(mutex_);
      if (mode_ == ChannelMode::queue) {
        if (queue_.size() >= capacity_)
          raise("ChannelFull", "channel '" + name_ + "' is at capacity " +
                                   std::to_string(capacity_));
        queue_.push_back(m);
        sentTotal_++;
      } else {
        if (!consumer_)
          raise("NoConsumer", "direct channel '" + name_ + "' has no consumer");
        target = consumer_;
        sentTotal_++;
      }
    }
    if (target) {
      target(m);
      std::lock_guard lock(mutex_);
      deliveredTotal_++;
      return;
    }
    std::vector<std::function<void()>> hooks;
    {
      std::lock_guard lock(mutex_);
      hooks = enqueueHooks_;
    }
    for (auto& h : hooks) h();
  }

  std::optional<Message> receive() {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    Message m = std::move(queue_.front());
    queue_.pop_front();
    deliveredTotal_++;
    return m;
  }

  std::size_t pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

  std::uint64_t sent_total() const {
    std::lock_guard lock(mutex_);
    return sentTotal_;
  }

  std::uint64_t delivered_total() const {
    std::lock_guard lock(mutex_);
    return deliveredTotal_;
  }

  /// Test hook for in-queue corruption scenarios: mutate the nth queued
  /// message in place.
  void mutate_queued(std::size_t index, const std::function<void(Message&)>& f) {
    std::lock_guard lock(mutex_);
    if (index >= queue_.size())
      raise("KeyNotFound", "no queued message at index " + std::to_string(index));
    f(queue_[index]);
  }

 private:
  std::string name_;
  std::size_t capacity_;
  ChannelMode mode_;
  std::string formatTag_;

  mutable std::mutex mutex_;
  std::deque<Message> queue_;
  Consumer consumer_;
  std::vector<ChannelListener> listeners_;
  std::vector<std::function<void()>> enqueueHooks_;
  std::uint64_t sentTotal_ = 0;
  std::uint64_t deliveredTotal_ = 0;
};

}  // namespace patternflow

#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>

namespace idt {

/// Single-producer single-consumer queue with credit-based backpressure.
///
/// The producer takes a credit before producing an item; the consumer hands
/// the credit back only once it has finished with the item. At most
/// `capacity` items are therefore produced-but-unfinished at any moment.
template <typename T>
class BoundedQueue {
public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  /// Blocks until a credit is free. Returns false once the queue is closed.
  bool acquire() {
    std::unique_lock lock(mutex_);
    can_produce_.wait(lock, [&] { return closed_ || in_flight_ < capacity_; });
    if (closed_) {
      return false;
    }
    ++in_flight_;
    return true;
  }

  /// Enqueues an item; call after a successful acquire().
  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(item));
    }
    can_consume_.notify_one();
  }

  /// Next item, or nullopt when the queue is closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    can_consume_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) {
      return std::nullopt;
    }
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  /// Returns the credit taken for a popped item.
  void release() {
    {
      std::lock_guard lock(mutex_);
      if (in_flight_ > 0) {
        --in_flight_;
      }
    }
    can_produce_.notify_one();
  }

  /// Wakes both sides. Items already queued can still be popped.
  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    can_produce_.notify_all();
    can_consume_.notify_all();
  }

  std::size_t capacity() const { return capacity_; }

private:
  std::mutex mutex_;
  std::condition_variable can_produce_;
  std::condition_variable can_consume_;
  std::deque<T> items_;
  std::size_t capacity_;
  std::size_t in_flight_ = 0;
  bool closed_ = false;
};

}  // namespace idt

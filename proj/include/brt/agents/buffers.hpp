#pragma once

#include <cstddef>
#include <vector>

#include "brt/errors.hpp"
#include "brt/rng.hpp"

namespace brt::agents {

// Fixed-capacity FIFO ring. Index 0 is the oldest retained item.
template <typename T>
class CircularBuffer {
public:
    explicit CircularBuffer(size_t capacity) : cap_(capacity), slots_(capacity) {
        if (capacity == 0) throw ConfigError("buffer capacity must be positive");
    }

    void push(T item) {
        if (count_ == cap_) {
            slots_[head_] = std::move(item);
            head_ = (head_ + 1) % cap_;
        } else {
            slots_[(head_ + count_) % cap_] = std::move(item);
            ++count_;
        }
    }

    size_t size() const { return count_; }
    size_t capacity() const { return cap_; }
    bool empty() const { return count_ == 0; }

    const T& operator[](size_t i) const { return slots_[(head_ + i) % cap_]; }

    // Uniform sample with replacement.
    std::vector<const T*> sample(size_t n, RngStream& rng) const {
        if (count_ == 0) throw DegenerateBatchError("cannot sample from an empty buffer");
        std::vector<const T*> out;
        out.reserve(n);
        for (size_t k = 0; k < n; ++k)
            out.push_back(&(*this)[static_cast<size_t>(rng.uniform_int(count_))]);
        return out;
    }

private:
    size_t cap_;
    std::vector<T> slots_;
    size_t head_ = 0;
    size_t count_ = 0;
};

// Standard reservoir sampling: after n insertions every item seen so far is
// retained with probability capacity/n.
template <typename T>
class ReservoirBuffer {
public:
    explicit ReservoirBuffer(size_t capacity) : cap_(capacity) {
        if (capacity == 0) throw ConfigError("buffer capacity must be positive");
    }

    void insert(T item, RngStream& rng) {
        ++seen_;
        if (items_.size() < cap_) {
            items_.push_back(std::move(item));
            return;
        }
        const uint64_t j = rng.uniform_int(seen_);
        if (j < cap_) items_[static_cast<size_t>(j)] = std::move(item);
    }

    size_t size() const { return items_.size(); }
    size_t capacity() const { return cap_; }
    uint64_t items_seen() const { return seen_; }
    bool empty() const { return items_.empty(); }

    const T& operator[](size_t i) const { return items_[i]; }

    std::vector<const T*> sample(size_t n, RngStream& rng) const {
        if (items_.empty()) throw DegenerateBatchError("cannot sample from an empty buffer");
        std::vector<const T*> out;
        out.reserve(n);
        for (size_t k = 0; k < n; ++k)
            out.push_back(&items_[static_cast<size_t>(rng.uniform_int(items_.size()))]);
        return out;
    }

private:
    size_t cap_;
    std::vector<T> items_;
    uint64_t seen_ = 0;
};

} // namespace brt::agents

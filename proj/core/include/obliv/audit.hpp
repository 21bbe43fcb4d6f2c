#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace obliv {

struct VectorAuditStats {
  std::size_t live = 0;
  std::size_t peak = 0;
};

/// Process-wide count of live work buffers. Solver and operator internals
/// allocate their length-n temporaries through WorkBuffer so tests can bound
/// the peak number alive at once.
class VectorAudit {
 public:
  static void reset();
  static VectorAuditStats stats();
  static void acquire();
  static void release();
};

template <class T>
class WorkBuffer {
 public:
  explicit WorkBuffer(std::size_t n, T fill = T{}) : data_(n, fill) { VectorAudit::acquire(); }
  WorkBuffer(const WorkBuffer&) = delete;
  WorkBuffer& operator=(const WorkBuffer&) = delete;
  ~WorkBuffer() { VectorAudit::release(); }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  operator std::span<T>() { return data_; }
  operator std::span<const T>() const { return data_; }
  std::vector<T> release_vector() { return std::move(data_); }

 private:
  std::vector<T> data_;
};

using WorkVector = WorkBuffer<double>;

}  // namespace obliv

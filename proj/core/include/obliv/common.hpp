#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace obliv {

using Vector = std::vector<double>;

/// Raised when a request exceeds a configured capability, such as the
/// dimension cap of the dense oracle.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

inline std::size_t ceil_log2(std::uint64_t v) {
  std::size_t r = 0;
  while ((std::uint64_t{1} << r) < v && r < 64) ++r;
  return r;
}

}  // namespace obliv

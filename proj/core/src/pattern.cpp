#include "obliv/pattern.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "obliv/audit.hpp"
#include "obliv/spectra.hpp"

namespace obliv {

namespace {

constexpr unsigned kRowFamilyK = 4;

std::uint64_t horner(const GFContext& ctx, std::span<const std::uint64_t> c, std::uint64_t x) {
  std::uint64_t acc = 0;
  for (std::size_t t = c.size(); t-- > 0;) acc = ctx.mul(acc, x) ^ c[t];
  return acc;
}

inline std::uint64_t flip_sign(double v, std::uint64_t bit) {
  return std::bit_cast<std::uint64_t>(v) ^ (bit << 63);
}

inline std::uint64_t parity_word(std::uint64_t x) {
  x ^= x >> 32;
  x ^= x >> 16;
  x ^= x >> 8;
  x ^= x >> 4;
  x ^= x >> 2;
  x ^= x >> 1;
  return x & 1U;
}

void check_signs(std::span<const std::int8_t> s, std::size_t n, const char* what) {
  if (!s.empty() && s.size() != n)
    throw std::invalid_argument(std::string("pattern kernel: ") + what + " has the wrong length");
}

}  // namespace

PatternMatrix PatternMatrix::build(std::size_t n, BitSource& src) {
  if (n < 2) throw std::invalid_argument("build_pattern: n must be at least 2");
  PatternMatrix v;
  v.n_ = n;
  v.shift_ = static_cast<unsigned>(ceil_log2(n));
  v.m1_ = std::max(3U, 2 * v.shift_);
  v.m2_ = std::max(3U, v.shift_);
  const unsigned k1 = 2 * v.shift_;

  const std::uint64_t b0 = src.bits_consumed();
  v.fam1_.resize(k1);
  for (auto& c : v.fam1_) c = src.next_bits(v.m1_);
  const std::uint64_t b1 = src.bits_consumed();
  v.fam2_.resize(kRowFamilyK * n);
  for (auto& c : v.fam2_) c = src.next_bits(v.m2_);
  const std::uint64_t b2 = src.bits_consumed();
  v.fam3_.resize(kRowFamilyK * n);
  for (auto& c : v.fam3_) c = src.next_bits(v.m2_);
  const std::uint64_t b3 = src.bits_consumed();
  v.bits_ = {b1 - b0, b2 - b1, b3 - b2};
  v.finish_setup();
  return v;
}

PatternMatrix PatternMatrix::from_coefficients(std::size_t n, std::vector<std::uint64_t> fam1,
                                               std::vector<std::uint64_t> fam2,
                                               std::vector<std::uint64_t> fam3) {
  if (n < 2) throw std::invalid_argument("PatternMatrix: n must be at least 2");
  PatternMatrix v;
  v.n_ = n;
  v.shift_ = static_cast<unsigned>(ceil_log2(n));
  v.m1_ = std::max(3U, 2 * v.shift_);
  v.m2_ = std::max(3U, v.shift_);
  if (fam1.size() != 2 * v.shift_ || fam2.size() != kRowFamilyK * n || fam3.size() != kRowFamilyK * n)
    throw std::invalid_argument("PatternMatrix: coefficient counts do not match n");
  const std::uint64_t m1mask = gf_context(v.m1_).element_mask();
  const std::uint64_t m2mask = gf_context(v.m2_).element_mask();
  for (auto c : fam1)
    if (c & ~m1mask) throw std::invalid_argument("PatternMatrix: coefficient outside GF(2^m1)");
  for (const auto* fam : {&fam2, &fam3})
    for (auto c : *fam)
      if (c & ~m2mask) throw std::invalid_argument("PatternMatrix: coefficient outside GF(2^m2)");
  v.fam1_ = std::move(fam1);
  v.fam2_ = std::move(fam2);
  v.fam3_ = std::move(fam3);
  v.bits_ = {v.fam1_.size() * v.m1_, v.fam2_.size() * v.m2_, v.fam3_.size() * v.m2_};
  v.finish_setup();
  return v;
}

void PatternMatrix::finish_setup() {
  const GFContext& ctx2 = gf_context(m2_);
  mask2_.resize(fam2_.size());
  mask3_.resize(fam3_.size());
  for (std::size_t t = 0; t < fam2_.size(); ++t) mask2_[t] = ctx2.bit0_mask(fam2_[t]);
  for (std::size_t t = 0; t < fam3_.size(); ++t) mask3_[t] = ctx2.bit0_mask(fam3_[t]);
}

int PatternMatrix::entry(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::out_of_range("PatternMatrix::entry: index out of range");
  const GFContext& ctx1 = gf_context(m1_);
  const GFContext& ctx2 = gf_context(m2_);
  const std::uint64_t x = (static_cast<std::uint64_t>(i) << shift_) | j;
  const std::uint64_t b1 = horner(ctx1, fam1_, x) & 1U;
  const std::uint64_t b2 = horner(ctx2, std::span(fam2_).subspan(kRowFamilyK * i, kRowFamilyK), j) & 1U;
  const std::uint64_t b3 = horner(ctx2, std::span(fam3_).subspan(kRowFamilyK * j, kRowFamilyK), i) & 1U;
  return (b1 ^ b2 ^ b3) ? -1 : 1;
}

namespace {

// Row-blocked evaluation of the sign bits.
//
// With x = (i << s) ^ j, sign1 at (i, j) is bit0(q_i(j)) where q_i is fam1's
// polynomial Taylor-shifted by a = i << s. bit0(c * y) = parity(mask(c) & y),
// so each entry's sign bit is the parity of an XOR of (mask & power) words.
// Masks of the shifted polynomial depend on the row only and are built once
// per block; powers of j are rebuilt for every block.
class Kernel {
 public:
  explicit Kernel(const PatternMatrix& v, std::span<const std::uint64_t> fam1,
                  std::span<const std::uint64_t> mask2, std::span<const std::uint64_t> mask3)
      : v_(v),
        fam1_(fam1),
        mask2_(mask2),
        mask3_(mask3),
        ctx1_(gf_context(v.fam1_degree())),
        ctx2_(gf_context(v.fam23_degree())),
        n_(v.n()),
        k1_(static_cast<unsigned>(fam1.size())) {
    const std::size_t per_row = k1_ + kRowFamilyK + 1;
    block_ = std::max<std::size_t>(1, n_ / per_row);
    block_ = std::min(block_, n_);
  }

  // visit(r0, rows, acc): acc[ii] holds the sign bit (0/1) of entry (r0 + ii, j).
  template <class Visit>
  void run(Visit&& visit) const {
    const std::size_t B = block_;
    WorkBuffer<std::uint64_t> buf((k1_ + kRowFamilyK + 1) * B);
    std::uint64_t* w1 = buf.data();                 // k1 x B masks of shifted fam1
    std::uint64_t* pi = w1 + k1_ * B;               // 4 x B powers of i in GF(2^m2)
    std::uint64_t* acc = pi + kRowFamilyK * B;      // B accumulators
    std::vector<std::uint64_t> q(k1_);
    std::vector<std::uint64_t> pj1(k1_);
    std::uint64_t pj2[kRowFamilyK];
    const unsigned s = v_.index_shift();

    for (std::size_t r0 = 0; r0 < n_; r0 += B) {
      const std::size_t rows = std::min(B, n_ - r0);
      for (std::size_t ii = 0; ii < rows; ++ii) {
        const std::uint64_t i = r0 + ii;
        const std::uint64_t a = i << s;
        std::copy(fam1_.begin(), fam1_.end(), q.begin());
        for (unsigned t = 0; t + 1 < k1_; ++t)
          for (unsigned u = k1_ - 1; u-- > t;) q[u] ^= ctx1_.mul(a, q[u + 1]);
        for (unsigned u = 0; u < k1_; ++u) w1[u * B + ii] = ctx1_.bit0_mask(q[u]);
        std::uint64_t p = 1;
        for (unsigned u = 0; u < kRowFamilyK; ++u) {
          pi[u * B + ii] = p;
          p = ctx2_.mul(p, i);
        }
      }
      for (std::size_t j = 0; j < n_; ++j) {
        std::uint64_t p = 1;
        for (unsigned u = 0; u < k1_; ++u) {
          pj1[u] = p;
          p = ctx1_.mul(p, j);
        }
        p = 1;
        for (unsigned u = 0; u < kRowFamilyK; ++u) {
          pj2[u] = p;
          p = ctx2_.mul(p, j);
        }
        const std::uint64_t* m3 = mask3_.data() + kRowFamilyK * j;
        const std::uint64_t* m2 = mask2_.data() + kRowFamilyK * r0;
        for (std::size_t ii = 0; ii < rows; ++ii) {
          acc[ii] = (m2[kRowFamilyK * ii] & pj2[0]) ^ (m2[kRowFamilyK * ii + 1] & pj2[1]) ^
                    (m2[kRowFamilyK * ii + 2] & pj2[2]) ^ (m2[kRowFamilyK * ii + 3] & pj2[3]);
        }
        for (unsigned u = 0; u < kRowFamilyK; ++u) {
          const std::uint64_t mu = m3[u];
          const std::uint64_t* row = pi + u * B;
          for (std::size_t ii = 0; ii < rows; ++ii) acc[ii] ^= mu & row[ii];
        }
        for (unsigned u = 0; u < k1_; ++u) {
          const std::uint64_t pu = pj1[u];
          const std::uint64_t* row = w1 + u * B;
          for (std::size_t ii = 0; ii < rows; ++ii) acc[ii] ^= row[ii] & pu;
        }
        for (std::size_t ii = 0; ii < rows; ++ii) acc[ii] = parity_word(acc[ii]);
        visit(r0, rows, j, acc);
      }
    }
  }

  std::size_t block() const { return block_; }

 private:
  const PatternMatrix& v_;
  std::span<const std::uint64_t> fam1_;
  std::span<const std::uint64_t> mask2_;
  std::span<const std::uint64_t> mask3_;
  const GFContext& ctx1_;
  const GFContext& ctx2_;
  std::size_t n_;
  unsigned k1_;
  std::size_t block_ = 1;
};

}  // namespace

void PatternMatrix::apply_scaled(std::span<const double> x, std::span<double> y, double scale,
                                 std::span<const std::int8_t> left, std::span<const std::int8_t> right,
                                 bool transpose, bool accumulate) const {
  if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("PatternMatrix::apply: dimension mismatch");
  check_signs(left, n_, "left signs");
  check_signs(right, n_, "right signs");
  Kernel kernel(*this, fam1_, mask2_, mask3_);
  auto lsign = [&](std::size_t i) { return left.empty() ? 1.0 : static_cast<double>(left[i]); };
  auto rsign = [&](std::size_t j) { return right.empty() ? 1.0 : static_cast<double>(right[j]); };

  if (!transpose) {
    std::vector<double> t(kernel.block());
    kernel.run([&](std::size_t r0, std::size_t rows, std::size_t j, const std::uint64_t* bits) {
      if (j == 0) std::fill(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(rows), 0.0);
      const double xj = x[j] * rsign(j);
      for (std::size_t ii = 0; ii < rows; ++ii) t[ii] += std::bit_cast<double>(flip_sign(xj, bits[ii]));
      if (j + 1 == n_) {
        for (std::size_t ii = 0; ii < rows; ++ii) {
          const double v = scale * lsign(r0 + ii) * t[ii];
          y[r0 + ii] = accumulate ? y[r0 + ii] + v : v;
        }
      }
    });
    return;
  }

  if (!accumulate) std::fill(y.begin(), y.end(), 0.0);
  // Signed inputs for this block are formed on the fly from x and left.
  kernel.run([&](std::size_t r0, std::size_t rows, std::size_t j, const std::uint64_t* bits) {
    double t = 0.0;
    if (left.empty()) {
      for (std::size_t ii = 0; ii < rows; ++ii) t += std::bit_cast<double>(flip_sign(x[r0 + ii], bits[ii]));
    } else {
      for (std::size_t ii = 0; ii < rows; ++ii)
        t += std::bit_cast<double>(flip_sign(x[r0 + ii] * left[r0 + ii], bits[ii]));
    }
    y[j] += scale * rsign(j) * t;
  });
}

void PatternMatrix::apply(std::span<const double> x, std::span<double> y) const {
  apply_scaled(x, y, 1.0, {}, {}, false, false);
}

void PatternMatrix::apply_transpose(std::span<const double> x, std::span<double> y) const {
  apply_scaled(x, y, 1.0, {}, {}, true, false);
}

Vector PatternMatrix::apply(std::span<const double> x) const {
  Vector y(n_);
  apply(x, y);
  return y;
}

Vector PatternMatrix::apply_transpose(std::span<const double> x) const {
  Vector y(n_);
  apply_transpose(x, y);
  return y;
}

DenseMatrix PatternMatrix::to_dense_scaled(double scale, std::span<const std::int8_t> left,
                                           std::span<const std::int8_t> right) const {
  check_signs(left, n_, "left signs");
  check_signs(right, n_, "right signs");
  DenseMatrix m(n_, n_);
  Kernel kernel(*this, fam1_, mask2_, mask3_);
  kernel.run([&](std::size_t r0, std::size_t rows, std::size_t j, const std::uint64_t* bits) {
    const double cj = scale * (right.empty() ? 1.0 : right[j]);
    auto col = m.col(j);
    for (std::size_t ii = 0; ii < rows; ++ii) {
      const double v = left.empty() ? cj : cj * left[r0 + ii];
      col[r0 + ii] = std::bit_cast<double>(flip_sign(v, bits[ii]));
    }
  });
  return m;
}

DenseMatrix PatternMatrix::to_dense() const { return to_dense_scaled(1.0, {}, {}); }

DenseMatrix PatternMatrix::to_dense_reference() const {
  DenseMatrix m(n_, n_);
  for (std::size_t j = 0; j < n_; ++j)
    for (std::size_t i = 0; i < n_; ++i) m(i, j) = entry(i, j);
  return m;
}

Vector PatternMatrix::line(std::size_t j, bool row) const {
  Vector out(n_);
  for (std::size_t t = 0; t < n_; ++t) out[t] = row ? entry(j, t) : entry(t, j);
  return out;
}

std::size_t large_coordinate_count(const PatternMatrix& v, std::span<const std::int8_t> eta,
                                   std::span<const double> x, double beta, bool transposed) {
  const std::size_t n = v.n();
  if (eta.size() != n || x.size() != n) throw std::invalid_argument("large_coordinate_count: dimension mismatch");
  for (auto e : eta)
    if (e != 1 && e != -1) throw std::invalid_argument("large_coordinate_count: eta must be a sign vector");
  if (std::abs(norm2(x) - 1.0) > 1e-9) throw std::invalid_argument("large_coordinate_count: x must be a unit vector");

  std::size_t nnz = 0;
  for (double xi : x) nnz += xi != 0.0;
  WorkVector y(n);
  if (nnz * 8 <= n) {
    // Few nonzeros: sum the touched columns (rows for the transpose) directly.
    for (std::size_t s = 0; s < n; ++s) {
      if (x[s] == 0.0) continue;
      const Vector line = v.line(s, transposed);
      axpy(eta[s] * x[s], line, y.span());
    }
  } else {
    if (transposed) {
      v.apply_scaled(x, y.span(), 1.0, eta, {}, true, false);
    } else {
      v.apply_scaled(x, y.span(), 1.0, {}, eta, false, false);
    }
  }
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) count += (y[j] != 0.0 && std::abs(y[j]) >= beta);
  return count;
}

PatternCalibration calibrate(const PatternMatrix& v, std::size_t trials, double alpha, BitSource& src,
                             std::size_t oracle_cap, bool require_rho, double gamma_floor) {
  if (trials < 1) throw std::invalid_argument("calibrate: trials must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("calibrate: alpha must lie in (0, 1)");
  const std::size_t n = v.n();
  PatternCalibration out;
  out.trials = trials;
  out.alpha = alpha;
  if (n <= oracle_cap) {
    out.rho_hat = spectral_norm(v.to_dense()) / std::sqrt(static_cast<double>(n));
    out.rho_available = true;
  } else if (require_rho) {
    throw CapabilityError("calibrate: n=" + std::to_string(n) + " exceeds the dense oracle cap " +
                          std::to_string(oracle_cap));
  }

  constexpr std::size_t kGrid = 300;
  constexpr double kStep = 0.01;
  const auto support = static_cast<std::uint32_t>(
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)))));
  std::vector<double> fractions(trials * kGrid);
  std::vector<std::int8_t> eta(n);
  Vector x(n);
  Vector mags(n);
  for (std::size_t t = 0; t < trials; ++t) {
    std::fill(x.begin(), x.end(), 0.0);
    const auto idx = src.sample_k_subset(static_cast<std::uint32_t>(n), support);
    for (auto i : idx) x[i - 1] = src.next_gaussian();
    const double nx = norm2(x);
    if (nx == 0.0) {
      x[idx[0] - 1] = 1.0;
    } else {
      for (double& xi : x) xi /= nx;
    }
    for (auto& e : eta) e = static_cast<std::int8_t>(src.next_sign());
    for (std::size_t g = 0; g < kGrid; ++g) fractions[t * kGrid + g] = 1.0;
    for (bool transposed : {false, true}) {
      std::fill(mags.begin(), mags.end(), 0.0);
      for (auto i : idx) axpy(eta[i - 1] * x[i - 1], v.line(i - 1, transposed), mags);
      for (double& m : mags) m = std::abs(m);
      std::sort(mags.begin(), mags.end());
      for (std::size_t g = 0; g < kGrid; ++g) {
        const double beta = kStep * static_cast<double>(g + 1);
        const auto first = std::lower_bound(mags.begin(), mags.end(), beta);
        const double frac = static_cast<double>(mags.end() - first) / static_cast<double>(n);
        fractions[t * kGrid + g] = std::min(fractions[t * kGrid + g], frac);
      }
    }
  }
  std::vector<double> column(trials);
  const std::size_t rank = static_cast<std::size_t>(std::floor(0.01 * static_cast<double>(trials - 1)));
  for (std::size_t g = 0; g < kGrid; ++g) {
    for (std::size_t t = 0; t < trials; ++t) column[t] = fractions[t * kGrid + g];
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(rank), column.end());
    const double p1 = column[rank];
    if (p1 >= gamma_floor) {
      out.beta_hat = kStep * static_cast<double>(g + 1);
      out.gamma_hat = p1;
    }
  }
  return out;
}

void walsh_hadamard(std::span<double> v) {
  const std::size_t n = v.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("walsh_hadamard: length must be a power of two");
  for (std::size_t h = 1; h < n; h <<= 1)
    for (std::size_t i = 0; i < n; i += 2 * h)
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
}

HadamardWitness hadamard_sparse_witness(unsigned k, std::size_t cap) {
  if (k < 1 || 2 * k >= 63) throw std::invalid_argument("hadamard_sparse_witness: k out of range");
  const std::size_t n = std::size_t{1} << (2 * k);
  if (n > cap) throw CapabilityError("hadamard_sparse_witness: n exceeds the oracle cap");
  HadamardWitness w;
  w.n = n;
  w.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if ((j >> k) == 0) w.x[j] = 1.0;
  Vector hx = w.x;
  walsh_hadamard(hx);
  for (std::size_t j = 0; j < n; ++j) {
    if (w.x[j] != 0.0) w.support_x.push_back(j);
    if (hx[j] != 0.0) w.support_hx.push_back(j);
  }
  return w;
}

}  // namespace obliv

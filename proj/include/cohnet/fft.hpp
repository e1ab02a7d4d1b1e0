#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "cohnet/error.hpp"

namespace cohnet {

// Mixed-radix decimation-in-time FFT for arbitrary lengths. Factors are
// handled smallest-first with a generic radix-p butterfly, so lengths with
// large prime factors degrade towards O(n*p) but stay exact in form.
class FftPlan {
 public:
  using cplx = std::complex<double>;

  explicit FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw ConfigError("FFT length must be positive");
    std::size_t rest = n;
    for (std::size_t p = 2; p * p <= rest; ++p) {
      while (rest % p == 0) {
        factors_.push_back(p);
        rest /= p;
      }
    }
    if (rest > 1) factors_.push_back(rest);
    twiddles_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      twiddles_[j] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
    }
  }

  std::size_t size() const { return n_; }

  // out[k] = sum_j in[j] exp(-2 pi i j k / n)
  void forward(std::span<const cplx> in, std::span<cplx> out) const {
    if (in.size() != n_ || out.size() != n_) throw ConfigError("FFT buffer length mismatch");
    std::vector<cplx> scratch;
    recurse(in.data(), 1, out.data(), n_, 1, 0, scratch);
  }

  std::vector<cplx> forward(std::span<const cplx> in) const {
    std::vector<cplx> out(n_);
    forward(in, out);
    return out;
  }

 private:
  void recurse(const cplx* in, std::size_t stride, cplx* out, std::size_t n, std::size_t tw_stride,
               std::size_t level, std::vector<cplx>& scratch) const {
    if (n == 1) {
      out[0] = in[0];
      return;
    }
    const std::size_t p = factors_[level];
    const std::size_t m = n / p;
    for (std::size_t r = 0; r < p; ++r) {
      recurse(in + r * stride, stride * p, out + r * m, m, tw_stride * p, level + 1, scratch);
    }
    if (scratch.size() < p) scratch.resize(p);
    const std::size_t root = n_ / p;  // index step of the p-th roots of unity
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t r = 0; r < p; ++r) {
        scratch[r] = out[r * m + k] * twiddles_[r * k * tw_stride];
      }
      for (std::size_t q = 0; q < p; ++q) {
        cplx acc = scratch[0];
        for (std::size_t r = 1; r < p; ++r) acc += scratch[r] * twiddles_[((r * q) % p) * root];
        out[q * m + k] = acc;
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<cplx> twiddles_;
};

}  // namespace cohnet

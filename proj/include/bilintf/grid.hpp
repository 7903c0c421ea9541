#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "bilintf/errors.hpp"

namespace bilintf {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// Uniform periodic grid: N samples over one period of length L.
//
// Frequencies are xi_k = 2*pi*k/L for integer k in [-N/2, N/2).  The forward
// transform discretizes f^(xi) = \int f(x) e^{-i x xi} dx over one period, so
// a sampled function is reconstructed as f(x_j) = (1/L) sum_k c_k e^{i xi_k x_j}.
class GridSpec {
 public:
  GridSpec(double period_length, std::size_t sample_count);

  double period() const { return period_; }
  std::size_t samples() const { return n_; }
  double spatial_step() const { return period_ / static_cast<double>(n_); }
  double frequency_step() const { return kTwoPi / period_; }
  // Half-width of the representable band [-nyquist, nyquist).
  double nyquist() const { return kPi * static_cast<double>(n_) / period_; }

  int k_min() const { return -static_cast<int>(n_) / 2; }
  int k_max() const { return static_cast<int>(n_) / 2 - 1; }

  double x(std::size_t j) const { return spatial_step() * static_cast<double>(j); }
  double xi(int k) const { return frequency_step() * static_cast<double>(k); }

  bool operator==(const GridSpec& o) const { return period_ == o.period_ && n_ == o.n_; }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }

 private:
  double period_;
  std::size_t n_;
};

// Complex samples of a periodic function, immutable after construction.
// The frequency coefficients are cached idempotently on first request
// (compute-then-publish, safe to share across readers).
class SampledFunction {
 public:
  SampledFunction(GridSpec grid, std::vector<cplx> samples);

  const GridSpec& grid() const { return grid_; }
  const std::vector<cplx>& samples() const { return *samples_; }
  std::size_t size() const { return samples_->size(); }

  // Coefficients c_k stored ascending in k = k_min .. k_max.
  const std::vector<cplx>& spectrum() const;
  bool spectrum_cached() const;

  cplx coeff(int k) const { return spectrum()[static_cast<std::size_t>(k - grid_.k_min())]; }

 private:
  GridSpec grid_;
  std::shared_ptr<const std::vector<cplx>> samples_;
  mutable std::shared_ptr<const std::vector<cplx>> spectrum_;
};

// Forward transform; returns the coefficient array and caches it in f.
const std::vector<cplx>& forward_transform(const SampledFunction& f);

// Builds the function whose spectrum is the given coefficient array
// (ascending k).  Inverse of forward_transform.
SampledFunction function_from_spectrum(const GridSpec& grid, std::vector<cplx> coeffs);

// Riemann-sum L^p norm on the grid; p = infinity gives the max norm.
double lp_norm(const SampledFunction& f, double p);

// Grid quadrature of the L^2 inner product (L/N) sum f conj(g).
cplx inner_product(const SampledFunction& f, const SampledFunction& g);

// Pointwise arithmetic helpers; grid-error on grid mismatch.
SampledFunction operator+(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator-(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator*(const SampledFunction& a, const SampledFunction& b);
SampledFunction operator*(cplx scale, const SampledFunction& a);
// Modulation by a grid frequency: (M_k f)(x) = e^{i xi_k x} f(x).
SampledFunction modulate(const SampledFunction& f, int k);

// Exponent triple with the Hoelder relation 1/r = 1/p + 1/q.
// p, q may be infinity; r is finite positive.
struct ExponentTriple {
  double p;
  double q;
  double r;

  ExponentTriple(double p_, double q_, double r_);
  static ExponentTriple from_pq(double p_, double q_);

  // True on the local-L^2 range: p, q >= 2 and 1 <= r <= 2 (i.e. r' >= 2).
  bool local_l2() const;
};

enum class TestFamily { gaussian_packet, random_bandlimited, indicator_signed };

struct GaussianPacketParams {
  double center = 0.0;      // a
  double width = 1.0;       // sigma > 0
  double modulation = 0.0;  // b (frequency of e^{i b x})
};
struct BandParams {
  double lo;
  double hi;
};
struct IndicatorParams {
  std::vector<std::uint8_t> mask;  // one flag per grid sample
};
using TestFunctionParams = std::variant<GaussianPacketParams, BandParams, IndicatorParams>;

// Seed-deterministic test families:
//   gaussian_packet    periodization of e^{-(x-a)^2/(2 sigma^2)} e^{i b x}
//   random_bandlimited i.i.d. standard complex Gaussian coefficients on a band
//   indicator_signed   random unimodular signs on a grid set, 0 elsewhere
SampledFunction synthesize_test_function(const GridSpec& grid, TestFamily family,
                                         const TestFunctionParams& params, std::uint64_t rng_seed);

// CSV serialization (columns: x, Re f, Im f).
void save_csv(const SampledFunction& f, const std::string& path);

}  // namespace bilintf

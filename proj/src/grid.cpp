#include "bilintf/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "bilintf/rng.hpp"

namespace bilintf {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle table e^{-2 pi i j / n}, j = 0..n/2-1, cached per size.
const std::vector<cplx>& twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::vector<cplx>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> w(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    const double a = -kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    w[j] = {std::cos(a), std::sin(a)};
  }
  return cache.emplace(n, std::move(w)).first->second;
}

// In-place iterative radix-2 transform.  forward: A_k = sum_j a_j e^{-2pi i jk/n};
// inverse applies the conjugate kernel and the 1/n factor.
void fft_radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n < 2) return;
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& w = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < len / 2; ++j) {
        cplx tw = w[j * stride];
        if (inverse) tw = std::conj(tw);
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * tw;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& z : a) z *= scale;
  }
}

}  // namespace

GridSpec::GridSpec(double period_length, std::size_t sample_count)
    : period_(period_length), n_(sample_count) {
  if (!(period_length > 0.0)) fail("parameter-error", "period length must be positive");
  if (!is_power_of_two(sample_count) || sample_count < 64)
    fail("parameter-error", "sample count must be a power of two >= 64");
}

SampledFunction::SampledFunction(GridSpec grid, std::vector<cplx> samples)
    : grid_(grid), samples_(std::make_shared<const std::vector<cplx>>(std::move(samples))) {
  if (samples_->size() != grid_.samples())
    fail("parameter-error", "sample array does not match grid size");
}

const std::vector<cplx>& SampledFunction::spectrum() const {
  auto cached = std::atomic_load_explicit(&spectrum_, std::memory_order_acquire);
  if (cached) return *cached;
  const std::size_t n = grid_.samples();
  std::vector<cplx> work = *samples_;
  fft_radix2(work, false);
  // reorder to ascending k and apply the Riemann weight L/N
  const double weight = grid_.spatial_step();
  std::vector<cplx> coeffs(n);
  for (int k = grid_.k_min(); k <= grid_.k_max(); ++k) {
    const std::size_t natural = static_cast<std::size_t>(k < 0 ? k + static_cast<int>(n) : k);
    coeffs[static_cast<std::size_t>(k - grid_.k_min())] = work[natural] * weight;
  }
  auto fresh = std::make_shared<const std::vector<cplx>>(std::move(coeffs));
  std::atomic_store_explicit(&spectrum_, fresh, std::memory_order_release);
  return *fresh;
}

bool SampledFunction::spectrum_cached() const {
  return std::atomic_load_explicit(&spectrum_, std::memory_order_acquire) != nullptr;
}

const std::vector<cplx>& forward_transform(const SampledFunction& f) { return f.spectrum(); }

SampledFunction function_from_spectrum(const GridSpec& grid, std::vector<cplx> coeffs) {
  const std::size_t n = grid.samples();
  if (coeffs.size() != n) fail("parameter-error", "coefficient array does not match grid size");
  std::vector<cplx> natural(n);
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    const std::size_t bin = static_cast<std::size_t>(k < 0 ? k + static_cast<int>(n) : k);
    natural[bin] = coeffs[static_cast<std::size_t>(k - grid.k_min())];
  }
  fft_radix2(natural, true);
  // f(x_j) = (1/L) sum_k c_k e^{i xi_k x_j} = (N/L) * ifft
  const double scale = static_cast<double>(n) / grid.period();
  for (auto& z : natural) z *= scale;
  return SampledFunction(grid, std::move(natural));
}

double lp_norm(const SampledFunction& f, double p) {
  const auto& v = f.samples();
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
  }
  if (!(p > 0.0)) fail("parameter-error", "lp_norm requires p > 0 or p = infinity");
  double peak = 0.0;
  for (const auto& z : v) peak = std::max(peak, std::abs(z));
  if (peak == 0.0) return 0.0;
  // factor out the peak so large p cannot overflow
  double acc = 0.0;
  for (const auto& z : v) acc += std::pow(std::abs(z) / peak, p);
  const double weight = f.grid().spatial_step();
  return peak * std::pow(weight * acc, 1.0 / p);
}

cplx inner_product(const SampledFunction& f, const SampledFunction& g) {
  if (f.grid() != g.grid()) fail("grid-error", "inner_product requires matching grids");
  cplx acc = 0.0;
  const auto& a = f.samples();
  const auto& b = g.samples();
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * std::conj(b[j]);
  return acc * f.grid().spatial_step();
}

namespace {
std::vector<cplx> zip(const SampledFunction& a, const SampledFunction& b,
                      cplx (*op)(const cplx&, const cplx&)) {
  if (a.grid() != b.grid()) fail("grid-error", "operand grids differ");
  std::vector<cplx> out(a.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = op(a.samples()[j], b.samples()[j]);
  return out;
}
}  // namespace

SampledFunction operator+(const SampledFunction& a, const SampledFunction& b) {
  return SampledFunction(a.grid(), zip(a, b, +[](const cplx& x, const cplx& y) { return x + y; }));
}
SampledFunction operator-(const SampledFunction& a, const SampledFunction& b) {
  return SampledFunction(a.grid(), zip(a, b, +[](const cplx& x, const cplx& y) { return x - y; }));
}
SampledFunction operator*(const SampledFunction& a, const SampledFunction& b) {
  return SampledFunction(a.grid(), zip(a, b, +[](const cplx& x, const cplx& y) { return x * y; }));
}
SampledFunction operator*(cplx scale, const SampledFunction& a) {
  std::vector<cplx> out(a.samples());
  for (auto& z : out) z *= scale;
  return SampledFunction(a.grid(), std::move(out));
}

SampledFunction modulate(const SampledFunction& f, int k) {
  const auto& g = f.grid();
  std::vector<cplx> out(f.size());
  const std::size_t n = g.samples();
  // e^{i xi_k x_j} = e^{2 pi i k j / N}; stay on the unit circle exactly
  for (std::size_t j = 0; j < n; ++j) {
    const long long idx = (static_cast<long long>(k) * static_cast<long long>(j)) %
                          static_cast<long long>(n);
    const double a = kTwoPi * static_cast<double>(idx) / static_cast<double>(n);
    out[j] = f.samples()[j] * cplx{std::cos(a), std::sin(a)};
  }
  return SampledFunction(g, std::move(out));
}

ExponentTriple::ExponentTriple(double p_, double q_, double r_) : p(p_), q(q_), r(r_) {
  const auto inv = [](double e) { return std::isinf(e) ? 0.0 : 1.0 / e; };
  if (!(p > 1.0)) fail("parameter-error", "exponent p must lie in (1, infinity]");
  if (!(q > 1.0)) fail("parameter-error", "exponent q must lie in (1, infinity]");
  if (!(r > 0.0) || std::isinf(r)) fail("parameter-error", "exponent r must be finite positive");
  if (std::abs(inv(r) - inv(p) - inv(q)) > 1e-12)
    fail("parameter-error", "Hoelder relation 1/r = 1/p + 1/q violated");
}

ExponentTriple ExponentTriple::from_pq(double p_, double q_) {
  const auto inv = [](double e) { return std::isinf(e) ? 0.0 : 1.0 / e; };
  const double ir = inv(p_) + inv(q_);
  if (!(ir > 0.0)) fail("parameter-error", "p = q = infinity leaves r undefined");
  return ExponentTriple(p_, q_, 1.0 / ir);
}

bool ExponentTriple::local_l2() const { return p >= 2.0 && q >= 2.0 && r >= 1.0 && r <= 2.0; }

SampledFunction synthesize_test_function(const GridSpec& grid, TestFamily family,
                                         const TestFunctionParams& params,
                                         std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  const std::size_t n = grid.samples();
  switch (family) {
    case TestFamily::gaussian_packet: {
      const auto& gp = std::get<GaussianPacketParams>(params);
      if (!(gp.width > 0.0)) fail("parameter-error", "gaussian width must be positive");
      std::vector<cplx> out(n);
      const double L = grid.period();
      // sum enough periodic images for the tail to fall below 1e-18
      const int images = std::max(1, static_cast<int>(std::ceil(10.0 * gp.width / L)) + 1);
      for (std::size_t j = 0; j < n; ++j) {
        cplx acc = 0.0;
        for (int m = -images; m <= images; ++m) {
          const double t = grid.x(j) - gp.center - static_cast<double>(m) * L;
          const double env = std::exp(-t * t / (2.0 * gp.width * gp.width));
          acc += env * cplx{std::cos(gp.modulation * t), std::sin(gp.modulation * t)};
        }
        out[j] = acc;
      }
      return SampledFunction(grid, std::move(out));
    }
    case TestFamily::random_bandlimited: {
      const auto& band = std::get<BandParams>(params);
      if (band.lo > band.hi) fail("parameter-error", "band endpoints out of order");
      if (band.lo < -grid.nyquist() || band.hi >= grid.nyquist())
        fail("band-error", "requested band exceeds the Nyquist range");
      std::vector<cplx> coeffs(n);
      for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
        const double xi = grid.xi(k);
        if (xi >= band.lo && xi <= band.hi)
          coeffs[static_cast<std::size_t>(k - grid.k_min())] = rng.complex_normal();
      }
      return function_from_spectrum(grid, std::move(coeffs));
    }
    case TestFamily::indicator_signed: {
      const auto& ind = std::get<IndicatorParams>(params);
      if (ind.mask.size() != n) fail("parameter-error", "indicator mask does not match grid size");
      std::vector<cplx> out(n);
      for (std::size_t j = 0; j < n; ++j) {
        const cplx sign = rng.random_sign();  // consume deterministically at every site
        if (ind.mask[j]) out[j] = sign;
      }
      return SampledFunction(grid, std::move(out));
    }
  }
  fail("parameter-error", "unknown test family");
}

void save_csv(const SampledFunction& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("parameter-error", "cannot open '" + path + "' for writing");
  out << "x,re,im\n";
  char line[128];
  for (std::size_t j = 0; j < f.size(); ++j) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", f.grid().x(j),
                  f.samples()[j].real(), f.samples()[j].imag());
    out << line;
  }
}

}  // namespace bilintf

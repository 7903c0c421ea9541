#include "bilintf/multiplier.hpp"

#include <algorithm>
#include <cmath>

#include "bilintf/rng.hpp"

namespace bilintf {

SymbolDescriptor SymbolDescriptor::linear(std::function<cplx(double)> f, SupportHint hint) {
  SymbolDescriptor s;
  s.arity = SymbolArity::linear_1d;
  s.eval1 = std::move(f);
  s.support = hint;
  return s;
}

SymbolDescriptor SymbolDescriptor::diagonal(std::function<cplx(double)> f, SupportHint hint) {
  SymbolDescriptor s;
  s.arity = SymbolArity::bilinear_diagonal;
  s.eval1 = std::move(f);
  s.support = hint;
  return s;
}

SymbolDescriptor SymbolDescriptor::general(std::function<cplx(double, double)> f,
                                           SupportHint hint) {
  SymbolDescriptor s;
  s.arity = SymbolArity::bilinear_general;
  s.eval2 = std::move(f);
  s.support = hint;
  return s;
}

SymbolDescriptor SymbolDescriptor::xdep(std::function<cplx(double, double, double)> f,
                                        SupportHint hint) {
  SymbolDescriptor s;
  s.arity = SymbolArity::bilinear_xdep;
  s.eval3 = std::move(f);
  s.support = hint;
  return s;
}

SymbolDescriptor SymbolDescriptor::sharp(const Interval& omega, SymbolArity arity) {
  auto cut = [omega](double t) -> cplx { return omega.contains_halfopen(t) ? 1.0 : 0.0; };
  SymbolDescriptor s = (arity == SymbolArity::linear_1d) ? linear(cut) : diagonal(cut);
  s.arity = arity;
  s.support = SupportHint::on_interval(omega);
  s.smoothness_tag = "sharp";
  return s;
}

SymbolDescriptor SymbolDescriptor::from_bump(const BumpSymbol& bump, SymbolArity arity) {
  auto f = [bump](double t) -> cplx { return bump(t); };
  SymbolDescriptor s = (arity == SymbolArity::linear_1d) ? linear(f) : diagonal(f);
  s.arity = arity;
  s.support = SupportHint::on_interval(bump.interval);
  s.smoothness_tag = "smooth";
  return s;
}

bool audit_support(const SymbolDescriptor& s, std::uint64_t seed, int points) {
  if (s.support.kind == SupportHint::Kind::none) return true;
  Rng rng(seed);
  const Interval& w = s.support.interval;
  const double margin = 8.0 * std::max(1.0, w.length);
  for (int i = 0; i < points; ++i) {
    // sample outside the declared region
    double t = rng.uniform(w.lo() - margin, w.hi() + margin);
    if (t >= w.lo() && t <= w.hi()) t += (t < w.center ? -1.0 : 1.0) * (0.5 * w.length + margin);
    switch (s.arity) {
      case SymbolArity::linear_1d:
      case SymbolArity::bilinear_diagonal:
        if (s.eval1(t) != 0.0) return false;
        break;
      case SymbolArity::bilinear_general: {
        // pick (xi, eta) with lambda1*xi + lambda2*eta = t
        const double l1 = s.support.lambda1, l2 = s.support.lambda2;
        const double xi = rng.uniform(-margin, margin);
        if (l2 != 0.0) {
          if (s.eval2(xi, (t - l1 * xi) / l2) != 0.0) return false;
        } else if (l1 != 0.0) {
          if (s.eval2(t / l1, xi) != 0.0) return false;
        }
        break;
      }
      case SymbolArity::bilinear_xdep: {
        const double l1 = s.support.lambda1, l2 = s.support.lambda2;
        const double xi = rng.uniform(-margin, margin);
        const double x = rng.uniform(-margin, margin);
        if (l2 != 0.0) {
          if (s.eval3(x, xi, (t - l1 * xi) / l2) != 0.0) return false;
        } else if (l1 != 0.0) {
          if (s.eval3(x, t / l1, xi) != 0.0) return false;
        }
        break;
      }
    }
  }
  return true;
}

SampledFunction linear_multiplier(const SampledFunction& f, const SymbolDescriptor& s) {
  if (s.arity != SymbolArity::linear_1d) fail("parameter-error", "linear symbol expected");
  const GridSpec& g = f.grid();
  const auto& spec = f.spectrum();
  std::vector<cplx> out(spec.size());
  for (int k = g.k_min(); k <= g.k_max(); ++k) {
    const std::size_t i = static_cast<std::size_t>(k - g.k_min());
    out[i] = spec[i] * s.eval1(g.xi(k));
  }
  return function_from_spectrum(g, std::move(out));
}

namespace {

// Shared tail: given natural-order (aliased) product coefficients
// C'_m = sum_{k+l == m mod N} f^_k g^_l s(...), evaluate
// out_j = (1/L^2) sum_m C'_m e^{2 pi i m j / N}.
SampledFunction assemble_product(const GridSpec& g, std::vector<cplx> natural) {
  const std::size_t n = g.samples();
  // reuse function_from_spectrum: it expects ascending-k coefficients scaled
  // so that samples = (1/L) sum c_k e^{...}; here we want (1/L^2) sum C'.
  std::vector<cplx> ascending(n);
  for (int k = -static_cast<int>(n) / 2; k < static_cast<int>(n) / 2; ++k) {
    const std::size_t bin = static_cast<std::size_t>(k < 0 ? k + static_cast<int>(n) : k);
    ascending[static_cast<std::size_t>(k + static_cast<int>(n) / 2)] = natural[bin] / g.period();
  }
  return function_from_spectrum(g, std::move(ascending));
}

inline std::size_t alias_bin(int tau, int n) {
  int m = tau % n;
  if (m < 0) m += n;
  return static_cast<std::size_t>(m);
}

}  // namespace

SampledFunction bilinear_diagonal(const SampledFunction& f, const SampledFunction& g,
                                  const SymbolDescriptor& s) {
  if (s.arity != SymbolArity::bilinear_diagonal)
    fail("parameter-error", "diagonal bilinear symbol expected");
  if (f.grid() != g.grid()) fail("grid-error", "bilinear_diagonal requires matching grids");
  const GridSpec& gr = f.grid();
  const int n = static_cast<int>(gr.samples());
  const int kmin = gr.k_min(), kmax = gr.k_max();
  const auto& cf = f.spectrum();
  const auto& cg = g.spectrum();

  int dmin = -(n - 1), dmax = n - 1;
  if (s.support.kind == SupportHint::Kind::interval) {
    const double step = gr.frequency_step();
    dmin = std::max(dmin, static_cast<int>(std::floor(s.support.interval.lo() / step)) - 1);
    dmax = std::min(dmax, static_cast<int>(std::ceil(s.support.interval.hi() / step)) + 1);
  }

  std::vector<cplx> natural(static_cast<std::size_t>(n), 0.0);
  for (int d = dmin; d <= dmax; ++d) {
    const cplx sd = s.eval1(gr.xi(d));
    if (sd == 0.0) continue;
    const int klo = std::max(kmin, kmin + d);
    const int khi = std::min(kmax, kmax + d);
    for (int k = klo; k <= khi; ++k) {
      const int l = k - d;
      const cplx term = cf[static_cast<std::size_t>(k - kmin)] *
                        cg[static_cast<std::size_t>(l - kmin)] * sd;
      natural[alias_bin(k + l, n)] += term;
    }
  }
  return assemble_product(gr, std::move(natural));
}

SampledFunction bilinear_general(const SampledFunction& f, const SampledFunction& g,
                                 const SymbolDescriptor& s) {
  if (s.arity != SymbolArity::bilinear_general)
    fail("parameter-error", "general bilinear symbol expected");
  if (f.grid() != g.grid()) fail("grid-error", "bilinear_general requires matching grids");
  const GridSpec& gr = f.grid();
  const int n = static_cast<int>(gr.samples());
  const int kmin = gr.k_min(), kmax = gr.k_max();
  const auto& cf = f.spectrum();
  const auto& cg = g.spectrum();
  const double step = gr.frequency_step();

  std::vector<cplx> natural(static_cast<std::size_t>(n), 0.0);
  for (int k = kmin; k <= kmax; ++k) {
    const cplx fk = cf[static_cast<std::size_t>(k - kmin)];
    if (fk == 0.0) continue;
    int llo = kmin, lhi = kmax;
    if (s.support.kind == SupportHint::Kind::strip) {
      const double l1 = s.support.lambda1, l2 = s.support.lambda2;
      const double xi = gr.xi(k);
      if (l2 != 0.0) {
        const double a = (s.support.interval.lo() - l1 * xi) / l2;
        const double b = (s.support.interval.hi() - l1 * xi) / l2;
        const double lo = std::min(a, b), hi = std::max(a, b);
        llo = std::max(llo, static_cast<int>(std::floor(lo / step)) - 1);
        lhi = std::min(lhi, static_cast<int>(std::ceil(hi / step)) + 1);
      } else if (!s.support.interval.contains(l1 * xi)) {
        continue;
      }
    }
    for (int l = llo; l <= lhi; ++l) {
      const cplx gl = cg[static_cast<std::size_t>(l - kmin)];
      if (gl == 0.0) continue;
      const cplx v = s.eval2(gr.xi(k), gr.xi(l));
      if (v == 0.0) continue;
      natural[alias_bin(k + l, n)] += fk * gl * v;
    }
  }
  return assemble_product(gr, std::move(natural));
}

SampledFunction bilinear_xdep(const SampledFunction& f, const SampledFunction& g,
                              const SymbolDescriptor& s, bool allow_large) {
  if (s.arity != SymbolArity::bilinear_xdep)
    fail("parameter-error", "x-dependent bilinear symbol expected");
  if (f.grid() != g.grid()) fail("grid-error", "bilinear_xdep requires matching grids");
  const GridSpec& gr = f.grid();
  const std::size_t n = gr.samples();
  if (n > 1024 && !allow_large)
    fail("size-error", "bilinear_xdep is O(N^3); N > 1024 requires allow_large");
  const int kmin = gr.k_min(), kmax = gr.k_max();
  const auto& cf = f.spectrum();
  const auto& cg = g.spectrum();
  const double step = gr.frequency_step();

  // roots e^{2 pi i m / N} for the phase e^{i (xi_k + xi_l) x_j}
  std::vector<cplx> roots(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double a = kTwoPi * static_cast<double>(m) / static_cast<double>(n);
    roots[m] = {std::cos(a), std::sin(a)};
  }

  std::vector<cplx> out(n, 0.0);
  const double scale = 1.0 / (gr.period() * gr.period());
  for (int k = kmin; k <= kmax; ++k) {
    const cplx fk = cf[static_cast<std::size_t>(k - kmin)];
    if (fk == 0.0) continue;
    int llo = kmin, lhi = kmax;
    if (s.support.kind == SupportHint::Kind::strip && s.support.lambda2 != 0.0) {
      const double a = (s.support.interval.lo() - s.support.lambda1 * gr.xi(k)) / s.support.lambda2;
      const double b = (s.support.interval.hi() - s.support.lambda1 * gr.xi(k)) / s.support.lambda2;
      const double lo = std::min(a, b), hi = std::max(a, b);
      llo = std::max(llo, static_cast<int>(std::floor(lo / step)) - 1);
      lhi = std::min(lhi, static_cast<int>(std::ceil(hi / step)) + 1);
    }
    for (int l = llo; l <= lhi; ++l) {
      const cplx gl = cg[static_cast<std::size_t>(l - kmin)];
      if (gl == 0.0) continue;
      const cplx w = fk * gl * scale;
      const long long tau = static_cast<long long>(k) + l;
      for (std::size_t j = 0; j < n; ++j) {
        const cplx sv = s.eval3(gr.x(j), gr.xi(k), gr.xi(l));
        if (sv == 0.0) continue;
        long long idx = (tau * static_cast<long long>(j)) % static_cast<long long>(n);
        if (idx < 0) idx += static_cast<long long>(n);
        out[j] += w * sv * roots[static_cast<std::size_t>(idx)];
      }
    }
  }
  return SampledFunction(gr, std::move(out));
}

SampledFunction apply_bilinear(const SampledFunction& f, const SampledFunction& g,
                               const SymbolDescriptor& s) {
  switch (s.arity) {
    case SymbolArity::bilinear_diagonal:
      return bilinear_diagonal(f, g, s);
    case SymbolArity::bilinear_general:
      return bilinear_general(f, g, s);
    case SymbolArity::bilinear_xdep:
      return bilinear_xdep(f, g, s);
    case SymbolArity::linear_1d:
      break;
  }
  fail("parameter-error", "bilinear symbol expected");
}

cplx trilinear_pairing(const SampledFunction& f, const SampledFunction& g,
                       const SampledFunction& h, const SymbolDescriptor& s) {
  if (f.grid() != h.grid()) fail("grid-error", "trilinear_pairing requires matching grids");
  const SampledFunction t = apply_bilinear(f, g, s);
  cplx acc = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) acc += t.samples()[j] * h.samples()[j];
  return acc * f.grid().spatial_step();
}

}  // namespace bilintf

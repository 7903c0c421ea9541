#include "bilintf/pseudo.hpp"

#include <algorithm>
#include <cmath>

namespace bilintf {

Direction::Direction(double x_, double y_) {
  const double n = std::hypot(x_, y_);
  if (!(n > 0.0)) fail("parameter-error", "direction must be a nonzero vector");
  x = x_ / n;
  y = y_ / n;
}

Direction adjoint_direction(const Direction& theta, int which) {
  if (which == 1) return Direction(-(theta.x + theta.y), theta.y);
  if (which == 2) return Direction(theta.x, -(theta.x + theta.y));
  fail("parameter-error", "adjoint index must be 1 or 2");
}

SymbolDescriptor adjoint_symbol(const SymbolDescriptor& m, int which) {
  if (which != 1 && which != 2) fail("parameter-error", "adjoint index must be 1 or 2");
  SymbolDescriptor base = m;
  if (base.arity == SymbolArity::bilinear_diagonal) {
    // lift the diagonal evaluator s1(xi - eta) to the plane first
    auto f = base.eval1;
    base = SymbolDescriptor::general([f](double xi, double eta) { return f(xi - eta); },
                                     base.support.kind == SupportHint::Kind::interval
                                         ? SupportHint::on_strip(1.0, -1.0, base.support.interval)
                                         : SupportHint::none_hint());
  }
  if (base.arity != SymbolArity::bilinear_general)
    fail("parameter-error", "adjoint_symbol expects a bilinear symbol");

  auto f = base.eval2;
  SupportHint hint = SupportHint::none_hint();
  if (base.support.kind == SupportHint::Kind::strip) {
    const double l1 = base.support.lambda1, l2 = base.support.lambda2;
    // (xi,eta) -> (-xi-eta, eta): l1*u + l2*v = -l1*xi + (l2-l1)*eta
    // (xi,eta) -> (xi, -eta-xi): l1*u + l2*v = (l1-l2)*xi - l2*eta
    if (which == 1)
      hint = SupportHint::on_strip(-l1, l2 - l1, base.support.interval);
    else
      hint = SupportHint::on_strip(l1 - l2, -l2, base.support.interval);
  }
  if (which == 1)
    return SymbolDescriptor::general(
        [f](double xi, double eta) { return std::conj(f(-xi - eta, eta)); }, hint);
  return SymbolDescriptor::general(
      [f](double xi, double eta) { return std::conj(f(xi, -eta - xi)); }, hint);
}

DirectionalSymbol::DirectionalSymbol(SymbolDescriptor base_, Direction theta_, double s_)
    : base(std::move(base_)), theta(theta_), sobolev_s(s_) {
  if (!(sobolev_s > 1.0) || sobolev_s > 2.0)
    fail("parameter-error", "Sobolev exponent s must lie in (1, 2]");
  if (base.arity != SymbolArity::bilinear_general && base.arity != SymbolArity::bilinear_xdep)
    fail("parameter-error", "directional symbols are bilinear (general or x-dependent)");
}

DirectionalSymbol DirectionalSymbol::ridge(std::function<double(double)> profile,
                                           std::function<double(double)> derivative,
                                           Direction theta, double s,
                                           std::optional<Interval> support) {
  const double tx = theta.x, ty = theta.y;
  auto profile_copy = profile;
  SupportHint hint =
      support ? SupportHint::on_strip(tx, ty, *support) : SupportHint::none_hint();
  SymbolDescriptor base = SymbolDescriptor::general(
      [profile_copy, tx, ty](double xi, double eta) -> cplx {
        return profile_copy(tx * xi + ty * eta);
      },
      hint);
  DirectionalSymbol ds(std::move(base), theta, s);
  ds.ridge_profile = std::move(profile);
  ds.ridge_derivative = std::move(derivative);
  return ds;
}

namespace {

double ridge_deriv(const DirectionalSymbol& ds, double lambda, double step) {
  if (ds.ridge_derivative) return ds.ridge_derivative(lambda);
  return (ds.ridge_profile(lambda + step) - ds.ridge_profile(lambda - step)) / (2.0 * step);
}

// Adaptive Simpson quadrature.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

DirectionalNormResult directional_norm(const DirectionalSymbol& ds, const GridSpec& grid,
                                       int max_x_order) {
  const double radius = grid.nyquist() * std::sqrt(2.0);
  const double dstep = grid.frequency_step();
  const double fd = dstep / 4.0;
  const int n_lambda = static_cast<int>(std::ceil(2.0 * radius / dstep));
  const int n_t = 256;
  const int n_x = (ds.base.arity == SymbolArity::bilinear_xdep && max_x_order >= 0) ? 64 : 1;
  const bool xdep = ds.base.arity == SymbolArity::bilinear_xdep;

  const auto value_at = [&](double x, double xi, double eta, int order) -> double {
    // central x-derivative of the given order (order 0 = plain value)
    if (!xdep || order == 0) {
      const cplx v = xdep ? ds.base.eval3(x, xi, eta) : ds.base.eval2(xi, eta);
      return std::abs(v);
    }
    const double hx = 1.0 / 64.0;
    if (order == 1)
      return std::abs(ds.base.eval3(x + hx, xi, eta) - ds.base.eval3(x - hx, xi, eta)) /
             (2.0 * hx);
    return std::abs(ds.base.eval3(x + hx, xi, eta) - 2.0 * ds.base.eval3(x, xi, eta) +
                    ds.base.eval3(x - hx, xi, eta)) /
           (hx * hx);
  };

  DirectionalNormResult result;
  result.window_radius = radius;
  const Direction perp = ds.theta.perp();
  for (int order = 0; order <= (xdep ? max_x_order : 0); ++order) {
    double accum = 0.0;
    double edge = 0.0, peak = 0.0;
    for (int i = 0; i <= n_lambda; ++i) {
      const double lambda = -radius + 2.0 * radius * static_cast<double>(i) / n_lambda;
      double sup = 0.0;
      if (ds.ridge_profile && !xdep && order == 0) {
        // the transverse sup collapses on a ridge
        const double m = std::abs(ds.ridge_profile(lambda));
        const double dm = std::abs(ridge_deriv(ds, lambda, fd));
        sup = m + dm;
      } else {
        for (int t = 0; t <= n_t; ++t) {
          const double tau = -radius + 2.0 * radius * static_cast<double>(t) / n_t;
          const double xi = lambda * ds.theta.x + tau * perp.x;
          const double eta = lambda * ds.theta.y + tau * perp.y;
          for (int ix = 0; ix < n_x; ++ix) {
            const double x = grid.period() * static_cast<double>(ix) / n_x;
            const double m = value_at(x, xi, eta, order);
            // directional derivative along theta by central differences
            const double mp = value_at(x, xi + fd * ds.theta.x, eta + fd * ds.theta.y, order);
            const double mm = value_at(x, xi - fd * ds.theta.x, eta - fd * ds.theta.y, order);
            const double dm = std::abs(mp - mm) / (2.0 * fd);
            sup = std::max(sup, m + dm);
          }
        }
      }
      if (!std::isfinite(sup)) fail("divergence-error", "directional norm integrand not finite");
      peak = std::max(peak, sup);
      if (i == 0 || i == n_lambda) edge = std::max(edge, sup);
      const double weight = (i == 0 || i == n_lambda) ? 0.5 : 1.0;
      accum += weight * std::pow(sup, ds.sobolev_s);
    }
    const double norm = std::pow(accum * (2.0 * radius / n_lambda), 1.0 / ds.sobolev_s);
    result.value = std::max(result.value, norm);
    if (peak > 0.0 && edge > 1e-8 * peak) result.boundary_nonvanishing = true;
  }
  return result;
}

double unit_partition_bump(double t) {
  // flatness-zero ramp pair: rising on [-1, 0], falling on [0, 1]; integer
  // translates telescope to 1 because smooth_step(t) + smooth_step(1-t) = 1
  return smooth_step(t + 1.0) * (1.0 - smooth_step(t));
}

SymbolDescriptor translate_piece(const DirectionalSymbol& ds, int p) {
  if (!ds.ridge_profile) fail("parameter-error", "translate pieces need a ridge profile");
  const double tx = ds.theta.x, ty = ds.theta.y;
  auto profile = ds.ridge_profile;
  const double pc = static_cast<double>(p);
  return SymbolDescriptor::general(
      [profile, tx, ty, pc](double xi, double eta) -> cplx {
        const double lambda = tx * xi + ty * eta;
        return unit_partition_bump(lambda - pc) * profile(lambda);
      },
      SupportHint::on_strip(tx, ty, Interval{pc, 2.0}));
}

TranslateDecomposition unit_decompose(const DirectionalSymbol& ds, const GridSpec& grid) {
  if (!ds.ridge_profile)
    fail("parameter-error", "unit_decompose needs the symbol as a ridge m(lambda)");
  TranslateDecomposition dec{ds.theta, {}, {}, {}, 0.0};
  dec.window_radius = grid.nyquist() * std::sqrt(2.0);
  const int p_max = static_cast<int>(std::ceil(dec.window_radius)) + 1;
  const double fd = grid.frequency_step() / 4.0;
  for (int p = -p_max; p <= p_max; ++p) {
    const auto integrand = [&](double lambda) {
      return std::abs(ds.ridge_profile(lambda)) + std::abs(ridge_deriv(ds, lambda, fd));
    };
    const double w = integrate(integrand, p - 1.0, p + 1.0, 1e-10);
    if (!(w > 0.0)) continue;
    dec.active.push_back(p);
    dec.weights[p] = w;
    const int k = static_cast<int>(std::floor(std::log2(w)));
    dec.buckets[k].push_back(p);
  }
  return dec;
}

double TranslateDecomposition::bucket_series(double s) const {
  double total = 0.0;
  for (const auto& [k, members] : buckets)
    total += std::pow(2.0, static_cast<double>(k) * s) * static_cast<double>(members.size());
  return total;
}

std::pair<SampledFunction, BucketEvalReport> evaluate_via_buckets(
    const SampledFunction& f, const SampledFunction& g, const DirectionalSymbol& ds,
    const TranslateDecomposition& dec, const ExponentTriple& e) {
  if (ds.base.arity == SymbolArity::bilinear_xdep) {
    // x-dependent symbols bypass the bucket pipeline
    return {bilinear_xdep(f, g, ds.base), BucketEvalReport{}};
  }
  BucketEvalReport report;
  report.summability_warning = ds.sobolev_s >= 2.0;
  std::vector<cplx> total(f.size(), 0.0);
  for (const auto& [k, members] : dec.buckets) {
    BucketTerm term;
    term.k = k;
    term.cardinality = static_cast<int>(members.size());
    std::vector<double> sumsq(f.size(), 0.0);
    for (int p : members) {
      const SampledFunction piece = bilinear_general(f, g, translate_piece(ds, p));
      for (std::size_t j = 0; j < total.size(); ++j) {
        total[j] += piece.samples()[j];
        sumsq[j] += std::norm(piece.samples()[j]);
      }
    }
    std::vector<cplx> sq(f.size());
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = std::sqrt(sumsq[j]);
    term.square_norm_r = lp_norm(SampledFunction(f.grid(), std::move(sq)), e.r);
    term.term = std::sqrt(static_cast<double>(term.cardinality)) * term.square_norm_r;
    report.assembled_bound += term.term;
    report.series_value += std::pow(2.0, static_cast<double>(k) * (2.0 - ds.sobolev_s));
    report.terms.push_back(term);
  }
  return {SampledFunction(f.grid(), std::move(total)), report};
}

TranslatedFamilyReport translated_family_bound(const std::function<double(double)>& phi,
                                               const SampledFunction& f, const SampledFunction& g,
                                               const ExponentTriple& e, int n_lo, int n_hi,
                                               int p_lo, int p_hi) {
  TranslatedFamilyReport report;
  const auto diag = [&](std::function<cplx(double)> s, const Interval& hint) {
    return SymbolDescriptor::diagonal(std::move(s), SupportHint::on_interval(hint));
  };

  // direct square function over the translated family
  {
    std::vector<double> sumsq(f.size(), 0.0);
    for (int n = n_lo; n <= n_hi; ++n) {
      const double shift = static_cast<double>(n);
      const double reach = static_cast<double>(p_hi - p_lo) + 2.0;
      const SampledFunction piece = bilinear_diagonal(
          f, g,
          diag([phi, shift](double lambda) -> cplx { return phi(lambda - shift); },
               Interval{shift, 2.0 * reach}));
      for (std::size_t j = 0; j < sumsq.size(); ++j) sumsq[j] += std::norm(piece.samples()[j]);
    }
    std::vector<cplx> sq(f.size());
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = std::sqrt(sumsq[j]);
    report.direct_norm = lp_norm(SampledFunction(f.grid(), std::move(sq)), e.r);
  }

  // Minkowski assembly over the unit decomposition of phi
  for (int p = p_lo; p <= p_hi; ++p) {
    const double pc = static_cast<double>(p);
    double sup = 0.0;
    for (int m = 0; m <= 400; ++m) {
      const double lambda = pc - 1.0 + 2.0 * static_cast<double>(m) / 400.0;
      sup = std::max(sup, std::abs(unit_partition_bump(lambda - pc) * phi(lambda)));
    }
    report.piece_sup[p] = sup;
    std::vector<double> sumsq(f.size(), 0.0);
    for (int n = n_lo; n <= n_hi; ++n) {
      const double shift = static_cast<double>(n);
      const SampledFunction piece = bilinear_diagonal(
          f, g,
          diag(
              [phi, pc, shift](double lambda) -> cplx {
                return unit_partition_bump(lambda - shift - pc) * phi(lambda - shift);
              },
              Interval{pc + shift, 2.0}));
      for (std::size_t j = 0; j < sumsq.size(); ++j) sumsq[j] += std::norm(piece.samples()[j]);
    }
    std::vector<cplx> sq(f.size());
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = std::sqrt(sumsq[j]);
    report.assembly += lp_norm(SampledFunction(f.grid(), std::move(sq)), e.r);
  }

  // decay fit ||phi_p||_inf <= C (1+|p|)^{-N} over the translate range
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (const auto& [p, sup] : report.piece_sup) {
      if (!(sup > 1e-280)) continue;
      const double x = std::log(1.0 + std::abs(static_cast<double>(p)));
      const double y = std::log(sup);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++count;
    }
    if (count >= 3 && sxx * count - sx * sx > 1e-12) {
      const double slope =
          (count * sxy - sx * sy) / (count * sxx - sx * sx);
      report.decay_exponent = -slope;
    } else {
      report.decay_warning = true;
    }
  }
  if (report.decay_exponent < 1.0) report.decay_warning = true;
  return report;
}

}  // namespace bilintf

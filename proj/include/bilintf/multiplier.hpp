#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bilintf/grid.hpp"
#include "bilintf/intervals.hpp"

namespace bilintf {

enum class SymbolArity { linear_1d, bilinear_diagonal, bilinear_general, bilinear_xdep };

// Declared support region for a symbol.  The evaluator remains the source of
// truth; the hint only restricts which frequency pairs are visited.
struct SupportHint {
  enum class Kind { none, interval, strip };
  Kind kind = Kind::none;
  Interval interval{};           // for Kind::interval (argument of a 1-d evaluator)
  double lambda1 = 1.0;          // strip: lambda1*xi + lambda2*eta in interval
  double lambda2 = -1.0;

  static SupportHint none_hint() { return {}; }
  static SupportHint on_interval(const Interval& w) {
    SupportHint h;
    h.kind = Kind::interval;
    h.interval = w;
    return h;
  }
  static SupportHint on_strip(double l1, double l2, const Interval& w) {
    SupportHint h;
    h.kind = Kind::strip;
    h.lambda1 = l1;
    h.lambda2 = l2;
    h.interval = w;
    return h;
  }
};

// Evaluable multiplier symbol.  Exactly one evaluator is populated, matching
// the arity: eval1(xi) for linear symbols, eval1(lambda) for diagonal
// bilinear symbols acting on the difference xi - eta, eval2(xi, eta) for
// general bilinear symbols, eval3(x, xi, eta) for x-dependent ones.
struct SymbolDescriptor {
  SymbolArity arity = SymbolArity::linear_1d;
  std::function<cplx(double)> eval1;
  std::function<cplx(double, double)> eval2;
  std::function<cplx(double, double, double)> eval3;
  SupportHint support;
  std::string smoothness_tag;

  static SymbolDescriptor linear(std::function<cplx(double)> f,
                                 SupportHint hint = SupportHint::none_hint());
  static SymbolDescriptor diagonal(std::function<cplx(double)> f,
                                   SupportHint hint = SupportHint::none_hint());
  static SymbolDescriptor general(std::function<cplx(double, double)> f,
                                  SupportHint hint = SupportHint::none_hint());
  static SymbolDescriptor xdep(std::function<cplx(double, double, double)> f,
                               SupportHint hint = SupportHint::none_hint());

  // Sharp cutoff 1_omega with the half-open grid convention [lo, hi).
  static SymbolDescriptor sharp(const Interval& omega, SymbolArity arity);
  // Smooth cutoff from a bump, linear or diagonal.
  static SymbolDescriptor from_bump(const BumpSymbol& bump, SymbolArity arity);
};

// Checks that the evaluator vanishes outside the declared hint on a random
// mesh (exact zeros); true when no hint is declared.
bool audit_support(const SymbolDescriptor& s, std::uint64_t seed, int points = 1000);

// pi_omega / T_chi: multiplies the spectrum by s(xi_k) and inverts.
SampledFunction linear_multiplier(const SampledFunction& f, const SymbolDescriptor& s);

// T(f,g)(x) = (1/L^2) sum_{k,l} f^_k g^_l s(xi_k - xi_l) e^{i(xi_k+xi_l)x},
// grouped over the difference index (O(N log N + N*B) with B the number of
// strip differences).  Agrees with the direct double sum exactly.
SampledFunction bilinear_diagonal(const SampledFunction& f, const SampledFunction& g,
                                  const SymbolDescriptor& s);

// Direct double sum over the symbol support for general symbols s(xi, eta).
SampledFunction bilinear_general(const SampledFunction& f, const SampledFunction& g,
                                 const SymbolDescriptor& s);

// x-dependent symbols sigma(x, xi, eta); O(N^3) direct evaluation guarded at
// N <= 1024 unless allow_large is set.
SampledFunction bilinear_xdep(const SampledFunction& f, const SampledFunction& g,
                              const SymbolDescriptor& s, bool allow_large = false);

// Dispatches on arity.
SampledFunction apply_bilinear(const SampledFunction& f, const SampledFunction& g,
                               const SymbolDescriptor& s);

// (L/N) sum_j T(f,g)(x_j) h(x_j) -- the trilinear duality pairing
// (no conjugation; matches the distribution pairing <T(f,g), h>).
cplx trilinear_pairing(const SampledFunction& f, const SampledFunction& g,
                       const SampledFunction& h, const SymbolDescriptor& s);

}  // namespace bilintf

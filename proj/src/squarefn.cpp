#include "bilintf/squarefn.hpp"

#include <algorithm>
#include <cmath>

namespace bilintf {

namespace {

void require_sharp_disjoint(const IntervalCollection& c) {
  std::vector<Interval> sorted = c.intervals();
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.lo() < b.lo(); });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    // half-open convention: touching endpoints are fine, open overlap is not
    if (sorted[i - 1].hi() > sorted[i].lo() + 1e-15 * std::abs(sorted[i].lo()))
      if (sorted[i - 1].hi() > sorted[i].lo())
        fail("disjointness-error", "sharp mode requires pairwise-disjoint intervals");
  }
}

SymbolDescriptor symbol_for(const SquareFunctionSpec& spec, std::size_t index, SymbolArity arity) {
  if (index < spec.symbol_family.size() && spec.symbol_family[index].has_value())
    return *spec.symbol_family[index];
  const Interval& w = spec.collection.intervals()[index];
  if (spec.mode == CutoffMode::sharp) return SymbolDescriptor::sharp(w, arity);
  return SymbolDescriptor::from_bump(make_bump(w, spec.bump_flatness), arity);
}

SampledFunction sqrt_of_sumsq(const GridSpec& grid, const std::vector<double>& sumsq) {
  std::vector<cplx> out(sumsq.size());
  for (std::size_t j = 0; j < sumsq.size(); ++j) out[j] = std::sqrt(sumsq[j]);
  return SampledFunction(grid, std::move(out));
}

}  // namespace

SampledFunction linear_square_function(const SampledFunction& f, const SquareFunctionSpec& spec) {
  if (spec.mode == CutoffMode::sharp) require_sharp_disjoint(spec.collection);
  std::vector<double> sumsq(f.size(), 0.0);
  for (std::size_t i = 0; i < spec.collection.size(); ++i) {
    const SampledFunction piece = linear_multiplier(f, symbol_for(spec, i, SymbolArity::linear_1d));
    for (std::size_t j = 0; j < sumsq.size(); ++j) sumsq[j] += std::norm(piece.samples()[j]);
  }
  return sqrt_of_sumsq(f.grid(), sumsq);
}

SampledFunction bilinear_square_function(const SampledFunction& f, const SampledFunction& g,
                                         const SquareFunctionSpec& spec) {
  if (!spec.relaxed_lengths && !spec.collection.assumption_lengths())
    fail("assumption-error", "collection lengths must lie in [1/10, 10] (or set relaxed_lengths)");
  if (f.grid() != g.grid()) fail("grid-error", "bilinear square function requires matching grids");
  // the per-interval evaluations share the cached spectra of f and g
  f.spectrum();
  g.spectrum();
  std::vector<double> sumsq(f.size(), 0.0);
  for (std::size_t i = 0; i < spec.collection.size(); ++i) {
    const SymbolDescriptor s = symbol_for(spec, i, SymbolArity::bilinear_diagonal);
    const SampledFunction piece = apply_bilinear(f, g, s);
    for (std::size_t j = 0; j < sumsq.size(); ++j) sumsq[j] += std::norm(piece.samples()[j]);
  }
  return sqrt_of_sumsq(f.grid(), sumsq);
}

double norm_ratio(const SampledFunction& f, const SampledFunction& g,
                  const SquareFunctionSpec& spec, const ExponentTriple& e) {
  const double denom = lp_norm(f, e.p) * lp_norm(g, e.q);
  if (!(denom > 0.0)) fail("degenerate-input-error", "norm_ratio with vanishing ||f||_p ||g||_q");
  const SampledFunction s = bilinear_square_function(f, g, spec);
  return lp_norm(s, e.r) / denom;
}

}  // namespace bilintf

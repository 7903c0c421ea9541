#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "bilintf/harness.hpp"
#include "bilintf/multiplier.hpp"
#include "bilintf/pseudo.hpp"
#include "bilintf/squarefn.hpp"

namespace bilintf {

namespace {

constexpr const char* kVersion = "0.1.0";

int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("BILIN_TF_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return static_cast<int>(hw);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string row(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += num(values[i]);
  }
  s += '\n';
  return s;
}

struct TrialOutput {
  std::vector<std::string> rows;
  std::vector<double> stats;  // per-experiment scalar channel for the summary
  bool flagged = false;
};

template <typename Fn>
std::vector<TrialOutput> parallel_trials(int trials, Fn&& fn) {
  std::vector<TrialOutput> out(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        out[static_cast<std::size_t>(t)] = fn(t);
      } catch (const std::exception& e) {
        TrialOutput bad;
        bad.flagged = true;
        bad.rows.push_back("# trial " + std::to_string(t) + " diverged: " + e.what() + "\n");
        out[static_cast<std::size_t>(t)] = bad;
      }
    }
  };
  const int workers = std::min(worker_count(), trials);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return out;
}

struct ExperimentOutput {
  std::string columns;
  std::vector<TrialOutput> trials;
  std::vector<std::string> summary;
  std::vector<std::string> notes;  // comment lines after the header
};

bool finite(double v) { return std::isfinite(v); }

double flag_of(bool bad) { return bad ? 1.0 : 0.0; }

SampledFunction random_band_function(const GridSpec& grid, double band, std::uint64_t seed) {
  const double b = std::min(band, 0.45 * grid.nyquist());
  return synthesize_test_function(grid, TestFamily::random_bandlimited, BandParams{-b, b}, seed);
}

// ---------------------------------------------------------------------- //

ExperimentOutput run_plancherel_check(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,rel_error,flag\n";
  const GridSpec grid = cfg.grid.make();
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(t)));
    const SampledFunction f = random_band_function(grid, 0.5 * grid.nyquist(),
                                                   Rng::mix(cfg.seed, 1000u + static_cast<std::uint64_t>(t)));
    // random partition of the Nyquist band into count half-open cells
    std::vector<double> cuts{-grid.nyquist(), grid.nyquist()};
    for (int i = 0; i + 1 < cfg.collection.count; ++i)
      cuts.push_back(rng.uniform(-grid.nyquist(), grid.nyquist()));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Interval> cells;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      if (cuts[i + 1] - cuts[i] > 1e-9) cells.push_back(Interval::from_endpoints(cuts[i], cuts[i + 1]));
    SquareFunctionSpec spec(IntervalCollection::of(std::move(cells)));
    spec.mode = CutoffMode::sharp;
    const double lhs = lp_norm(f, 2.0);
    const double rhs = lp_norm(linear_square_function(f, spec), 2.0);
    const double rel = std::abs(lhs - rhs) / lhs;
    TrialOutput o;
    o.flagged = !finite(rel);
    o.stats = {rel};
    o.rows.push_back(row({static_cast<double>(t), rel, flag_of(o.flagged)}));
    return o;
  });
  double worst = 0.0;
  for (const auto& t : out.trials)
    if (!t.stats.empty()) worst = std::max(worst, t.stats[0]);
  out.summary.push_back("summary,max_rel_error," + num(worst) + "\n");
  return out;
}

ExperimentOutput run_rdf_sweep(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,count,p,ratio,flag\n";
  const GridSpec grid = cfg.grid.make();
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(t)));
    IntervalCollection coll = random_disjoint_collection(
        cfg.collection.count, cfg.collection.band, cfg.collection.length_min,
        cfg.collection.length_max, rng);
    const SampledFunction f = random_band_function(
        grid, cfg.collection.band, Rng::mix(cfg.seed, 2000u + static_cast<std::uint64_t>(t)));
    SquareFunctionSpec spec(std::move(coll));
    spec.mode = CutoffMode::sharp;
    const double ratio = lp_norm(linear_square_function(f, spec), cfg.exponents.p) /
                         lp_norm(f, cfg.exponents.p);
    TrialOutput o;
    o.flagged = !finite(ratio);
    o.stats = {ratio};
    o.rows.push_back(row({static_cast<double>(t), static_cast<double>(cfg.collection.count),
                          cfg.exponents.p, ratio, flag_of(o.flagged)}));
    return o;
  });
  double worst = 0.0;
  for (const auto& t : out.trials)
    if (!t.stats.empty()) worst = std::max(worst, t.stats[0]);
  out.summary.push_back("summary,max_ratio," + num(worst) + "\n");
  return out;
}

ExperimentOutput run_bilinear_sweep(const ExperimentConfig& cfg, bool force_r2) {
  ExperimentOutput out;
  out.columns = "trial,omega_count,p,q,r,ratio,flag\n";
  const GridSpec grid = cfg.grid.make();
  ExponentTriple e = force_r2 ? ExponentTriple(cfg.exponents.p, cfg.exponents.q, 2.0)
                              : ExponentTriple(cfg.exponents.p, cfg.exponents.q, cfg.exponents.r);
  if (!e.local_l2())
    out.notes.push_back("# warning: exponents outside the local-L2 range\n");
  const std::vector<int> sizes = force_r2 ? std::vector<int>{cfg.collection.count} : cfg.sizes;
  const int per_size = cfg.trials;
  const int total = per_size * static_cast<int>(sizes.size());
  out.trials = parallel_trials(total, [&](int flat) {
    const int si = flat / per_size;
    const int t = flat % per_size;
    const int size = sizes[static_cast<std::size_t>(si)];
    Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(1000 * si + t)));
    const double band = std::max(cfg.collection.band,
                                 0.65 * cfg.collection.separation * static_cast<double>(size));
    IntervalCollection coll = random_unit_collection(size, band, cfg.collection.separation, rng);
    const double fband = 0.5 * band + 2.0;
    const SampledFunction f =
        random_band_function(grid, fband, Rng::mix(cfg.seed, 3000u + static_cast<std::uint64_t>(flat)));
    const SampledFunction g =
        random_band_function(grid, fband, Rng::mix(cfg.seed, 4000u + static_cast<std::uint64_t>(flat)));
    SquareFunctionSpec spec(std::move(coll));
    const double ratio = norm_ratio(f, g, spec, e);
    TrialOutput o;
    o.flagged = !finite(ratio);
    o.stats = {static_cast<double>(size), ratio};
    o.rows.push_back(row({static_cast<double>(flat), static_cast<double>(size), e.p, e.q, e.r,
                          ratio, flag_of(o.flagged)}));
    return o;
  });
  std::vector<double> maxes(sizes.size(), 0.0);
  for (const auto& t : out.trials) {
    if (t.stats.size() < 2) continue;
    for (std::size_t si = 0; si < sizes.size(); ++si)
      if (static_cast<int>(t.stats[0]) == sizes[si]) maxes[si] = std::max(maxes[si], t.stats[1]);
  }
  for (std::size_t si = 0; si < sizes.size(); ++si)
    out.summary.push_back("summary_max," + std::to_string(sizes[si]) + "," + num(maxes[si]) + "\n");
  if (sizes.size() >= 2 && maxes.front() > 0.0)
    out.summary.push_back("summary_drift," + std::to_string(sizes.front()) + "," +
                          std::to_string(sizes.back()) + "," +
                          num(maxes.back() / maxes.front()) + "\n");
  return out;
}

ExperimentOutput run_energy_algo_audit(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns =
      "trial,ntiles,d,size_ok,calg,disjoint_ok,cover_ok,dseq,seq_size_ok,seq_calg,"
      "seq_cover_ok,mini_greedy,mini_exhaustive,greedy_le,equal,flag\n";
  const GridSpec grid = cfg.grid.make();
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    const std::uint64_t iseed = Rng::mix(cfg.seed, static_cast<std::uint64_t>(t));
    TileCollection instance = random_sparse_instance(cfg.tiles, iseed);
    ModelSumAnalyzer analyzer(instance, grid);
    const double fband = cfg.tiles.band * 1.2 + 2.0;
    const SampledFunction f =
        random_band_function(grid, fband, Rng::mix(iseed, 11));
    std::vector<SampledFunction> h;
    for (std::size_t n = 0; n < instance.strips().size(); ++n)
      h.push_back(random_band_function(grid, fband, Rng::mix(iseed, 100 + n)));

    TrialOutput o;
    double d = 0, size_ok = 0, calg = 0, disj = 0, cover = 0;
    const double s0 = analyzer.size_vec(f, 1, 2);
    const double e0 = analyzer.energy_vec(f, 1, 2, EnergyMode::greedy).value;
    if (s0 > 0.0 && e0 > 0.0) {
      d = std::floor(std::log2(e0 / s0));
      const DecrementResult res = analyzer.energy_decrement(f, 1, 2, static_cast<int>(d));
      size_ok = flag_of(!res.audit.size_halving_ok) == 0.0 ? 1.0 : 0.0;
      calg = res.audit.calg_ratio;
      disj = res.audit.disjointness.ok() ? 1.0 : 0.0;
      cover = res.audit.cover_ok ? 1.0 : 0.0;
    } else {
      size_ok = disj = cover = 1.0;
    }
    double dseq = 0, seq_size_ok = 1, seq_calg = 0, seq_cover = 1;
    const double ss0 = analyzer.size_seq(h, 1, 2);
    const double se0 = analyzer.energy_seq(h).value;
    if (ss0 > 0.0 && se0 > 0.0) {
      dseq = std::floor(std::log2(se0 / ss0));
      const DecrementResult res = analyzer.energy_decrement_seq(h, 1, 2, static_cast<int>(dseq));
      seq_size_ok = res.audit.size_halving_ok ? 1.0 : 0.0;
      seq_calg = res.audit.calg_ratio;
      seq_cover = res.audit.cover_ok ? 1.0 : 0.0;
    }

    // small instance: greedy vs exhaustive oracle
    Rng rng(Rng::mix(iseed, 77));
    std::vector<int> mini;
    for (std::size_t i = 0; i < instance.size(); ++i) mini.push_back(static_cast<int>(i));
    for (std::size_t i = mini.size() - 1; i > 0; --i)
      std::swap(mini[i], mini[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
    mini.resize(std::min<std::size_t>(mini.size(), 8));
    std::sort(mini.begin(), mini.end());
    ModelSumAnalyzer small(instance.subcollection(mini), grid);
    const double ge = small.energy_vec(f, 1, 2, EnergyMode::greedy).value;
    const double xe = small.energy_vec(f, 1, 2, EnergyMode::exhaustive).value;
    const double greedy_le = ge <= xe * (1.0 + 1e-12) ? 1.0 : 0.0;
    const double equal = std::abs(ge - xe) <= 1e-12 * std::max(1.0, xe) ? 1.0 : 0.0;

    o.stats = {size_ok, calg, disj, cover, seq_size_ok, seq_calg, seq_cover, greedy_le, equal};
    o.flagged = !finite(calg) || !finite(seq_calg);
    o.rows.push_back(row({static_cast<double>(t), static_cast<double>(instance.size()), d,
                          size_ok, calg, disj, cover, dseq, seq_size_ok, seq_calg, seq_cover, ge,
                          xe, greedy_le, equal, flag_of(o.flagged)}));
    return o;
  });
  double max_calg = 0.0, equal_count = 0.0, n = 0.0;
  bool all_ok = true;
  for (const auto& t : out.trials) {
    if (t.stats.size() < 9) continue;
    all_ok = all_ok && t.stats[0] > 0 && t.stats[2] > 0 && t.stats[3] > 0 && t.stats[4] > 0 &&
             t.stats[6] > 0 && t.stats[7] > 0;
    max_calg = std::max({max_calg, t.stats[1], t.stats[5]});
    equal_count += t.stats[8];
    n += 1.0;
  }
  out.summary.push_back("summary,all_postconditions," + num(all_ok ? 1.0 : 0.0) + "\n");
  out.summary.push_back("summary,max_calg," + num(max_calg) + "\n");
  out.summary.push_back("summary,equality_fraction," + num(n > 0 ? equal_count / n : 0.0) + "\n");
  return out;
}

ExperimentOutput run_model_sum_audit(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,ntiles,lambda,permuted_rel,tree_ratio,flag\n";
  const GridSpec grid = cfg.grid.make();
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    const std::uint64_t iseed = Rng::mix(cfg.seed, static_cast<std::uint64_t>(t));
    TileCollection instance = random_sparse_instance(cfg.tiles, iseed);
    ModelSumAnalyzer analyzer(instance, grid);
    const double fband = cfg.tiles.band * 1.2 + 2.0;
    const SampledFunction f1 = random_band_function(grid, fband, Rng::mix(iseed, 21));
    const SampledFunction f2 = random_band_function(grid, fband, Rng::mix(iseed, 22));
    std::vector<SampledFunction> h;
    for (std::size_t n = 0; n < instance.strips().size(); ++n)
      h.push_back(random_band_function(grid, fband, Rng::mix(iseed, 200 + n)));

    const double lambda = analyzer.model_sum(f1, f2, h);
    // permuted re-summation
    const auto a1 = analyzer.coefficients(f1);
    const auto a2 = analyzer.coefficients(f2);
    const auto b = analyzer.seq_coefficients(h);
    std::vector<int> order(instance.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(Rng::mix(iseed, 33));
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
    const double permuted = analyzer.model_sum_subset(order, a1, a2, b);
    const double perm_rel = lambda > 0 ? std::abs(lambda - permuted) / lambda : 0.0;

    const int base = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(instance.size()) - 1));
    const auto [lv, bound] = analyzer.tritile_estimate(f1, f2, h, base, 1, 2);
    const double tree_ratio = bound > 0 ? lv / bound : 0.0;

    TrialOutput o;
    o.flagged = !finite(lambda) || !finite(tree_ratio);
    o.stats = {perm_rel, tree_ratio};
    o.rows.push_back(row({static_cast<double>(t), static_cast<double>(instance.size()), lambda,
                          perm_rel, tree_ratio, flag_of(o.flagged)}));
    return o;
  });
  double max_perm = 0.0, max_tree = 0.0, min_tree = 1e300;
  for (const auto& t : out.trials)
    if (t.stats.size() >= 2) {
      max_perm = std::max(max_perm, t.stats[0]);
      max_tree = std::max(max_tree, t.stats[1]);
      if (t.stats[1] > 0) min_tree = std::min(min_tree, t.stats[1]);
    }
  out.summary.push_back("summary,max_permuted_rel," + num(max_perm) + "\n");
  out.summary.push_back("summary,max_tree_ratio," + num(max_tree) + "\n");
  out.summary.push_back("summary,min_tree_ratio," + num(min_tree < 1e300 ? min_tree : 0.0) + "\n");
  return out;
}

ExperimentOutput run_lambda_bound_audit(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,ntiles,model_sum,bound,ok,levels,flag\n";
  const GridSpec grid = cfg.grid.make();
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    const std::uint64_t iseed = Rng::mix(cfg.seed, static_cast<std::uint64_t>(t));
    TileCollection instance = random_sparse_instance(cfg.tiles, iseed);
    ModelSumAnalyzer analyzer(instance, grid);
    const double fband = cfg.tiles.band * 1.2 + 2.0;
    const SampledFunction f1 = random_band_function(grid, fband, Rng::mix(iseed, 41));
    const SampledFunction f2 = random_band_function(grid, fband, Rng::mix(iseed, 42));
    std::vector<SampledFunction> h;
    for (std::size_t n = 0; n < instance.strips().size(); ++n)
      h.push_back(random_band_function(grid, fband, Rng::mix(iseed, 400 + n)));
    const LambdaBoundResult res =
        analyzer.lambda_bound(f1, f2, h, cfg.exponents.p, cfg.exponents.q, cfg.exponents.p3);
    const bool ok = res.model_sum_value <= res.bound * (1.0 + 1e-9) + 1e-290;
    TrialOutput o;
    o.flagged = !finite(res.bound);
    o.stats = {ok ? 1.0 : 0.0};
    o.rows.push_back(row({static_cast<double>(t), static_cast<double>(instance.size()),
                          res.model_sum_value, res.bound, ok ? 1.0 : 0.0,
                          static_cast<double>(res.levels.size()), flag_of(o.flagged)}));
    return o;
  });
  double pass = 0.0, n = 0.0;
  for (const auto& t : out.trials)
    if (!t.stats.empty()) {
      pass += t.stats[0];
      n += 1.0;
    }
  out.summary.push_back("summary,pass_fraction," + num(n > 0 ? pass / n : 0.0) + "\n");
  return out;
}

DirectionalSymbol preset_symbol(const SymbolConfig& sym, std::uint64_t seed) {
  const Direction theta(sym.theta_x, sym.theta_y);
  if (sym.preset == "gaussian_ridge") {
    return DirectionalSymbol::ridge([](double l) { return std::exp(-0.5 * l * l); },
                                    [](double l) { return -l * std::exp(-0.5 * l * l); }, theta,
                                    sym.s);
  }
  if (sym.preset == "compact_bump_ridge") {
    const BumpSymbol bump = make_bump(Interval{0.0, 4.0}, 0.5);
    return DirectionalSymbol::ridge([bump](double l) { return bump(l); }, nullptr, theta, sym.s,
                                    Interval{0.0, 4.0});
  }
  if (sym.preset == "random_translate_series") {
    Rng rng(seed);
    std::vector<double> coeff(33);
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      const double p = static_cast<double>(i) - 16.0;
      coeff[i] = rng.normal() / ((1.0 + std::abs(p)) * (1.0 + std::abs(p)));
    }
    auto profile = [coeff](double l) {
      double acc = 0.0;
      const int lo = std::max(-16, static_cast<int>(std::floor(l)) - 1);
      const int hi = std::min(16, static_cast<int>(std::ceil(l)) + 1);
      for (int p = lo; p <= hi; ++p)
        acc += coeff[static_cast<std::size_t>(p + 16)] * unit_partition_bump(l - p);
      return acc;
    };
    return DirectionalSymbol::ridge(profile, nullptr, theta, sym.s, Interval{0.0, 36.0});
  }
  fail("config-error", "field 'symbol.preset': unknown preset '" + sym.preset + "'");
}

ExperimentOutput run_pseudo_bucket(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,norm,bucket_series,series_ratio,recon_err,bucket_rel,duality_rel,flag\n";
  const GridSpec grid = cfg.grid.make();
  const ExponentTriple e(cfg.exponents.p, cfg.exponents.q, cfg.exponents.r);
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    const std::uint64_t sseed = Rng::mix(cfg.seed, 7000u + static_cast<std::uint64_t>(t));
    const DirectionalSymbol ds = preset_symbol(cfg.symbol, sseed);
    const DirectionalNormResult norm = directional_norm(ds, grid);
    const TranslateDecomposition dec = unit_decompose(ds, grid);
    const double series = dec.bucket_series(ds.sobolev_s);
    const double series_ratio =
        norm.value > 0 ? series / std::pow(norm.value, ds.sobolev_s) : 0.0;

    // reconstruction of the ridge profile from the translate pieces
    double recon_err = 0.0;
    for (int m = 0; m <= 2000; ++m) {
      const double lambda = -20.0 + 40.0 * static_cast<double>(m) / 2000.0;
      double sum = 0.0;
      const int lo = static_cast<int>(std::floor(lambda)) - 1;
      for (int p = lo; p <= lo + 3; ++p) sum += unit_partition_bump(lambda - p);
      recon_err = std::max(recon_err, std::abs(ds.ridge_profile(lambda)) * std::abs(sum - 1.0));
    }

    const double fband = 0.4 * grid.nyquist();
    const SampledFunction f = random_band_function(grid, fband, Rng::mix(sseed, 1));
    const SampledFunction g = random_band_function(grid, fband, Rng::mix(sseed, 2));
    const auto [assembled, report] = evaluate_via_buckets(f, g, ds, dec, e);
    const SampledFunction direct = bilinear_general(f, g, ds.base);
    double diff = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < assembled.size(); ++j) {
      diff = std::max(diff, std::abs(assembled.samples()[j] - direct.samples()[j]));
      scale = std::max(scale, std::abs(direct.samples()[j]));
    }
    const double bucket_rel = scale > 0 ? diff / scale : diff;

    const SampledFunction hh = random_band_function(grid, fband, Rng::mix(sseed, 3));
    const cplx lhs = trilinear_pairing(f, g, hh, ds.base);
    const cplx rhs = trilinear_pairing(hh, g, f, adjoint_symbol(ds.base, 1));
    const double duality_rel = std::abs(lhs - rhs) / std::max(1e-300, std::abs(lhs));

    TrialOutput o;
    o.flagged = !finite(norm.value) || !finite(bucket_rel);
    o.stats = {series_ratio, recon_err, bucket_rel, duality_rel};
    o.rows.push_back(row({static_cast<double>(t), norm.value, series, series_ratio, recon_err,
                          bucket_rel, duality_rel, flag_of(o.flagged)}));
    return o;
  });
  double worst[4] = {0, 0, 0, 0};
  for (const auto& t : out.trials)
    for (std::size_t i = 0; i < t.stats.size() && i < 4; ++i)
      worst[i] = std::max(worst[i], t.stats[i]);
  out.summary.push_back("summary,max_series_ratio," + num(worst[0]) + "\n");
  out.summary.push_back("summary,max_recon_err," + num(worst[1]) + "\n");
  out.summary.push_back("summary,max_bucket_rel," + num(worst[2]) + "\n");
  out.summary.push_back("summary,max_duality_rel," + num(worst[3]) + "\n");
  // adjoint angle identities on a fan of directions
  double cot_err = 0.0, tan_err = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double a = kPi * (static_cast<double>(i) + 0.3) / 16.0;
    const Direction theta(std::cos(a), std::sin(a));
    const Direction t1 = adjoint_direction(theta, 1);
    const Direction t2 = adjoint_direction(theta, 2);
    if (std::abs(theta.y) > 1e-6 && std::abs(t1.y) > 1e-6)
      cot_err = std::max(cot_err, std::abs(theta.x / theta.y + t1.x / t1.y + 1.0));
    if (std::abs(theta.x) > 1e-6 && std::abs(t2.x) > 1e-6)
      tan_err = std::max(tan_err, std::abs(theta.y / theta.x + t2.y / t2.x + 1.0));
  }
  out.summary.push_back("summary,max_cot_identity_err," + num(cot_err) + "\n");
  out.summary.push_back("summary,max_tan_identity_err," + num(tan_err) + "\n");
  return out;
}

ExperimentOutput run_translated_family(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,direct,assembly,margin_ok,decay_exponent,flag\n";
  const GridSpec grid = cfg.grid.make();
  const ExponentTriple e(cfg.exponents.p, cfg.exponents.q, cfg.exponents.r);
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    const std::uint64_t iseed = Rng::mix(cfg.seed, 8000u + static_cast<std::uint64_t>(t));
    const SampledFunction f = random_band_function(grid, 8.0, Rng::mix(iseed, 1));
    const SampledFunction g = random_band_function(grid, 8.0, Rng::mix(iseed, 2));
    const TranslatedFamilyReport report = translated_family_bound(
        [](double l) { return std::exp(-0.5 * l * l); }, f, g, e, -8, 7, -16, 16);
    const bool margin_ok = report.direct_norm <= report.assembly + 1e-10;
    TrialOutput o;
    o.flagged = !finite(report.direct_norm) || !finite(report.assembly);
    o.stats = {margin_ok ? 1.0 : 0.0, report.decay_exponent};
    o.rows.push_back(row({static_cast<double>(t), report.direct_norm, report.assembly,
                          margin_ok ? 1.0 : 0.0, report.decay_exponent, flag_of(o.flagged)}));
    return o;
  });
  double all_ok = 1.0, min_decay = 1e300;
  for (const auto& t : out.trials)
    if (t.stats.size() >= 2) {
      all_ok = std::min(all_ok, t.stats[0]);
      min_decay = std::min(min_decay, t.stats[1]);
    }
  out.summary.push_back("summary,all_margins_ok," + num(all_ok) + "\n");
  out.summary.push_back("summary,min_decay_exponent," + num(min_decay < 1e300 ? min_decay : 0.0) +
                        "\n");
  return out;
}

std::vector<double> weak_type_ratios(const ExperimentConfig& cfg) {
  const GridSpec grid = cfg.grid.make();
  if (!(cfg.sets.e1 > 0.0) || !(cfg.sets.e2 > 0.0) || !(cfg.sets.e3 > 0.0))
    fail("degenerate-input-error", "weak-type sets must have positive measure fractions");
  std::vector<double> ratios(static_cast<std::size_t>(cfg.trials));
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t iseed = Rng::mix(cfg.seed, 9000u + static_cast<std::uint64_t>(t));
    TileCollection instance = random_sparse_instance(cfg.tiles, iseed);
    ModelSumAnalyzer analyzer(instance, grid);
    Rng rng(Rng::mix(iseed, 5));
    const MeasurableSet e1 = MeasurableSet::random(grid, cfg.sets.e1, rng);
    const MeasurableSet e2 = MeasurableSet::random(grid, cfg.sets.e2, rng);
    const MeasurableSet e3 = MeasurableSet::random(grid, cfg.sets.e3, rng);
    const SampledFunction f = synthesize_test_function(
        grid, TestFamily::indicator_signed, IndicatorParams{e1.mask}, Rng::mix(iseed, 6));
    const SampledFunction g = synthesize_test_function(
        grid, TestFamily::indicator_signed, IndicatorParams{e2.mask}, Rng::mix(iseed, 7));
    const std::size_t strip_count = instance.strips().size();
    std::vector<SampledFunction> h;
    const cplx weight{1.0 / std::sqrt(static_cast<double>(strip_count)), 0.0};
    for (std::size_t n = 0; n < strip_count; ++n)
      h.push_back(weight * synthesize_test_function(grid, TestFamily::indicator_signed,
                                                    IndicatorParams{e3.mask},
                                                    Rng::mix(iseed, 800 + n)));
    const double lambda = analyzer.model_sum(f, g, h);
    const double denom = std::pow(e1.measure(), 1.0 / cfg.exponents.p) *
                         std::pow(e2.measure(), 1.0 / cfg.exponents.q) *
                         std::pow(e3.measure(), 1.0 / cfg.exponents.p3);
    ratios[static_cast<std::size_t>(t)] = lambda / denom;
  }
  return ratios;
}

ExperimentOutput run_weak_type(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,ratio,flag\n";
  const std::vector<double> ratios = weak_type_ratios(cfg);
  out.trials.resize(ratios.size());
  double worst = 0.0;
  for (std::size_t t = 0; t < ratios.size(); ++t) {
    TrialOutput o;
    o.flagged = !finite(ratios[t]);
    o.rows.push_back(row({static_cast<double>(t), ratios[t], flag_of(o.flagged)}));
    out.trials[t] = o;
    worst = std::max(worst, ratios[t]);
  }
  out.summary.push_back("summary,max_ratio," + num(worst) + "\n");
  return out;
}

ExperimentOutput run_offdiag_decay(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  out.columns = "trial,k,local_norm,flag\n";
  const GridSpec grid = cfg.grid.make();
  const ExponentTriple e(cfg.exponents.p, cfg.exponents.q, cfg.exponents.r);
  out.trials = parallel_trials(cfg.trials, [&](int t) {
    const std::uint64_t iseed = Rng::mix(cfg.seed, 9900u + static_cast<std::uint64_t>(t));
    const DirectionalSymbol ds = preset_symbol(cfg.symbol, iseed);
    const double center = 0.5 * grid.period();
    const SampledFunction f = synthesize_test_function(
        grid, TestFamily::gaussian_packet, GaussianPacketParams{center, 0.5, 1.0},
        Rng::mix(iseed, 1));
    const SampledFunction g = synthesize_test_function(
        grid, TestFamily::gaussian_packet, GaussianPacketParams{center, 0.4, -2.0},
        Rng::mix(iseed, 2));
    const SampledFunction tm = bilinear_general(f, g, ds.base);
    TrialOutput o;
    for (int k = 1; std::ldexp(1.0, k) <= 0.4 * grid.period(); ++k) {
      // annulus 2^k I \ 2^{k-1} I around the unit window at the center
      const double lo = std::ldexp(0.5, k - 1), hi = std::ldexp(0.5, k);
      double acc = 0.0;
      std::size_t count = 0;
      for (std::size_t j = 0; j < tm.size(); ++j) {
        const double dist = std::abs(grid.x(j) - center);
        if (dist >= lo && dist < hi) {
          acc += std::pow(std::abs(tm.samples()[j]), e.r);
          ++count;
        }
      }
      if (count == 0) continue;
      const double norm =
          std::pow(acc * grid.spatial_step() / std::ldexp(2.0, k), 1.0 / e.r);
      o.rows.push_back(row({static_cast<double>(t), static_cast<double>(k), norm, 0.0}));
      o.stats.push_back(norm);
    }
    return o;
  });
  // decay slope of the first trial as the headline number
  double slope = 0.0;
  if (!out.trials.empty() && out.trials[0].stats.size() >= 3) {
    const auto& a = out.trials[0].stats;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!(a[k] > 1e-280)) continue;
      const double x = static_cast<double>(k);
      const double y = std::log2(a[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    if (n >= 2 && n * sxx - sx * sx > 0) slope = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  out.summary.push_back("summary,decay_rate_bits_per_shell," + num(slope) + "\n");
  return out;
}

}  // namespace

double estimate_weak_type(const ExperimentConfig& cfg) {
  const std::vector<double> ratios = weak_type_ratios(cfg);
  double worst = 0.0;
  for (double r : ratios) worst = std::max(worst, r);
  return worst;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult result;
  try {
    validate_config(cfg);
  } catch (const Error& e) {
    result.exit_code = 2;
    result.summary = e.what();
    return result;
  }

  ExperimentOutput out;
  try {
    if (cfg.experiment == "plancherel_check") out = run_plancherel_check(cfg);
    else if (cfg.experiment == "rdf_sweep") out = run_rdf_sweep(cfg);
    else if (cfg.experiment == "bilinear_sweep") out = run_bilinear_sweep(cfg, false);
    else if (cfg.experiment == "endpoint_r2") out = run_bilinear_sweep(cfg, true);
    else if (cfg.experiment == "energy_algo_audit") out = run_energy_algo_audit(cfg);
    else if (cfg.experiment == "model_sum_audit") out = run_model_sum_audit(cfg);
    else if (cfg.experiment == "lambda_bound_audit") out = run_lambda_bound_audit(cfg);
    else if (cfg.experiment == "pseudo_bucket") out = run_pseudo_bucket(cfg);
    else if (cfg.experiment == "translated_family") out = run_translated_family(cfg);
    else if (cfg.experiment == "weak_type_estimate") out = run_weak_type(cfg);
    else if (cfg.experiment == "offdiag_decay") out = run_offdiag_decay(cfg);
  } catch (const Error& e) {
    if (e.kind() == "config-error" || e.kind() == "parameter-error") {
      result.exit_code = 2;
      result.summary = e.what();
      return result;
    }
    throw;
  }

  std::string csv = std::string("# bilin-tf v") + kVersion + " " + cfg.experiment + "\n";
  for (const auto& note : out.notes) csv += note;
  csv += out.columns;
  bool flagged = false;
  for (const auto& t : out.trials) {
    flagged = flagged || t.flagged;
    for (const auto& r : t.rows) csv += r;
  }
  for (const auto& s : out.summary) csv += s;

  std::filesystem::create_directories(cfg.out);
  const std::string path = cfg.out + "/" + cfg.experiment + ".csv";
  {
    std::ofstream file(path, std::ios::binary);
    if (!file) fail("config-error", "cannot open output '" + path + "'");
    file << csv;
  }
  result.csv_path = path;
  if (cfg.plot) {
    result.svg_path = cfg.out + "/" + cfg.experiment + ".svg";
    render_csv_svg(path, result.svg_path);
  }
  result.numeric_flag = flagged;
  result.exit_code = flagged ? 3 : 0;
  result.summary = out.summary.empty() ? "" : out.summary.front();
  return result;
}

}  // namespace bilintf

#include "bilintf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bilintf {

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "plancherel_check", "rdf_sweep",        "bilinear_sweep",   "endpoint_r2",
      "energy_algo_audit", "model_sum_audit", "lambda_bound_audit", "pseudo_bucket",
      "translated_family", "weak_type_estimate", "offdiag_decay"};
  return names;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& path, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail("config-error", "field '" + path + "': cannot parse number '" + v + "'");
  }
}

long long parse_int(const std::string& path, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail("config-error", "field '" + path + "': cannot parse integer '" + v + "'");
  }
}

bool parse_bool(const std::string& path, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail("config-error", "field '" + path + "': expected true/false");
}

std::vector<int> parse_int_list(const std::string& path, const std::string& v) {
  std::vector<int> out;
  std::istringstream stream(v);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_int(path, item)));
  }
  if (out.empty()) fail("config-error", "field '" + path + "': empty list");
  return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
  const std::string path = section.empty() ? key : section + "." + key;
  if (section.empty()) {
    if (key == "experiment") cfg.experiment = value;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(path, value));
    else if (key == "trials") cfg.trials = static_cast<int>(parse_int(path, value));
    else if (key == "out") cfg.out = value;
    else if (key == "plot") cfg.plot = parse_bool(path, value);
    else if (key == "sizes") cfg.sizes = parse_int_list(path, value);
    else fail("config-error", "unknown key '" + path + "'");
  } else if (section == "grid") {
    if (key == "period") cfg.grid.period = parse_double(path, value);
    else if (key == "samples") cfg.grid.samples = static_cast<std::size_t>(parse_int(path, value));
    else fail("config-error", "unknown key '" + path + "'");
  } else if (section == "collection") {
    if (key == "count") cfg.collection.count = static_cast<int>(parse_int(path, value));
    else if (key == "length_min") cfg.collection.length_min = parse_double(path, value);
    else if (key == "length_max") cfg.collection.length_max = parse_double(path, value);
    else if (key == "separation") cfg.collection.separation = parse_double(path, value);
    else if (key == "band") cfg.collection.band = parse_double(path, value);
    else fail("config-error", "unknown key '" + path + "'");
  } else if (section == "exponents") {
    if (key == "p") cfg.exponents.p = parse_double(path, value);
    else if (key == "q") cfg.exponents.q = parse_double(path, value);
    else if (key == "r") cfg.exponents.r = parse_double(path, value);
    else if (key == "p3") cfg.exponents.p3 = parse_double(path, value);
    else fail("config-error", "unknown key '" + path + "'");
  } else if (section == "sets") {
    if (key == "e1") cfg.sets.e1 = parse_double(path, value);
    else if (key == "e2") cfg.sets.e2 = parse_double(path, value);
    else if (key == "e3") cfg.sets.e3 = parse_double(path, value);
    else fail("config-error", "unknown key '" + path + "'");
  } else if (section == "tiles") {
    if (key == "strips") cfg.tiles.strips = static_cast<int>(parse_int(path, value));
    else if (key == "max_tritiles") cfg.tiles.max_tritiles = static_cast<int>(parse_int(path, value));
    else if (key == "extent") cfg.tiles.extent = parse_double(path, value);
    else if (key == "scale") cfg.tiles.scale = parse_double(path, value);
    else if (key == "band") cfg.tiles.band = parse_double(path, value);
    else if (key == "strip_band") cfg.tiles.strip_band = parse_double(path, value);
    else fail("config-error", "unknown key '" + path + "'");
  } else if (section == "symbol") {
    if (key == "preset") cfg.symbol.preset = value;
    else if (key == "s") cfg.symbol.s = parse_double(path, value);
    else if (key == "theta_x") cfg.symbol.theta_x = parse_double(path, value);
    else if (key == "theta_y") cfg.symbol.theta_y = parse_double(path, value);
    else if (key == "seed") cfg.symbol.seed = static_cast<int>(parse_int(path, value));
    else fail("config-error", "unknown key '" + path + "'");
  } else {
    fail("config-error", "unknown table '[" + section + "]'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail("config-error", "line " + std::to_string(lineno) + ": malformed table header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("config-error", "line " + std::to_string(lineno) + ": expected key = value");
    apply_key(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config-error", "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void validate_config(const ExperimentConfig& cfg) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    fail("config-error", "field 'experiment': unknown experiment '" + cfg.experiment + "'");
  if (cfg.trials < 1) fail("config-error", "field 'trials': must be >= 1");
  try {
    (void)cfg.grid.make();
  } catch (const Error& e) {
    fail("config-error", std::string("table '[grid]': ") + e.what());
  }
  try {
    (void)ExponentTriple(cfg.exponents.p, cfg.exponents.q, cfg.exponents.r);
  } catch (const Error& e) {
    fail("config-error", std::string("table '[exponents]': ") + e.what());
  }
  if (cfg.collection.count < 1) fail("config-error", "field 'collection.count': must be >= 1");
  if (cfg.tiles.strips < 1) fail("config-error", "field 'tiles.strips': must be >= 1");
}

double MeasurableSet::measure() const {
  std::size_t count = 0;
  for (auto m : mask) count += m ? 1 : 0;
  return grid.spatial_step() * static_cast<double>(count);
}

bool MeasurableSet::admits(const SampledFunction& f) const {
  if (f.grid() != grid) return false;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (std::abs(f.samples()[j]) > static_cast<double>(mask[j]) + 1e-12) return false;
  return true;
}

MeasurableSet MeasurableSet::random(const GridSpec& grid, double fraction, Rng& rng) {
  if (!(fraction > 0.0) || fraction > 1.0)
    fail("degenerate-input-error", "set fraction must lie in (0, 1]");
  std::vector<std::uint8_t> mask(grid.samples(), 0);
  std::size_t count = 0;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (rng.uniform() < fraction) {
      mask[j] = 1;
      ++count;
    }
  }
  if (count == 0) {
    // fraction so small nothing was drawn; force one cell to keep E nonempty
    mask[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(mask.size()) - 1))] = 1;
  }
  return MeasurableSet{grid, std::move(mask)};
}

IntervalCollection random_unit_collection(int count, double band, double separation, Rng& rng) {
  const double spacing = 2.0 * band / static_cast<double>(count);
  if (spacing < separation)
    fail("parameter-error", "band too small for the requested count and separation");
  std::vector<Interval> intervals;
  intervals.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double slot = -band + (static_cast<double>(i) + 0.5) * spacing;
    const double jitter = (rng.uniform() - 0.5) * (spacing - separation);
    intervals.push_back(Interval{slot + jitter, 1.0});
  }
  return IntervalCollection(std::move(intervals), 1.0, 1.0, 2.0);
}

IntervalCollection random_disjoint_collection(int count, double band, double length_min,
                                              double length_max, Rng& rng) {
  // place intervals left to right with random gaps inside [-band, band]
  std::vector<Interval> intervals;
  double cursor = -band;
  const double room = 2.0 * band - static_cast<double>(count) * length_max;
  if (room <= 0.0) fail("parameter-error", "band too small for the requested intervals");
  const double mean_gap = room / static_cast<double>(count + 1);
  for (int i = 0; i < count; ++i) {
    cursor += rng.uniform(0.1 * mean_gap, mean_gap);
    const double len = rng.uniform(length_min, length_max);
    intervals.push_back(Interval{cursor + 0.5 * len, len});
    cursor += len;
  }
  return IntervalCollection(std::move(intervals), length_min, length_max, 2.0);
}

TileCollection random_sparse_instance(const TilesConfig& tiles, std::uint64_t seed) {
  Rng rng(seed);
  const int strip_count = tiles.strips;
  IntervalCollection strips =
      random_unit_collection(strip_count, std::max(tiles.strip_band, 1.3 * strip_count), 2.5, rng);
  TileCollection cover = build_tritile_cover(strips, tiles.extent, tiles.scale,
                                             Interval{0.0, 2.0 * tiles.band});
  if (cover.size() == 0) fail("state-error", "empty tri-tile cover");
  auto classes = sparse_split(cover);
  std::size_t best = 0;
  for (std::size_t i = 1; i < classes.size(); ++i)
    if (classes[i].size() > classes[best].size()) best = i;
  const TileCollection& cls = classes[best];
  if (static_cast<int>(cls.size()) <= tiles.max_tritiles) return cls;
  // deterministic subsample without replacement
  std::vector<int> indices(cls.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  for (std::size_t i = indices.size() - 1; i > 0; --i)
    std::swap(indices[i], indices[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
  indices.resize(static_cast<std::size_t>(tiles.max_tritiles));
  std::sort(indices.begin(), indices.end());
  return cls.subcollection(indices);
}

void render_csv_svg(const std::string& csv_path, const std::string& svg_path) {
  std::ifstream in(csv_path);
  if (!in) fail("parameter-error", "cannot open '" + csv_path + "' for reading");
  std::vector<double> ys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t last_comma = line.find_last_of(',');
    if (last_comma == std::string::npos) continue;
    try {
      ys.push_back(std::stod(line.substr(last_comma + 1)));
    } catch (const std::exception&) {
      continue;  // header or text column
    }
  }
  std::ofstream out(svg_path);
  if (!out) fail("parameter-error", "cannot open '" + svg_path + "' for writing");
  const double width = 640.0, height = 360.0, margin = 40.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  if (!ys.empty()) {
    double lo = ys[0], hi = ys[0];
    for (double y : ys) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    if (hi == lo) hi = lo + 1.0;
    out << "<polyline fill=\"none\" stroke=\"black\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double px =
          margin + (width - 2 * margin) * static_cast<double>(i) /
                       std::max<std::size_t>(1, ys.size() - 1);
      const double py = height - margin - (height - 2 * margin) * (ys[i] - lo) / (hi - lo);
      out << px << "," << py << " ";
    }
    out << "\"/>\n";
  }
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
      << "\" height=\"" << height - 2 * margin
      << "\" fill=\"none\" stroke=\"gray\"/>\n</svg>\n";
}

}  // namespace bilintf

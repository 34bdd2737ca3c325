#include "nino/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "nino/path_sim.hpp"
#include "nino/transport.hpp"

namespace nino {

namespace {

// 17 significant digits: enough for any double to round-trip through text.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

// Line-oriented reader that skips blank lines and full-line `#` comments and
// tracks the physical line number for error messages.
struct LineReader {
  std::istream& in;
  std::string name;
  int line_no = 0;

  bool next(std::string& line) {
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_no;
      const size_t b = raw.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      if (raw[b] == '#') continue;
      const size_t e = raw.find_last_not_of(" \t\r");
      line = raw.substr(b, e - b + 1);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(name + ":" + std::to_string(line_no) + ": " + msg);
  }

  std::vector<std::string> expect(const std::string& what, int count) {
    std::string line;
    if (!next(line)) throw DataError(name + ": unexpected end of file, expected " + what);
    auto toks = split_ws(line);
    if (static_cast<int>(toks.size()) != count)
      fail("expected " + what + " (" + std::to_string(count) + " tokens), found " +
           std::to_string(toks.size()));
    return toks;
  }
};

double parse_double(const LineReader& r, const std::string& tok) {
  const char* c = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(c, &end);
  if (end != c + tok.size()) r.fail("malformed number '" + tok + "'");
  if (!std::isfinite(v)) r.fail("non-finite value '" + tok + "'");
  return v;
}

long long parse_int(const LineReader& r, const std::string& tok) {
  const char* c = tok.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(c, &end, 10);
  if (end != c + tok.size()) r.fail("malformed integer '" + tok + "'");
  return v;
}

uint64_t parse_uint(const LineReader& r, const std::string& tok) {
  const char* c = tok.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(c, &end, 10);
  if (end != c + tok.size() || tok.find('-') != std::string::npos)
    r.fail("malformed unsigned integer '" + tok + "'");
  return v;
}

// Shared "magic version" header line check with a distinct message for a
// recognized magic at an unsupported version.
void expect_header(LineReader& r, const std::string& magic) {
  std::string line;
  if (!r.next(line))
    throw DataError(r.name + ": empty file, expected `" + magic + " 1` header");
  auto toks = split_ws(line);
  if (toks.empty() || toks[0] != magic) r.fail("not a " + magic + " file (header `" + line + "`)");
  if (toks.size() != 2 || toks[1] != "1")
    r.fail("unsupported " + magic + " version `" + (toks.size() > 1 ? toks[1] : "") +
           "` (expected 1)");
}

// One row of exactly nx values. `rows_expected`/`rows_read` feed the
// truncation message required for short files.
Eigen::VectorXd read_value_row(LineReader& r, int nx, long long rows_expected,
                               long long rows_read) {
  std::string line;
  if (!r.next(line))
    throw DataError(r.name + ": truncated file: expected " + std::to_string(rows_expected) +
                    " value rows, found " + std::to_string(rows_read));
  auto toks = split_ws(line);
  if (static_cast<int>(toks.size()) != nx)
    r.fail("expected " + std::to_string(nx) + " values, found " + std::to_string(toks.size()));
  Eigen::VectorXd row(nx);
  for (int i = 0; i < nx; ++i) row[i] = parse_double(r, toks[i]);
  return row;
}

struct SeriesHeader {
  Grid grid;
  long long nt = 0;
  double dt = 0.0, t0 = 0.0;
};

SeriesHeader read_series_header(LineReader& r, const std::string& magic) {
  expect_header(r, magic);
  auto dims = r.expect("`nx ny`", 2);
  const long long nx = parse_int(r, dims[0]);
  const long long ny = parse_int(r, dims[1]);
  auto bounds = r.expect("`lon_min lon_max lat_min lat_max`", 4);
  auto tline = r.expect("`nt dt_days t0_days`", 3);
  SeriesHeader h;
  try {
    h.grid = Grid(static_cast<int>(nx), static_cast<int>(ny), parse_double(r, bounds[0]),
                  parse_double(r, bounds[1]), parse_double(r, bounds[2]),
                  parse_double(r, bounds[3]));
  } catch (const DataError& e) {
    r.fail(e.what());
  }
  h.nt = parse_int(r, tline[0]);
  h.dt = parse_double(r, tline[1]);
  h.t0 = parse_double(r, tline[2]);
  if (h.nt < 1) r.fail("need at least one time slice, got nt = " + std::to_string(h.nt));
  return h;
}

void write_series_header(std::ostream& out, const std::string& magic, const Grid& g, long long nt,
                         double dt, double t0) {
  out << magic << " 1\n";
  out << g.nx << ' ' << g.ny << '\n';
  out << fmt(g.lon_min) << ' ' << fmt(g.lon_max) << ' ' << fmt(g.lat_min) << ' ' << fmt(g.lat_max)
      << '\n';
  out << nt << ' ' << fmt(dt) << ' ' << fmt(t0) << '\n';
}

void write_value_rows(std::ostream& out, const Grid& g, const Eigen::VectorXd& values) {
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i) out << ' ';
      out << fmt(values[g.index(i, j)]);
    }
    out << '\n';
  }
}

void check_no_trailing(LineReader& r, const std::string& what) {
  std::string line;
  if (r.next(line)) r.fail("trailing content after " + what);
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::out | std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

void check_write(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace

// ------------------------------------------------------------------ series

AnomalySeries read_grid_series(std::istream& in, const std::string& name) {
  LineReader r{in, name};
  const SeriesHeader h = read_series_header(r, "ssta-grid");
  const long long rows_expected = h.nt * h.grid.ny;
  Eigen::MatrixXd snaps(h.grid.size(), h.nt);
  long long rows_read = 0;
  for (long long t = 0; t < h.nt; ++t) {
    for (int j = 0; j < h.grid.ny; ++j) {
      snaps.col(t).segment(static_cast<Eigen::Index>(j) * h.grid.nx, h.grid.nx) =
          read_value_row(r, h.grid.nx, rows_expected, rows_read);
      ++rows_read;
    }
  }
  check_no_trailing(r, std::to_string(h.nt) + " snapshots");
  return AnomalySeries(h.grid, h.t0, h.dt, std::move(snaps));
}

AnomalySeries read_grid_series(const std::string& path) {
  auto in = open_in(path);
  return read_grid_series(in, path);
}

void write_grid_series(const AnomalySeries& series, std::ostream& out) {
  write_series_header(out, "ssta-grid", series.grid, series.steps(), series.dt_days,
                      series.t0_days);
  for (int t = 0; t < series.steps(); ++t) {
    out << '\n';
    write_value_rows(out, series.grid, series.snapshots.col(t));
  }
}

void write_grid_series(const AnomalySeries& series, const std::string& path) {
  auto out = open_out(path);
  write_grid_series(series, out);
  check_write(out, path);
}

// ---------------------------------------------------------------- velocity

VelocityField read_velocity_field(std::istream& in, const std::string& name) {
  LineReader r{in, name};
  const SeriesHeader h = read_series_header(r, "ocvel");
  if (h.nt != 1)
    r.fail("steady velocity reader supports a single time slice, got nt = " +
           std::to_string(h.nt));
  const long long rows_expected = 2LL * h.grid.ny;
  Eigen::VectorXd u(h.grid.size()), v(h.grid.size());
  long long rows_read = 0;
  for (Eigen::VectorXd* comp : {&u, &v}) {
    for (int j = 0; j < h.grid.ny; ++j) {
      comp->segment(static_cast<Eigen::Index>(j) * h.grid.nx, h.grid.nx) =
          read_value_row(r, h.grid.nx, rows_expected, rows_read);
      ++rows_read;
    }
  }
  check_no_trailing(r, "the velocity blocks");
  return VelocityField(h.grid, std::move(u), std::move(v));
}

VelocityField read_velocity_field(const std::string& path) {
  auto in = open_in(path);
  return read_velocity_field(in, path);
}

void write_velocity_field(const VelocityField& vel, std::ostream& out) {
  write_series_header(out, "ocvel", vel.grid, 1, 0.0, 0.0);
  out << '\n';
  write_value_rows(out, vel.grid, vel.u_east);
  out << '\n';
  write_value_rows(out, vel.grid, vel.v_north);
}

void write_velocity_field(const VelocityField& vel, const std::string& path) {
  auto out = open_out(path);
  write_velocity_field(vel, out);
  check_write(out, path);
}

// ------------------------------------------------------------ operator set

OperatorSet read_operator_set(std::istream& in, const std::string& name) {
  LineReader r{in, name};
  expect_header(r, "nino-ops");

  auto kind_line = r.expect("`kind <additive|multiplicative|mixed>`", 2);
  if (kind_line[0] != "kind") r.fail("expected `kind <...>`, found `" + kind_line[0] + "`");
  ModelKind kind;
  try {
    kind = model_kind_from_string(kind_line[1]);
  } catch (const DataError& e) {
    r.fail(e.what());
  }

  auto tau_line = r.expect("`tau_days <value>`", 2);
  if (tau_line[0] != "tau_days") r.fail("expected `tau_days <value>`, found `" + tau_line[0] + "`");
  const double tau = parse_double(r, tau_line[1]);

  const std::vector<std::string> known = {"a", "s", "s1", "s2", "basis"};
  std::map<std::string, Eigen::MatrixXd> blocks;
  for (;;) {
    std::string line;
    if (!r.next(line)) throw DataError(name + ": unexpected end of file, expected `end`");
    auto toks = split_ws(line);
    if (toks.size() == 1 && toks[0] == "end") break;
    if (toks.size() != 4 || toks[0] != "matrix")
      r.fail("expected `matrix <name> <rows> <cols>` or `end`, found `" + line + "`");
    const std::string& block = toks[1];
    if (std::find(known.begin(), known.end(), block) == known.end())
      r.fail("unknown matrix block '" + block + "'");
    if (blocks.count(block)) r.fail("duplicate matrix block '" + block + "'");
    const long long rows = parse_int(r, toks[2]);
    const long long cols = parse_int(r, toks[3]);
    if (rows < 1 || cols < 1) r.fail("matrix block '" + block + "' must have positive dimensions");
    Eigen::MatrixXd m(rows, cols);
    for (long long j = 0; j < rows; ++j)
      m.row(j) = read_value_row(r, static_cast<int>(cols), rows, j).transpose();
    blocks[block] = std::move(m);
  }
  check_no_trailing(r, "`end`");

  if (!blocks.count("a")) throw DataError(name + ": missing required matrix block 'a'");
  OperatorSet ops;
  ops.kind = kind;
  ops.a = blocks["a"];
  if (blocks.count("s")) ops.s = blocks["s"];
  if (blocks.count("s1")) ops.s1 = blocks["s1"];
  if (blocks.count("s2")) ops.s2 = blocks["s2"];
  if (blocks.count("basis")) ops.basis = blocks["basis"];
  ops.lag_tau_days = tau;
  try {
    ops.validate();
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
  return ops;
}

OperatorSet read_operator_set(const std::string& path) {
  auto in = open_in(path);
  return read_operator_set(in, path);
}

namespace {

void write_matrix_block(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  if (m.size() == 0) return;
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      if (i) out << ' ';
      out << fmt(m(j, i));
    }
    out << '\n';
  }
}

}  // namespace

void write_operator_set(const OperatorSet& ops, std::ostream& out) {
  ops.validate();
  out << "nino-ops 1\n";
  out << "kind " << to_string(ops.kind) << '\n';
  out << "tau_days " << fmt(ops.lag_tau_days) << '\n';
  const Eigen::MatrixXd a_dense = std::visit(
      [](const auto& m) -> Eigen::MatrixXd { return Eigen::MatrixXd(m); }, ops.a);
  write_matrix_block(out, "a", a_dense);
  write_matrix_block(out, "s", ops.s);
  write_matrix_block(out, "s1", ops.s1);
  write_matrix_block(out, "s2", ops.s2);
  write_matrix_block(out, "basis", ops.basis);
  out << "end\n";
}

void write_operator_set(const OperatorSet& ops, const std::string& path) {
  auto out = open_out(path);
  write_operator_set(ops, out);
  check_write(out, path);
}

// -------------------------------------------------------------------- CSVs

void write_error_report_csv(const ErrorReport& report, std::ostream& out) {
  out << "time_days,err_mean_degC,rel_l2\n";
  for (size_t i = 0; i < report.time_days.size(); ++i)
    out << fmt(report.time_days[i]) << ',' << fmt(report.err_mean[i]) << ','
        << fmt(report.rel_l2[i]) << '\n';
}

void write_error_report_csv(const ErrorReport& report, const std::string& path) {
  auto out = open_out(path);
  write_error_report_csv(report, out);
  check_write(out, path);
}

void write_comparison_csv(const std::vector<std::pair<std::string, ErrorReport>>& labeled,
                          std::ostream& out) {
  out << "method,time_days,err_mean_degC,rel_l2\n";
  for (const auto& [label, report] : labeled)
    for (size_t i = 0; i < report.time_days.size(); ++i)
      out << label << ',' << fmt(report.time_days[i]) << ',' << fmt(report.err_mean[i]) << ','
          << fmt(report.rel_l2[i]) << '\n';
}

void write_comparison_csv(const std::vector<std::pair<std::string, ErrorReport>>& labeled,
                          const std::string& path) {
  auto out = open_out(path);
  write_comparison_csv(labeled, out);
  check_write(out, path);
}

// ----------------------------------------------------------------- heatmaps

void write_field_text(const Field& field, std::ostream& out) {
  const Grid& g = field.grid;
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i) out << ' ';
      out << fmt(field.values[g.index(i, j)]);
    }
    out << '\n';
  }
}

void write_field_text(const Field& field, const std::string& path) {
  auto out = open_out(path);
  write_field_text(field, out);
  check_write(out, path);
}

void write_field_pgm(const Field& field, std::ostream& out) {
  const Grid& g = field.grid;
  const double vmin = field.values.minCoeff();
  const double vmax = field.values.maxCoeff();
  const double span = vmax - vmin;
  out << "P5\n";
  out << "# linear scaling: value_degC = " << fmt(vmin) << " + gray * " << fmt(span / 65535.0)
      << " (gray in 0..65535)\n";
  out << g.nx << ' ' << g.ny << '\n' << 65535 << '\n';
  const double scale = span > 0.0 ? 65535.0 / span : 0.0;
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) {
      const double v = (field.values[g.index(i, j)] - vmin) * scale;
      const long gray = std::lround(std::clamp(v, 0.0, 65535.0));
      const unsigned char hi = static_cast<unsigned char>((gray >> 8) & 0xff);
      const unsigned char lo = static_cast<unsigned char>(gray & 0xff);
      out.put(static_cast<char>(hi));
      out.put(static_cast<char>(lo));
    }
  }
}

void write_field_pgm(const Field& field, const std::string& path) {
  auto out = open_out(path, /*binary=*/true);
  write_field_pgm(field, out);
  check_write(out, path);
}

// ----------------------------------------------------------------- scenario

void ScenarioConfig::validate() const {
  if (velocity_name != "double-gyre" && velocity_name != "zero")
    throw DataError("ScenarioConfig: unknown velocity field '" + velocity_name +
                    "' (expected double-gyre|zero)");
  if (!std::isfinite(velocity_u0_ms)) throw DataError("ScenarioConfig: velocity_u0_ms not finite");
  if (!(gamma_per_day > 0.0))
    throw DataError("ScenarioConfig: gamma_per_day must be > 0 for a stable drift");
  if (!(kernel.q >= 0.0)) throw DataError("ScenarioConfig: kernel_q must be >= 0");
  if (!(kernel.length > 0.0)) throw DataError("ScenarioConfig: kernel_length_deg must be > 0");
  if (kl_modes < 1) throw DataError("ScenarioConfig: kl_modes must be >= 1");
  if (kl_modes > grid.size())
    throw DataError("ScenarioConfig: kl_modes exceeds the grid size");
  if (!(dt_days > 0.0)) throw DataError("ScenarioConfig: dt_days must be > 0");
  if (n_steps < 1) throw DataError("ScenarioConfig: n_steps must be >= 1");
  if (substeps < 1) throw DataError("ScenarioConfig: substeps must be >= 1");
  if (!std::isfinite(init_amplitude))
    throw DataError("ScenarioConfig: init_amplitude_degC not finite");
}

ScenarioConfig parse_scenario_config(std::istream& in, const std::string& name) {
  LineReader r{in, name};
  std::map<std::string, std::pair<std::string, int>> kv;  // key -> (value, line)
  std::string line;
  while (r.next(line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) r.fail("expected `key = value`, found `" + line + "`");
    auto trim = [](std::string s) {
      const size_t b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const size_t e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) r.fail("empty key");
    if (value.empty()) r.fail("empty value for key '" + key + "'");
    if (kv.count(key)) r.fail("duplicate key '" + key + "'");
    kv[key] = {value, r.line_no};
  }

  // Typed extraction; `taken` tracks consumption so leftovers are reported.
  LineReader ref{in, name};  // line numbers restored per lookup below
  auto lookup = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second.first;
  };
  std::map<std::string, bool> taken;
  auto take_double = [&](const std::string& key, double fallback) {
    taken[key] = true;
    const std::string* v = lookup(key);
    if (!v) return fallback;
    ref.line_no = kv[key].second;
    return parse_double(ref, *v);
  };
  auto take_int = [&](const std::string& key, long long fallback, bool required = false) {
    taken[key] = true;
    const std::string* v = lookup(key);
    if (!v) {
      if (required) throw DataError(name + ": missing required config key '" + key + "'");
      return fallback;
    }
    ref.line_no = kv[key].second;
    return parse_int(ref, *v);
  };
  auto take_string = [&](const std::string& key, const std::string& fallback) {
    taken[key] = true;
    const std::string* v = lookup(key);
    return v ? *v : fallback;
  };

  ScenarioConfig cfg;
  const long long nx = take_int("nx", 0, /*required=*/true);
  const long long ny = take_int("ny", 0, /*required=*/true);
  const double lon_min = take_double("lon_min", 160.0);
  const double lon_max = take_double("lon_max", 270.0);
  const double lat_min = take_double("lat_min", -20.0);
  const double lat_max = take_double("lat_max", 20.0);
  try {
    cfg.grid = Grid(static_cast<int>(nx), static_cast<int>(ny), lon_min, lon_max, lat_min, lat_max);
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
  cfg.velocity_name = take_string("velocity", cfg.velocity_name);
  cfg.velocity_u0_ms = take_double("velocity_u0_ms", cfg.velocity_u0_ms);
  cfg.gamma_per_day = take_double("gamma_per_day", cfg.gamma_per_day);
  cfg.kernel.q = take_double("kernel_q", cfg.kernel.q);
  cfg.kernel.length = take_double("kernel_length_deg", cfg.kernel.length);
  cfg.kl_modes = static_cast<int>(take_int("kl_modes", cfg.kl_modes));
  cfg.t0_days = take_double("t0_days", cfg.t0_days);
  cfg.dt_days = take_double("dt_days", cfg.dt_days);
  cfg.n_steps = static_cast<int>(take_int("n_steps", 0, /*required=*/true));
  cfg.substeps = static_cast<int>(take_int("substeps", cfg.substeps));
  cfg.init_amplitude = take_double("init_amplitude_degC", cfg.init_amplitude);
  {
    taken["seed"] = true;
    if (const std::string* v = lookup("seed")) {
      ref.line_no = kv["seed"].second;
      cfg.seed = parse_uint(ref, *v);
    }
  }

  for (const auto& [key, value] : kv)
    if (!taken.count(key))
      throw DataError(name + ":" + std::to_string(value.second) + ": unknown config key '" + key +
                      "'");

  try {
    cfg.validate();
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
  return cfg;
}

ScenarioConfig parse_scenario_config(const std::string& path) {
  auto in = open_in(path);
  return parse_scenario_config(in, path);
}

VelocityField make_velocity(const Grid& g, const std::string& name, double u0_ms) {
  const int n = g.size();
  Eigen::VectorXd u_ms = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v_ms = Eigen::VectorXd::Zero(n);
  if (name == "zero") {
    // quiescent basin
  } else if (name == "double-gyre") {
    const double pi = std::acos(-1.0);
    const double lon_span = g.lon_max - g.lon_min;
    const double lat_span = g.lat_max - g.lat_min;
    for (int j = 0; j < g.ny; ++j) {
      const double zeta = lat_span > 0.0 ? (g.lat(j) - g.lat_min) / lat_span : 0.5;
      for (int i = 0; i < g.nx; ++i) {
        const double xi = (g.lon(i) - g.lon_min) / lon_span;
        const int k = g.index(i, j);
        u_ms[k] = u0_ms * std::sin(pi * xi) * std::cos(pi * zeta);
        v_ms[k] = -u0_ms * std::cos(pi * xi) * std::sin(pi * zeta);
      }
    }
  } else {
    throw DataError("make_velocity: unknown velocity field '" + name +
                    "' (expected double-gyre|zero)");
  }
  return velocity_from_ms(g, u_ms, v_ms);
}

Scenario generate_synthetic_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const Grid& g = cfg.grid;
  const int n = g.size();

  VelocityField vel = make_velocity(g, cfg.velocity_name, cfg.velocity_u0_ms);

  SpMat transport = assemble_transport_operator(vel, BoundaryRule::zero_inflow_dirichlet);
  SpMat id(n, n);
  id.setIdentity();
  SpMat drift = transport - cfg.gamma_per_day * id;
  drift.makeCompressed();
  const double bound = gershgorin_max_real_bound(drift);
  if (bound >= 0.0)
    throw NumericalError("generate_synthetic_scenario: drift stability bound " + fmt(bound) +
                         " >= 0; increase gamma_per_day");

  const KLBasis kl = kl_eigenpairs(g, cfg.kernel, cfg.kl_modes);
  OperatorSet truth;
  truth.kind = ModelKind::additive;
  truth.a = drift;
  truth.s = kl_noise_factor(kl, cfg.kl_modes);
  truth.lag_tau_days = cfg.dt_days;
  truth.validate();

  // Smooth initial anomaly: a Gaussian bump centered in the basin.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double lon_c = 0.5 * (g.lon_min + g.lon_max);
  const double lat_c = 0.5 * (g.lat_min + g.lat_max);
  const double wlon = (g.lon_max - g.lon_min) / 6.0;
  const double wlat = g.ny > 1 ? (g.lat_max - g.lat_min) / 6.0 : 1.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double dlon = (g.lon(i) - lon_c) / wlon;
      const double dlat = wlat > 0.0 ? (g.lat(j) - lat_c) / wlat : 0.0;
      x[g.index(i, j)] = cfg.init_amplitude * std::exp(-0.5 * (dlon * dlon + dlat * dlat));
    }

  const double h = cfg.dt_days / cfg.substeps;
  PathNoise noise(cfg.seed, 0, noise_channels(truth), h);
  Eigen::MatrixXd snaps(n, cfg.n_steps + 1);
  snaps.col(0) = x;
  for (int step = 0; step < cfg.n_steps; ++step) {
    for (int sub = 0; sub < cfg.substeps; ++sub) x = taylor15_step(truth, x, h, noise.next());
    snaps.col(step + 1) = x;
  }

  Scenario out{AnomalySeries(g, cfg.t0_days, cfg.dt_days, std::move(snaps)), std::move(vel),
               std::move(truth)};
  return out;
}

}  // namespace nino

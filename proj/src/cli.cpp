#include "qloc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "qloc/error.hpp"
#include "qloc/fisher.hpp"
#include "qloc/qfi.hpp"
#include "qloc/serialize.hpp"
#include "qloc/spdo_eigen.hpp"

namespace qloc::cli {

namespace {

struct Options {
  double R = 1.0;
  double b = 0.0;
  double r0 = 0.5;
  double phi0 = 0.0;
  double delta0 = 0.05;
  double contrast = 1.0;
  bool hole = false;
  bool exact = false;
  int pert = -1;
  bool lab = false;
  std::string basis = "zernike";
  int pmax = 60;
  int mmax = 20;
  int nmax = 20;
  std::string pps_file;
  int pps_grid = 7;
  int pps_count = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  double tol = 1e-8;
  // sweep
  std::string param;
  double start = 0.0;
  double stop = 0.0;
  int count = 2;
  std::string protocols = "qfi_exact";
  std::optional<double> r0_over_R;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_scene_flags(CLI::App* app, Options& o) {
  app->add_option("--R", o.R, "disk radius (diffraction units)");
  app->add_option("--b", o.b, "background fraction in [0, 1)");
  app->add_option("--r0", o.r0, "radial position of the point or hole");
  app->add_option("--phi0", o.phi0, "azimuth (radians)");
  app->add_option("--delta0", o.delta0, "hole radius");
  app->add_option("--contrast", o.contrast, "hole contrast in (0, 1]");
  app->add_flag("--hole", o.hole, "hole in the disk instead of a point source");
  app->add_option("--out", o.out, "output path (default: stdout)");
  app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--tol", o.tol, "relative tolerance for the quantum-dominance check");
}

void add_basis_flags(CLI::App* app, Options& o) {
  app->add_option("--basis", o.basis, "di, zernike, fb or pps")->check(CLI::IsMember({"di", "zernike", "fb", "pps"}));
  app->add_option("--pmax", o.pmax, "Zernike order cutoff");
  app->add_option("--mmax", o.mmax, "Fourier-Bessel azimuthal cutoff");
  app->add_option("--nmax", o.nmax, "Fourier-Bessel radial cutoff");
  app->add_option("--pps-file", o.pps_file, "PPS locations, one 'x y' pair per line");
  app->add_option("--pps-grid", o.pps_grid, "square PPS grid with spacing 2R/N");
  app->add_option("--pps-count", o.pps_count, "random PPS layout size (needs --seed)");
  app->add_option("--seed", o.seed, "seed for random PPS layouts");
}

SourceDiskScene source_of(const Options& o) {
  SourceDiskScene s{o.R, o.b, o.r0, o.phi0};
  s.validate();
  return s;
}

HoleDiskScene hole_of(const Options& o) {
  HoleDiskScene s{o.R, o.delta0, o.r0, o.phi0, o.contrast};
  s.validate();
  return s;
}

std::vector<Point2> pps_layout(const Options& o, double R) {
  if (!o.pps_file.empty()) return io::read_pps_file(o.pps_file);
  if (o.pps_count > 0) {
    if (!o.seed) throw UsageError("--pps-count needs an explicit --seed");
    return pps_random_layout(R, o.pps_count, *o.seed);
  }
  return pps_square_grid(R, o.pps_grid);
}

// Builds bases once per R.
class BasisCache {
 public:
  explicit BasisCache(const Options& o) : o_(o) {}

  const ModeBasis& get(const std::string& name, double R) {
    if (name == "zernike") {
      if (!z_) z_ = ModeBasis{ZernikeBasis{o_.pmax}};
      return *z_;
    }
    if (name == "fb") {
      if (!fb_) fb_ = ModeBasis{FourierBesselBasis{o_.mmax, o_.nmax}};
      return *fb_;
    }
    auto it = pps_.find(R);
    if (it == pps_.end()) it = pps_.emplace(R, ModeBasis{pps_basis(R, pps_layout(o_, R))}).first;
    return it->second;
  }

 private:
  const Options& o_;
  std::optional<ModeBasis> z_, fb_;
  std::map<double, ModeBasis> pps_;
};

struct Quantum {
  SymMatrix2 H;
  QfiResult detail;
};

Quantum quantum_of(const Options& o) {
  if (o.hole) {
    const HoleDiskScene s = hole_of(o);
    const EigenSystem disk = disk_eigensystem(s.R);
    auto r = qfi_hole(disk, s);
    return {r.H, r};
  }
  const SourceDiskScene s = source_of(o);
  const EigenSystem es = solve_eigensystem(s);
  auto r = qfi_exact_source(es, s);
  return {r.H, r};
}

SymMatrix2 classical_of(const Options& o, const std::string& protocol, BasisCache& cache) {
  if (protocol == "di") {
    return o.hole ? fi_direct_imaging(hole_of(o)) : fi_direct_imaging(source_of(o));
  }
  const ModeBasis& basis = cache.get(protocol, o.R);
  return o.hole ? fi_modes(hole_of(o), basis) : fi_modes(source_of(o), basis);
}

SymMatrix2 perturbative_of(const Options& o, int order) {
  if (o.hole) throw UsageError("the perturbative expansion applies to point sources only");
  RhoBOptions ro;
  ro.route = RhoBRoute::Spectral;
  return qfi_perturbative_source(source_of(o), order, ro);
}

// A zero diagonal entry with no coupling reports an infinite bound for that
// coordinate instead of failing the whole record.
CramerRao bounds_of(const SymMatrix2& m) {
  try {
    return crb_from_info(m);
  } catch (const SingularMatrix&) {
    if (std::abs(m.a12) > 1e-12 * std::max(std::abs(m.a11), std::abs(m.a22))) throw;
    const double inf = std::numeric_limits<double>::infinity();
    return {m.a11 > 0.0 ? 1.0 / m.a11 : inf, m.a22 > 0.0 ? 1.0 / m.a22 : inf};
  }
}

void emit(const Options& o, const io::Table& t, std::ostream& out) {
  std::ofstream file;
  std::ostream* os = &out;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) throw UsageError("cannot write " + o.out);
    os = &file;
  }
  if (o.format == "json") io::write_json(t, *os);
  else io::write_csv(t, *os);
}

void push_matrix(std::vector<std::string>& cols, std::vector<io::Cell>& row, const std::string& prefix,
                 const SymMatrix2& m) {
  cols.insert(cols.end(), {prefix + "_11", prefix + "_22", prefix + "_12"});
  row.insert(row.end(), {m.a11, m.a22, m.a12});
}

std::vector<std::pair<std::string, std::string>> scene_meta(const Options& o, const char* command) {
  std::vector<std::pair<std::string, std::string>> meta{{"command", command}, {"units", "diffraction"}};
  meta.emplace_back("scene", o.hole ? "hole" : "source");
  if (o.seed) meta.emplace_back("seed", std::to_string(*o.seed));
  return meta;
}

void scene_columns(const Options& o, std::vector<std::string>& cols, std::vector<io::Cell>& row) {
  cols.insert(cols.end(), {"R", "r0", "phi0"});
  row.insert(row.end(), {o.R, o.r0, o.phi0});
  if (o.hole) {
    cols.insert(cols.end(), {"delta0", "contrast", "eps"});
    row.insert(row.end(), {o.delta0, o.contrast, hole_of(o).epsilon()});
  } else {
    cols.push_back("b");
    row.push_back(o.b);
  }
}

int cmd_qfi(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.exact && o.pert >= 0) throw UsageError("--exact and --pert are exclusive");
  io::Table t;
  t.meta = scene_meta(o, "qfi");
  std::vector<io::Cell> row;
  scene_columns(o, t.columns, row);
  SymMatrix2 H;
  if (o.pert >= 0) {
    H = perturbative_of(o, o.pert);
    push_matrix(t.columns, row, "H", H);
    t.columns.push_back("order");
    row.push_back(static_cast<long long>(o.pert));
  } else {
    const Quantum q = quantum_of(o);
    H = q.H;
    push_matrix(t.columns, row, "H", H);
    t.columns.insert(t.columns.end(), {"eigensum", "null_11", "null_22", "m_max", "n_states"});
    row.insert(row.end(), {q.detail.eigensum, q.detail.null_term.a11, q.detail.null_term.a22,
                           static_cast<long long>(q.detail.m_max), static_cast<long long>(q.detail.n_states)});
    if (q.detail.null_warning) err << "warning: null-space term is not negligible\n";
  }
  if (o.lab) push_matrix(t.columns, row, "H_lab", rotate_to_lab(H, o.phi0));
  t.rows.push_back(std::move(row));
  emit(o, t, out);
  return kOk;
}

int cmd_crb(const Options& o, std::ostream& out, std::ostream& err) {
  BasisCache cache(o);
  const Quantum q = quantum_of(o);
  const SymMatrix2 F = classical_of(o, o.basis, cache);
  const CramerRao qc = bounds_of(q.H);
  const CramerRao cc = bounds_of(F);
  io::Table t;
  t.meta = scene_meta(o, "crb");
  t.meta.emplace_back("basis", o.basis);
  std::vector<io::Cell> row;
  scene_columns(o, t.columns, row);
  push_matrix(t.columns, row, "FI", F);
  push_matrix(t.columns, row, "QFI", q.H);
  t.columns.insert(t.columns.end(), {"CRB_r", "CRB_t", "QCRB_r", "QCRB_t", "ratio_r", "ratio_t"});
  row.insert(row.end(), {cc.var_r, cc.var_t, qc.var_r, qc.var_t, cc.var_r / qc.var_r, cc.var_t / qc.var_t});
  t.rows.push_back(std::move(row));
  emit(o, t, out);
  if (cc.var_r < qc.var_r * (1.0 - o.tol) || cc.var_t < qc.var_t * (1.0 - o.tol)) {
    err << "error: classical bound below the quantum bound (quantum dominance violated)\n";
    return kInvariant;
  }
  return kOk;
}

std::vector<std::string> split_protocols(const std::string& s) {
  static const std::vector<std::string> known{"qfi_exact", "qfi_pert", "di", "zernike", "fb", "pps"};
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (std::find(known.begin(), known.end(), item) == known.end())
      throw UsageError("unknown protocol '" + item + "'");
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(item);
  }
  if (out.empty()) throw UsageError("no protocols given");
  return out;
}

Options point_options(const Options& base, double v) {
  Options o = base;
  if (o.param == "b") {
    o.b = v;
  } else if (o.param == "r0_over_R") {
    o.r0 = v * o.R;
  } else if (o.param == "R") {
    o.R = v;
    if (o.r0_over_R) o.r0 = *o.r0_over_R * v;
  } else {
    o.hole = true;
    if (!(v > 0.0)) throw InvalidArgument("eps must be positive");
    o.delta0 = o.R * std::sqrt(v / o.contrast);
  }
  if (o.param != "R" && o.param != "r0_over_R" && o.r0_over_R) o.r0 = *o.r0_over_R * o.R;
  if (o.hole) hole_of(o);
  else source_of(o);
  return o;
}

int cmd_sweep(const Options& base, std::ostream& out, std::ostream& err) {
  if (base.count < 2) throw UsageError("--count must be at least 2");
  const auto protocols = split_protocols(base.protocols);
  const int order = base.pert >= 0 ? base.pert : 2;

  std::vector<double> grid(static_cast<std::size_t>(base.count));
  for (int k = 0; k < base.count; ++k)
    grid[k] = k == base.count - 1 ? base.stop : base.start + (base.stop - base.start) * k / (base.count - 1);
  std::vector<Options> points;
  for (double v : grid) {
    try {
      points.push_back(point_options(base, v));
    } catch (const InvalidArgument& e) {
      throw UsageError("sweep point " + io::format_number(v) + ": " + e.what());
    }
  }
  const bool hole = points.front().hole;

  io::Table t;
  t.meta = scene_meta(points.front(), "sweep");
  t.meta.emplace_back("param", base.param);
  t.meta.emplace_back("protocols", base.protocols);
  t.columns = {base.param, "R", "r0", "phi0"};
  if (hole) t.columns.insert(t.columns.end(), {"delta0", "contrast", "eps"});
  else t.columns.push_back("b");
  for (const auto& p : protocols) {
    for (const char* suffix : {"_11", "_22", "_12", "_crb_r", "_crb_t"}) t.columns.push_back(p + suffix);
    if (p == "qfi_exact") t.columns.insert(t.columns.end(), {"eigensum", "m_max"});
  }
  t.columns.push_back("error");

  BasisCache cache(base);
  int failures = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Options& o = points[k];
    std::vector<io::Cell> row{grid[k], o.R, o.r0, o.phi0};
    if (hole) row.insert(row.end(), {o.delta0, o.contrast, hole_of(o).epsilon()});
    else row.push_back(o.b);
    const std::size_t fixed = row.size();
    try {
      for (const auto& p : protocols) {
        SymMatrix2 m;
        std::optional<QfiResult> detail;
        if (p == "qfi_exact") {
          const Quantum q = quantum_of(o);
          m = q.H;
          detail = q.detail;
        } else if (p == "qfi_pert") {
          m = perturbative_of(o, order);
        } else {
          m = classical_of(o, p, cache);
        }
        const CramerRao c = bounds_of(m);
        row.insert(row.end(), {m.a11, m.a22, m.a12, c.var_r, c.var_t});
        if (detail) row.insert(row.end(), {detail->eigensum, static_cast<long long>(detail->m_max)});
      }
      row.emplace_back(std::monostate{});
    } catch (const std::exception& e) {
      ++failures;
      row.resize(fixed);
      row.resize(t.columns.size() - 1);
      row.emplace_back(std::string(e.what()));
      err << "sweep point " << k << " failed: " << e.what() << '\n';
    }
    t.rows.push_back(std::move(row));
  }
  emit(base, t, out);
  return failures ? kNumerical : kOk;
}

int cmd_eigen(const Options& o, std::ostream& out, std::ostream& err) {
  const EigenSystem es = o.hole ? disk_eigensystem(o.R) : solve_eigensystem(source_of(o));
  if (o.out.empty()) {
    io::dump_eigensystem(es, out);
  } else {
    std::ofstream f(o.out);
    if (!f) throw UsageError("cannot write " + o.out);
    io::dump_eigensystem(es, f);
    out << "eigensum=" << io::format_number(es.eigensum) << "\nretained=" << es.n_retained() << '\n';
  }
  (void)err;
  return kOk;
}

// Expands "--config PATH" into flags placed right after the subcommand, so
// explicit flags given later win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw UsageError("--config needs a path");
      path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
    }
  }
  if (path.empty()) return rest;
  io::KeyValues kv;
  try {
    kv = io::read_key_values(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> injected;
  for (const auto& [key, value] : kv) {
    std::string flag = "--" + key;
    std::replace(flag.begin() + 2, flag.end(), '_', '-');
    if (key == "hole" || key == "exact" || key == "lab") {
      if (value == "true" || value == "1" || value == "yes") injected.push_back(flag);
      continue;
    }
    injected.push_back(flag);
    injected.push_back(value);
  }
  if (rest.empty()) return injected;
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Fisher information and Cramer-Rao bounds for point and hole localization in a disk"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto* qfi = app.add_subcommand("qfi", "quantum Fisher information");
  add_scene_flags(qfi, o);
  qfi->add_flag("--exact", o.exact, "exact spectral QFI (default)");
  qfi->add_option("--pert", o.pert, "perturbative QFI to the given order in b/(1-b)");
  qfi->add_flag("--lab", o.lab, "also print the lab-frame matrix");

  auto* crb = app.add_subcommand("crb", "classical and quantum Cramer-Rao bounds");
  add_scene_flags(crb, o);
  add_basis_flags(crb, o);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep to CSV or JSON");
  add_scene_flags(sweep, o);
  add_basis_flags(sweep, o);
  sweep->add_option("--pert", o.pert, "perturbative order for qfi_pert");
  sweep->add_option("--param", o.param, "b, r0_over_R, R or eps")
      ->required()
      ->check(CLI::IsMember({"b", "r0_over_R", "R", "eps"}));
  sweep->add_option("--start", o.start)->required();
  sweep->add_option("--stop", o.stop)->required();
  sweep->add_option("--count", o.count);
  sweep->add_option("--protocols", o.protocols, "comma list of qfi_exact, qfi_pert, di, zernike, fb, pps");
  sweep->add_option("--r0-over-R", o.r0_over_R, "keep r0 at this fraction of R");

  auto* eigen = app.add_subcommand("eigen", "dump the SPDO eigensystem");
  add_scene_flags(eigen, o);

  try {
    std::vector<std::string> argv = expand_config(args);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*qfi) return cmd_qfi(o, out, err);
    if (*crb) return cmd_crb(o, out, err);
    if (*sweep) return cmd_sweep(o, out, err);
    return cmd_eigen(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const DegenerateGeometry& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace qloc::cli

#include "qloc/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qloc/error.hpp"

namespace qloc::io {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("value of '" + key + "' is not a number: " + v);
  }
  if (used != v.size()) throw InvalidArgument("value of '" + key + "' is not a number: " + v);
  return out;
}

void take(const KeyValues& kv, const char* key, double& dst) {
  if (auto it = kv.find(key); it != kv.end()) dst = parse_double(key, it->second);
}

std::string exact(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("line " + std::to_string(no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument("line " + std::to_string(no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) { return parse_key_values(slurp(path)); }

SourceDiskScene source_scene_from(const KeyValues& kv) {
  SourceDiskScene s;
  take(kv, "R", s.R);
  take(kv, "b", s.b);
  take(kv, "r0", s.r0);
  take(kv, "phi0", s.phi0);
  s.validate();
  return s;
}

HoleDiskScene hole_scene_from(const KeyValues& kv) {
  HoleDiskScene s;
  take(kv, "R", s.R);
  take(kv, "r0", s.r0);
  take(kv, "phi0", s.phi0);
  take(kv, "delta0", s.delta0);
  take(kv, "contrast", s.contrast);
  s.validate();
  return s;
}

std::string to_key_values(const SourceDiskScene& s) {
  return "R=" + exact(s.R) + "\nb=" + exact(s.b) + "\nr0=" + exact(s.r0) + "\nphi0=" + exact(s.phi0) + "\n";
}

std::string to_key_values(const HoleDiskScene& s) {
  return "R=" + exact(s.R) + "\nr0=" + exact(s.r0) + "\nphi0=" + exact(s.phi0) + "\ndelta0=" + exact(s.delta0) +
         "\ncontrast=" + exact(s.contrast) + "\n";
}

std::vector<Point2> parse_pps_points(const std::string& text) {
  std::vector<Point2> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Point2 p;
    std::string extra;
    if (!(ls >> p.x >> p.y) || (ls >> extra))
      throw InvalidArgument("PPS file line " + std::to_string(no) + ": expected 'x y'");
    out.push_back(p);
  }
  return out;
}

std::vector<Point2> read_pps_file(const std::filesystem::path& path) { return parse_pps_points(slurp(path)); }

void dump_eigensystem(const EigenSystem& es, std::ostream& os) {
  os << "# eigensystem\n";
  os << "R=" << format_number(es.R) << "\nb=" << format_number(es.b) << "\nr0=" << format_number(es.r0)
     << "\nphi0=" << format_number(es.phi0) << "\nm_max=" << es.m_max << "\ndimension=" << es.dimension
     << "\neigensum=" << format_number(es.eigensum) << "\nlambda_floor=" << format_number(es.lambda_floor)
     << "\nretained=" << es.n_retained() << "\n";
  for (std::size_t i = 0; i < es.n_retained(); ++i) {
    const bool even = es.parity[i] == Parity::Even;
    const auto& basis = even ? es.even_basis : es.odd_basis;
    const auto& vecs = even ? es.even_vectors : es.odd_vectors;
    os << "\n[state " << i << "]\nlambda=" << format_number(es.eigenvalues[i]) << "\nparity=" << parity_name(es.parity[i])
       << "\n# m n v\n";
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const double v = vecs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(es.column[i]));
      if (std::abs(v) < 1e-15) continue;
      os << basis[k].m << ' ' << basis[k].n << ' ' << format_number(v) << '\n';
    }
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

double rounded(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_number(v).c_str(), nullptr);
}

namespace {

std::string csv_cell(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return "";
  if (auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

nlohmann::json json_cell(const Cell& c) {
  if (auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return nullptr;
    return rounded(*d);
  }
  if (auto* i = std::get_if<long long>(&c)) return *i;
  if (auto* s = std::get_if<std::string>(&c)) return *s;
  return nullptr;
}

}  // namespace

void write_csv(const Table& t, std::ostream& os) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << (k < row.size() ? csv_cell(row[k]) : "");
    os << '\n';
  }
}

void write_json(const Table& t, std::ostream& os) {
  nlohmann::ordered_json doc;
  doc["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : t.meta) doc["meta"][k] = v;
  doc["columns"] = t.columns;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < t.columns.size(); ++k) r[t.columns[k]] = k < row.size() ? json_cell(row[k]) : nullptr;
    doc["rows"].push_back(std::move(r));
  }
  os << doc.dump(2) << '\n';
}

}  // namespace qloc::io

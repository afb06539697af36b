#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "qloc/fisher.hpp"
#include "qloc/scene.hpp"
#include "qloc/spdo_eigen.hpp"

namespace qloc::io {

// Flat "key = value" text. Blank lines and lines starting with '#' are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

SourceDiskScene source_scene_from(const KeyValues& kv);
HoleDiskScene hole_scene_from(const KeyValues& kv);
std::string to_key_values(const SourceDiskScene& s);
std::string to_key_values(const HoleDiskScene& s);

// One "x y" pair per line; '#' comments allowed.
std::vector<Point2> parse_pps_points(const std::string& text);
std::vector<Point2> read_pps_file(const std::filesystem::path& path);

// Structured text record of an eigensystem.
void dump_eigensystem(const EigenSystem& es, std::ostream& os);

// %.15g, with "nan"/"inf" spelled out.
std::string format_number(double v);
// The double a reader recovers from format_number(v).
double rounded(double v);

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> meta;
};

void write_csv(const Table& t, std::ostream& os);
void write_json(const Table& t, std::ostream& os);

}  // namespace qloc::io

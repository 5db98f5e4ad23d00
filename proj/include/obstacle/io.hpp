#pragma once

#include "obstacle/blowup.hpp"
#include "obstacle/free_boundary.hpp"
#include "obstacle/functionals.hpp"
#include "obstacle/obstacle_solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace obstacle {

using Json = nlohmann::ordered_json;

/// Identification attached to every output file. No timestamps, so reruns
/// are byte-identical.
struct Provenance {
  std::string tool = "obstacle_lab";
  std::string version;
  std::string scenario;
  std::string config_hash;  // 16 hex digits
  std::uint64_t seed = 0;
  Json grid;        // nodes, spacing, domain
  Json tolerances;  // solver and analysis tolerances
  Json to_json() const;
};

std::string library_version();

/// FNV-1a 64 of the compact dump of a JSON value, as 16 hex digits.
std::string config_hash(const Json& config);

Json grid_json(const Grid& grid);

/// Column-oriented table; cells are numbers or strings.
struct Table {
  using Cell = std::variant<double, long long, std::string>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  std::string to_csv(const Provenance* provenance = nullptr) const;
  Json to_json(const Provenance* provenance = nullptr) const;
};

enum class TableFormat { Csv, Json };
TableFormat parse_table_format(const std::string& name);

/// Writes `<stem>.csv` or `<stem>.json`; returns the path written.
std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& stem,
                                  const Table& table, TableFormat format,
                                  const Provenance& provenance);

/// Shortest round-trip representation of a double.
std::string format_number(double value);

void write_text(const std::filesystem::path& path, const std::string& text);

// Solutions: raw little-endian float64 nodal values (axis 0 fastest) plus a
// JSON header with the grid and solver statistics.
void write_solution(const std::filesystem::path& dir, const ObstacleSolution& sol,
                    const Provenance& provenance);
struct StoredSolution {
  Grid grid;
  std::vector<double> u;
  Json header;
};
StoredSolution read_solution(const std::filesystem::path& dir);

// Tables for the standard artifacts.
Table slice_table(const ObstacleSolution& sol, const ScalarFn* exact = nullptr);
Table gamma_table(const FreeBoundarySet& fbs, const GrowthReport* growth = nullptr);
Table weiss_table(const MonotonicityTrace& trace, const DriftVerdict* verdict = nullptr);
Table monneau_table(const MonotonicityTrace& trace, const DriftVerdict* verdict = nullptr);
Table strata_table(const StratificationReport& report);

// SVG output.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};
std::string line_plot_svg(const std::vector<Series>& series, const PlotOptions& opts,
                          const Provenance* provenance = nullptr);

struct Marker {
  double x = 0.0;
  double y = 0.0;
  std::string color;
};
/// Heatmap of a 2D nodal field as an embedded PNG, with optional point markers.
std::string heatmap_svg(const Grid& grid, const std::vector<double>& values,
                        const std::vector<Marker>& markers, const std::string& title,
                        const Provenance* provenance = nullptr);

/// RGB PNG (8-bit, no interlace), compressed with zlib.
std::vector<std::uint8_t> encode_png(int width, int height, const std::vector<std::uint8_t>& rgb);
std::string base64_encode(const std::vector<std::uint8_t>& bytes);

/// Colour for a stratification status (and stratum for singular points).
std::string strata_color(StrataEntry::Status status, int stratum);

}  // namespace obstacle

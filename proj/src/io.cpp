#include "obstacle/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace obstacle {

namespace fs = std::filesystem;

#ifndef OBSTACLE_VERSION
#define OBSTACLE_VERSION "0.0.0"
#endif

std::string library_version() { return OBSTACLE_VERSION; }

Json Provenance::to_json() const {
  Json j;
  j["tool"] = tool;
  j["version"] = version.empty() ? library_version() : version;
  j["scenario"] = scenario;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["grid"] = grid;
  j["tolerances"] = tolerances;
  return j;
}

std::string config_hash(const Json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json grid_json(const Grid& grid) {
  Json j;
  j["dim"] = grid.dim();
  Json nodes = Json::array(), spacing = Json::array(), lower = Json::array(), upper = Json::array();
  for (int a = 0; a < grid.dim(); ++a) {
    nodes.push_back(grid.nodes(a));
    spacing.push_back(grid.spacing(a));
    lower.push_back(grid.domain().lower(a));
    upper.push_back(grid.domain().upper(a));
  }
  j["nodes"] = nodes;
  j["spacing"] = spacing;
  j["lower"] = lower;
  j["upper"] = upper;
  return j;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw LabError(ErrorCode::InvalidArgument, "table row width does not match the header");
  }
  rows.push_back(std::move(row));
}

namespace {

std::string cell_text(const Table::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const std::string& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

Json cell_json(const Table::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return format_number(*d);
    return *d;
  }
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace

std::string Table::to_csv(const Provenance* provenance) const {
  std::string out;
  if (provenance) out += "# provenance: " + provenance->to_json().dump() + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      out += cell_text(row[c]);
    }
    out += "\n";
  }
  return out;
}

Json Table::to_json(const Provenance* provenance) const {
  Json j;
  if (provenance) j["provenance"] = provenance->to_json();
  j["columns"] = columns;
  Json rs = Json::array();
  for (const auto& row : rows) {
    Json r = Json::array();
    for (const auto& c : row) r.push_back(cell_json(c));
    rs.push_back(std::move(r));
  }
  j["rows"] = std::move(rs);
  return j;
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  throw LabError(ErrorCode::ConfigError, "format: expected csv or json, got '" + name + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

fs::path write_table(const fs::path& dir, const std::string& stem, const Table& table,
                     TableFormat format, const Provenance& provenance) {
  if (format == TableFormat::Csv) {
    const fs::path p = dir / (stem + ".csv");
    write_text(p, table.to_csv(&provenance));
    return p;
  }
  const fs::path p = dir / (stem + ".json");
  write_text(p, table.to_json(&provenance).dump(1) + "\n");
  return p;
}

void write_solution(const fs::path& dir, const ObstacleSolution& sol, const Provenance& provenance) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "solution.bin", std::ios::binary);
    if (!out) throw LabError(ErrorCode::InvalidArgument, "cannot write solution.bin");
    for (double v : sol.u) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      unsigned char b[8];
      for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
  Json j;
  j["provenance"] = provenance.to_json();
  j["format"] = "float64 little-endian, axis 0 fastest";
  j["grid"] = grid_json(sol.grid);
  j["values"] = sol.u.size();
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["tol"] = sol.tol;
  j["omega"] = sol.omega;
  j["energy"] = sol.energy;
  j["projected_residual"] = sol.projected_residual;
  j["positivity_threshold"] = sol.positivity_threshold;
  write_text(dir / "solution.json", j.dump(1) + "\n");
}

StoredSolution read_solution(const fs::path& dir) {
  std::ifstream hin(dir / "solution.json");
  if (!hin) throw LabError(ErrorCode::InvalidArgument, "missing solution.json in " + dir.string());
  Json header = Json::parse(hin);
  const Json& g = header.at("grid");
  const int dim = g.at("dim");
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  std::array<int, 3> nodes{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    lo[a] = g.at("lower")[a];
    hi[a] = g.at("upper")[a];
    nodes[a] = g.at("nodes")[a];
  }
  Grid grid(Domain(dim, lo, hi), nodes);
  std::ifstream in(dir / "solution.bin", std::ios::binary);
  if (!in) throw LabError(ErrorCode::InvalidArgument, "missing solution.bin in " + dir.string());
  std::vector<double> u(grid.size());
  for (double& v : u) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
      throw LabError(ErrorCode::InvalidArgument, "solution.bin is shorter than the grid");
    }
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    v = std::bit_cast<double>(bits);
  }
  return {std::move(grid), std::move(u), std::move(header)};
}

Table slice_table(const ObstacleSolution& sol, const ScalarFn* exact) {
  const Grid& grid = sol.grid;
  const int n = grid.dim();
  Table t;
  t.columns = {"axis"};
  for (int a = 0; a < n; ++a) t.columns.push_back("x" + std::to_string(a));
  t.columns.push_back("u");
  if (exact) t.columns.push_back("exact");
  // Midlines through the centre node, one per axis.
  std::array<int, 3> mid{0, 0, 0};
  for (int a = 0; a < n; ++a) mid[a] = grid.nodes(a) / 2;
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < grid.nodes(a); ++i) {
      std::array<int, 3> idx = mid;
      idx[a] = i;
      const std::size_t k = grid.linear_index(idx);
      const Vec x = grid.point(k);
      std::vector<Table::Cell> row{static_cast<long long>(a)};
      for (int b = 0; b < n; ++b) row.emplace_back(x[b]);
      row.emplace_back(sol.u[k]);
      if (exact) row.emplace_back((*exact)(x));
      t.add_row(std::move(row));
    }
  }
  return t;
}

Table gamma_table(const FreeBoundarySet& fbs, const GrowthReport* growth) {
  const int n = fbs.grid.dim();
  Table t;
  for (int a = 0; a < n; ++a) t.columns.push_back("x" + std::to_string(a));
  for (int a = 0; a < n; ++a) t.columns.push_back("n" + std::to_string(a));
  t.columns.push_back("isolated");
  t.columns.push_back("merged");
  t.columns.push_back("growth_ratio");
  std::vector<double> ratio(fbs.gamma.size(), std::numeric_limits<double>::quiet_NaN());
  if (growth) {
    for (std::size_t k = 0; k < growth->points.size(); ++k) ratio[growth->points[k]] = growth->point_ratio[k];
  }
  for (std::size_t i = 0; i < fbs.gamma.size(); ++i) {
    const GammaPoint& g = fbs.gamma[i];
    std::vector<Table::Cell> row;
    for (int a = 0; a < n; ++a) row.emplace_back(g.x[a]);
    for (int a = 0; a < n; ++a) row.emplace_back(g.normal.size() ? g.normal[a] : 0.0);
    row.emplace_back(static_cast<long long>(g.isolated));
    row.emplace_back(static_cast<long long>(g.merged));
    row.emplace_back(ratio[i]);
    t.add_row(std::move(row));
  }
  return t;
}

Table weiss_table(const MonotonicityTrace& trace, const DriftVerdict* verdict) {
  Table t;
  t.columns = {"r", "energy", "mass", "phi"};
  if (verdict) t.columns.push_back("compensated");
  for (std::size_t k = 0; k < trace.radii.size(); ++k) {
    std::vector<Table::Cell> row{trace.radii[k], trace.energy[k], trace.mass[k], trace.phi[k]};
    if (verdict) row.emplace_back(k < verdict->compensated.size() ? verdict->compensated[k] : 0.0);
    t.add_row(std::move(row));
  }
  return t;
}

Table monneau_table(const MonotonicityTrace& trace, const DriftVerdict* verdict) {
  Table t;
  t.columns = {"r", "monneau"};
  if (verdict) t.columns.push_back("compensated");
  for (std::size_t k = 0; k < trace.radii.size() && k < trace.monneau.size(); ++k) {
    std::vector<Table::Cell> row{trace.radii[k], trace.monneau[k]};
    if (verdict) row.emplace_back(k < verdict->compensated.size() ? verdict->compensated[k] : 0.0);
    t.add_row(std::move(row));
  }
  return t;
}

Table strata_table(const StratificationReport& report) {
  int n = 0;
  for (const auto& e : report.entries) n = std::max(n, static_cast<int>(e.x.size()));
  Table t;
  t.columns = {"gamma_index"};
  for (int a = 0; a < n; ++a) t.columns.push_back("x" + std::to_string(a));
  t.columns.insert(t.columns.end(), {"label", "phi0", "stratum"});
  for (int a = 0; a < n; ++a) t.columns.push_back("normal" + std::to_string(a));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) t.columns.push_back("b" + std::to_string(a) + std::to_string(b));
  t.columns.push_back("note");
  for (const auto& e : report.entries) {
    std::vector<Table::Cell> row{static_cast<long long>(e.gamma_index)};
    for (int a = 0; a < n; ++a) row.emplace_back(e.x[a]);
    row.emplace_back(to_string(e.status));
    row.emplace_back(e.phi0);
    row.emplace_back(static_cast<long long>(e.stratum));
    for (int a = 0; a < n; ++a) row.emplace_back(e.normal.size() == n ? e.normal[a] : 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) row.emplace_back(e.matrix.rows() == n ? e.matrix(a, b) : 0.0);
    row.emplace_back(e.note);
    t.add_row(std::move(row));
  }
  return t;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string svg_open(int w, int h, const Provenance* provenance) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
                  "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
                  std::to_string(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  if (provenance) s += "<metadata>" + xml_escape(provenance->to_json().dump()) + "</metadata>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return s;
}

const std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                             "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

// Viridis anchors, linearly interpolated.
std::array<std::uint8_t, 3> colormap(double t) {
  static const double anchors[9][3] = {{68, 1, 84},    {71, 44, 122},  {59, 81, 139},
                                       {44, 113, 142}, {33, 144, 141}, {39, 173, 129},
                                       {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 8.0;
  const int i = std::min(7, static_cast<int>(t));
  const double s = t - i;
  std::array<std::uint8_t, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[k] = static_cast<std::uint8_t>(std::lround(anchors[i][k] * (1 - s) + anchors[i + 1][k] * s));
  }
  return c;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 3; k >= 0; --k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png(int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw LabError(ErrorCode::InvalidArgument, "png: pixel buffer does not match the size");
  }
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * width));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const auto* row = rgb.data() + static_cast<std::size_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + 3 * width);
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(len);
  if (compress2(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw LabError(ErrorCode::InvalidArgument, "png: zlib compression failed");
  }
  z.resize(len);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int k = 3; k >= 0; --k) out += table[(v >> (6 * k)) & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += rest == 2 ? table[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string line_plot_svg(const std::vector<Series>& series, const PlotOptions& opts,
                          const Provenance* provenance) {
  const double left = 70, right = 20, top = 36, bottom = 48;
  const double pw = opts.width - left - right, ph = opts.height - top - bottom;
  auto tx = [&](double v) { return opts.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return opts.log_y ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      const double a = tx(s.x[k]), b = ty(s.y[k]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a);
      x1 = std::max(x1, a);
      y0 = std::min(y0, b);
      y1 = std::max(y1, b);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 1e-300 * std::max(1.0, std::abs(y0))) {
    const double pad = std::max(std::abs(y0) * 0.05, 1e-12);
    y0 -= pad;
    y1 += pad;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  auto px = [&](double a) { return left + (a - x0) / (x1 - x0) * pw; };
  auto py = [&](double b) { return top + (1.0 - (b - y0) / (y1 - y0)) * ph; };

  std::string s = svg_open(opts.width, opts.height, provenance);
  s += "<text x=\"" + fmt(opts.width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       xml_escape(opts.title) + "</text>\n";
  s += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" +
       fmt(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double a = x0 + (x1 - x0) * k / 4.0, b = y0 + (y1 - y0) * k / 4.0;
    const double av = opts.log_x ? std::pow(10.0, a) : a, bv = opts.log_y ? std::pow(10.0, b) : b;
    s += "<text x=\"" + fmt(px(a)) + "\" y=\"" + fmt(top + ph + 16) + "\" text-anchor=\"middle\">" +
         fmt(av, 3) + "</text>\n";
    s += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(py(b) + 4) + "\" text-anchor=\"end\">" +
         fmt(bv, 4) + "</text>\n";
  }
  s += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(opts.height - 8.0) +
       "\" text-anchor=\"middle\">" + xml_escape(opts.x_label) + "</text>\n";
  s += "<text x=\"14\" y=\"" + fmt(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       fmt(top + ph / 2) + ")\">" + xml_escape(opts.y_label) + "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& se = series[i];
    const char* color = kPalette[i % kPalette.size()];
    std::string pts;
    for (std::size_t k = 0; k < se.x.size() && k < se.y.size(); ++k) {
      const double a = tx(se.x[k]), b = ty(se.y[k]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      pts += fmt(px(a), 6) + "," + fmt(py(b), 6) + " ";
    }
    s += std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"1.5\" points=\"" +
         pts + "\"/>\n";
    s += std::string("<text x=\"") + fmt(left + 8) + "\" y=\"" + fmt(top + 16 + 14.0 * i) +
         "\" fill=\"" + color + "\">" + xml_escape(se.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string heatmap_svg(const Grid& grid, const std::vector<double>& values,
                        const std::vector<Marker>& markers, const std::string& title,
                        const Provenance* provenance) {
  if (grid.dim() != 2) throw LabError(ErrorCode::InvalidArgument, "heatmap needs a 2D grid");
  const int nx = grid.nodes(0), ny = grid.nodes(1);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(nx) * ny * 3);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // Image rows run top to bottom, the grid's second axis bottom to top.
      const double v = values[grid.linear_index({i, ny - 1 - j, 0})];
      const auto c = colormap((v - lo) / span);
      std::copy(c.begin(), c.end(), rgb.begin() + (static_cast<std::size_t>(j) * nx + i) * 3);
    }
  }
  const std::string png = base64_encode(encode_png(nx, ny, rgb));
  const int size = 520, margin = 40;
  std::string s = svg_open(size + 2 * margin, size + 2 * margin, provenance);
  s += "<text x=\"" + fmt(size / 2.0 + margin) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
       xml_escape(title) + "</text>\n";
  s += "<image x=\"" + std::to_string(margin) + "\" y=\"" + std::to_string(margin) + "\" width=\"" +
       std::to_string(size) + "\" height=\"" + std::to_string(size) +
       "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" href=\"data:image/png;base64," +
       png + "\"/>\n";
  const double ax = grid.domain().lower(0), bx = grid.domain().upper(0);
  const double ay = grid.domain().lower(1), by = grid.domain().upper(1);
  for (const auto& m : markers) {
    const double px = margin + (m.x - ax) / (bx - ax) * size;
    const double py = margin + (1.0 - (m.y - ay) / (by - ay)) * size;
    s += "<circle cx=\"" + fmt(px, 6) + "\" cy=\"" + fmt(py, 6) + "\" r=\"2\" fill=\"" + m.color + "\"/>\n";
  }
  s += "<text x=\"" + std::to_string(margin) + "\" y=\"" + std::to_string(size + margin + 18) +
       "\">u in [" + fmt(lo) + ", " + fmt(hi) + "]</text>\n";
  s += "</svg>\n";
  return s;
}

std::string strata_color(StrataEntry::Status status, int stratum) {
  switch (status) {
    case StrataEntry::Status::Regular: return "#ffffff";
    case StrataEntry::Status::Singular: {
      static const std::array<const char*, 4> c = {"#d62728", "#ff7f0e", "#e377c2", "#8c564b"};
      return c[std::clamp(stratum, 0, 3)];
    }
    case StrataEntry::Status::Ambiguous: return "#17becf";
    case StrataEntry::Status::Skipped: return "#7f7f7f";
    case StrataEntry::Status::Failed: return "#000000";
  }
  return "#000000";
}

}  // namespace obstacle

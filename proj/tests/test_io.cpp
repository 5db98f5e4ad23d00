#include "obstacle/io.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace obstacle;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("obstacle_io_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Base64, KnownVectors) {
  auto enc = [](const std::string& s) { return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end())); };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
}

TEST(Png, SignatureHeaderAndPayloadRoundTrip) {
  const int w = 5, h = 3;
  std::vector<std::uint8_t> rgb(w * h * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<std::uint8_t>(i * 7);
  const std::vector<std::uint8_t> png = encode_png(w, h, rgb);
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  ASSERT_GT(png.size(), 33u);
  EXPECT_TRUE(std::equal(sig, sig + 8, png.begin()));
  auto be32 = [&](std::size_t o) {
    return (std::uint32_t(png[o]) << 24) | (std::uint32_t(png[o + 1]) << 16) | (std::uint32_t(png[o + 2]) << 8) |
           png[o + 3];
  };
  EXPECT_EQ(std::string(png.begin() + 12, png.begin() + 16), "IHDR");
  EXPECT_EQ(be32(16), static_cast<std::uint32_t>(w));
  EXPECT_EQ(be32(20), static_cast<std::uint32_t>(h));
  // Walk the chunks, check CRCs and inflate IDAT.
  std::vector<std::uint8_t> idat;
  std::size_t o = 8;
  bool saw_end = false;
  while (o + 12 <= png.size()) {
    const std::uint32_t len = be32(o);
    const std::string type(png.begin() + o + 4, png.begin() + o + 8);
    const std::uint32_t crc = crc32(0L, png.data() + o + 4, len + 4);
    EXPECT_EQ(crc, be32(o + 8 + len)) << type;
    if (type == "IDAT") idat.insert(idat.end(), png.begin() + o + 8, png.begin() + o + 8 + len);
    if (type == "IEND") saw_end = true;
    o += 12 + len;
  }
  EXPECT_TRUE(saw_end);
  std::vector<std::uint8_t> raw((w * 3 + 1) * h);
  uLongf raw_len = raw.size();
  ASSERT_EQ(uncompress(raw.data(), &raw_len, idat.data(), idat.size()), Z_OK);
  ASSERT_EQ(raw_len, raw.size());
  for (int y = 0; y < h; ++y) {
    EXPECT_EQ(raw[y * (w * 3 + 1)], 0);  // filter type none
    for (int x = 0; x < w * 3; ++x) EXPECT_EQ(raw[y * (w * 3 + 1) + 1 + x], rgb[y * w * 3 + x]);
  }
}

TEST(Numbers, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    const std::string s = format_number(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v) << s;
  }
}

TEST(Table, CsvHasProvenanceLineAndColumns) {
  Table t;
  t.columns = {"a", "b", "c"};
  t.add_row({1.5, 2ll, std::string("x")});
  Provenance p;
  p.scenario = "demo";
  p.config_hash = config_hash(Json{{"k", 1}});
  const std::string csv = t.to_csv(&p);
  EXPECT_EQ(csv.rfind("# provenance: ", 0), 0u);
  EXPECT_NE(csv.find("\na,b,c\n1.5,2,x\n"), std::string::npos);
  const Json j = t.to_json(&p);
  EXPECT_EQ(j["provenance"]["scenario"], "demo");
  EXPECT_THROW(t.add_row({1.0}), LabError);
}

TEST(ConfigHash, IsFnv1aOfTheCompactDump) {
  // Reference value computed independently.
  EXPECT_EQ(config_hash(Json("")), "07cc7607b4949e25");  // the two bytes ""
  const Json a = {{"name", "x"}, {"seed", 1}};
  const Json b = {{"name", "y"}, {"seed", 1}};
  EXPECT_EQ(config_hash(a), config_hash(Json::parse(a.dump())));
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(TableFormat, ParsesKnownNames) {
  EXPECT_EQ(parse_table_format("csv"), TableFormat::Csv);
  EXPECT_EQ(parse_table_format("json"), TableFormat::Json);
  try {
    parse_table_format("xml");
    FAIL();
  } catch (const LabError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Solution, BinaryRoundTrip) {
  const Domain d = Domain::centered(2, 1.0);
  CoefficientField cf = make_coefficient_preset("identity", d);
  const Grid g = Grid::with_resolution(d, 8);
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(static_cast<double>(i)) + 1.0;
  const ObstacleSolution s = make_solution(assemble(cf, g), u, 1e-9);
  const fs::path dir = scratch("solution");
  Provenance p;
  write_solution(dir, s, p);
  EXPECT_EQ(fs::file_size(dir / "solution.bin"), u.size() * sizeof(double));
  const StoredSolution r = read_solution(dir);
  EXPECT_EQ(r.grid.size(), g.size());
  EXPECT_EQ(r.u, u);
  fs::remove_all(dir);
}

TEST(WriteTable, DeterministicBytes) {
  Table t;
  t.columns = {"r", "phi"};
  for (int k = 0; k < 5; ++k) t.add_row({0.1 * k, 1.0 / (k + 1)});
  Provenance p;
  const fs::path d1 = scratch("t1"), d2 = scratch("t2");
  const fs::path a = write_table(d1, "x", t, TableFormat::Csv, p);
  const fs::path b = write_table(d2, "x", t, TableFormat::Csv, p);
  EXPECT_EQ(slurp(a), slurp(b));
  const fs::path j = write_table(d1, "x", t, TableFormat::Json, p);
  EXPECT_EQ(j.extension(), ".json");
  EXPECT_NO_THROW((void)Json::parse(slurp(j)));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Svg, PlotsCarryMetadata) {
  Provenance p;
  p.scenario = "svg";
  const std::string svg = line_plot_svg({{"phi", {0.1, 0.2, 0.4}, {1.0, 1.1, 1.2}}}, {"t", "r", "Phi", true, false}, &p);
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
  EXPECT_NE(svg.find("<metadata>"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

#include "occslam/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

namespace occslam {

namespace {

constexpr std::string_view kDatasetMagic = "OCCSLAM-DATASET";
constexpr std::string_view kTrajectoryMagic = "OCCSLAM-TRAJECTORY";
constexpr std::string_view kGridMagic = "OCCSLAM-GRID";
constexpr std::string_view kMapMagic = "OCCSLAM-MAP";
constexpr std::string_view kReportMagic = "OCCSLAM-REPORT";
constexpr std::string_view kMetricsMagic = "OCCSLAM-METRICS";
constexpr std::string_view kWorldFormat = "occslam-world";

std::string Num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> Split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double ParseNumber(std::string_view tok, int line) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("expected a number, got '" + std::string(tok) + "'", line);
  }
  return v;
}

long ParseInteger(std::string_view tok, int line) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("expected an integer, got '" + std::string(tok) + "'", line);
  }
  return v;
}

bool SkippableLine(std::string_view line) {
  const auto tokens = Split(line);
  return tokens.empty() || tokens.front().front() == '#';
}

// Reads the "<MAGIC> <version>" header line; rejects other majors.
void ReadHeader(std::istream& in, std::string_view magic, int* line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++*line_no;
    if (SkippableLine(line)) continue;
    const auto tok = Split(line);
    if (tok.size() != 2 || tok[0] != magic) {
      throw ParseError("expected header '" + std::string(magic) + " <version>'", *line_no);
    }
    const long version = ParseInteger(tok[1], *line_no);
    if (version != kFormatVersion) {
      throw ParseError("unsupported " + std::string(magic) + " version " + std::to_string(version),
                       *line_no);
    }
    return;
  }
  throw ParseError("empty file", 0);
}

std::ifstream OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

void CheckWritten(const std::ostream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Pose2 ReadPose(const std::vector<std::string_view>& tok, std::size_t at, int line) {
  if (at + 3 > tok.size()) throw ParseError("truncated pose", line);
  return Pose2(ParseNumber(tok[at], line), ParseNumber(tok[at + 1], line),
               ParseNumber(tok[at + 2], line));
}

std::uint8_t ToByte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

Dataset ParseDataset(std::istream& in) {
  int line_no = 0;
  ReadHeader(in, kDatasetMagic, &line_no);
  Dataset ds;
  std::optional<std::size_t> n_beams;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (SkippableLine(line)) continue;
    const auto tok = Split(line);
    if (tok[0] == "META") {
      if (tok.size() < 2) throw ParseError("META needs a key", line_no);
      const std::size_t key_end = line.find(tok[1]) + tok[1].size();
      std::string value = line.substr(std::min(key_end, line.size()));
      const auto first = value.find_first_not_of(" \t");
      value = first == std::string::npos ? "" : value.substr(first);
      while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) {
        value.pop_back();
      }
      ds.meta[std::string(tok[1])] = value;
      continue;
    }
    if (tok[0] != "SCAN") {
      throw ParseError("unknown record tag '" + std::string(tok[0]) + "'", line_no);
    }
    if (tok.size() < 6) throw ParseError("truncated SCAN record", line_no);
    ScanRecord rec;
    rec.timestamp = ParseNumber(tok[1], line_no);
    rec.angle_min = ParseNumber(tok[2], line_no);
    rec.angle_increment = ParseNumber(tok[3], line_no);
    rec.range_max = ParseNumber(tok[4], line_no);
    const long n = ParseInteger(tok[5], line_no);
    if (n < 1) throw ParseError("scan needs at least one beam", line_no);
    if (tok.size() < 6 + static_cast<std::size_t>(n)) {
      throw ParseError("expected " + std::to_string(n) + " ranges", line_no);
    }
    if (n_beams && *n_beams != static_cast<std::size_t>(n)) {
      throw ParseError("inconsistent beam count: " + std::to_string(n) + " vs " +
                           std::to_string(*n_beams),
                       line_no);
    }
    n_beams = static_cast<std::size_t>(n);
    rec.ranges.reserve(static_cast<std::size_t>(n));
    for (long b = 0; b < n; ++b) rec.ranges.push_back(ParseNumber(tok[6 + b], line_no));

    std::size_t at = 6 + static_cast<std::size_t>(n);
    while (at < tok.size()) {
      const std::string_view tag = tok[at++];
      if (tag == "ODOM") {
        if (at + 3 > tok.size()) throw ParseError("truncated ODOM", line_no);
        OdomIncrement odom;
        odom.dt = {ParseNumber(tok[at], line_no), ParseNumber(tok[at + 1], line_no)};
        odom.dtheta = ParseNumber(tok[at + 2], line_no);
        at += 3;
        if (at < tok.size() && tok[at] == "SIGMA") {
          if (at + 10 > tok.size()) throw ParseError("truncated SIGMA", line_no);
          for (int k = 0; k < 9; ++k) odom.sigma(k / 3, k % 3) = ParseNumber(tok[at + 1 + k], line_no);
          at += 10;
        }
        rec.odom = odom;
      } else if (tag == "GT") {
        rec.gt_pose = ReadPose(tok, at, line_no);
        at += 3;
      } else if (tag == "INIT") {
        rec.init_pose = ReadPose(tok, at, line_no);
        at += 3;
      } else {
        throw ParseError("unknown field '" + std::string(tag) + "'", line_no);
      }
    }
    if (ds.records.empty() && rec.odom) {
      throw ParseError("odometry on first record", line_no);
    }
    try {
      rec.Validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw ParseError("dataset has no records", line_no);
  try {
    ds.Validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return ds;
}

Dataset ParseDataset(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return ParseDataset(in);
}

void WriteDataset(const Dataset& dataset, std::ostream& out) {
  out << kDatasetMagic << ' ' << kFormatVersion << '\n';
  for (const auto& [key, value] : dataset.meta) out << "META " << key << ' ' << value << '\n';
  for (const ScanRecord& rec : dataset.records) {
    out << "SCAN " << Num(rec.timestamp) << ' ' << Num(rec.angle_min) << ' '
        << Num(rec.angle_increment) << ' ' << Num(rec.range_max) << ' ' << rec.ranges.size();
    for (double r : rec.ranges) out << ' ' << Num(r);
    if (rec.odom) {
      out << " ODOM " << Num(rec.odom->dt.x()) << ' ' << Num(rec.odom->dt.y()) << ' '
          << Num(rec.odom->dtheta) << " SIGMA";
      for (int k = 0; k < 9; ++k) out << ' ' << Num(rec.odom->sigma(k / 3, k % 3));
    }
    if (rec.gt_pose) {
      out << " GT " << Num(rec.gt_pose->x()) << ' ' << Num(rec.gt_pose->y()) << ' '
          << Num(rec.gt_pose->theta());
    }
    if (rec.init_pose) {
      out << " INIT " << Num(rec.init_pose->x()) << ' ' << Num(rec.init_pose->y()) << ' '
          << Num(rec.init_pose->theta());
    }
    out << '\n';
  }
}

void WriteDataset(const Dataset& dataset, const std::filesystem::path& path) {
  auto out = OpenOutput(path);
  WriteDataset(dataset, out);
  CheckWritten(out, path);
}

// ---------------------------------------------------------------------------
// Trajectory

std::vector<Pose2> ParseTrajectory(std::istream& in) {
  int line_no = 0;
  ReadHeader(in, kTrajectoryMagic, &line_no);
  std::vector<Pose2> poses;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (SkippableLine(line)) continue;
    const auto tok = Split(line);
    if (tok.size() != 4) throw ParseError("expected '<i> <x> <y> <theta>'", line_no);
    const long idx = ParseInteger(tok[0], line_no);
    if (idx != static_cast<long>(poses.size())) {
      throw ParseError("pose index " + std::to_string(idx) + " out of sequence", line_no);
    }
    poses.push_back(ReadPose(tok, 1, line_no));
  }
  return poses;
}

std::vector<Pose2> ParseTrajectory(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return ParseTrajectory(in);
}

void WriteTrajectory(const std::vector<Pose2>& poses, std::ostream& out) {
  out << kTrajectoryMagic << ' ' << kFormatVersion << '\n';
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out << i << ' ' << Num(poses[i].x()) << ' ' << Num(poses[i].y()) << ' '
        << Num(poses[i].theta()) << '\n';
  }
}

void WriteTrajectory(const std::vector<Pose2>& poses, const std::filesystem::path& path) {
  auto out = OpenOutput(path);
  WriteTrajectory(poses, out);
  CheckWritten(out, path);
}

// ---------------------------------------------------------------------------
// World

World ParseWorldJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid world JSON: ") + e.what(), 0);
  }
  if (!j.is_object() || j.value("format", "") != kWorldFormat) {
    throw ParseError("not an occslam-world document", 0);
  }
  if (j.value("version", 0) != kFormatVersion) {
    throw ParseError("unsupported world version", 0);
  }
  World w;
  w.name = j.value("name", "");
  if (!j.contains("segments") || !j["segments"].is_array()) {
    throw ParseError("world has no segments array", 0);
  }
  for (const auto& s : j["segments"]) {
    if (!s.is_array() || s.size() != 4) {
      throw ParseError("segment must be [ax, ay, bx, by]", 0);
    }
    w.segments.push_back({{s[0].get<double>(), s[1].get<double>()},
                          {s[2].get<double>(), s[3].get<double>()}});
  }
  try {
    w.Validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return w;
}

World ParseWorld(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseWorldJson(ss.str());
}

void WriteWorld(const World& world, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = kWorldFormat;
  j["version"] = kFormatVersion;
  j["name"] = world.name;
  j["segments"] = nlohmann::json::array();
  for (const Segment& s : world.segments) {
    j["segments"].push_back({s.a.x(), s.a.y(), s.b.x(), s.b.y()});
  }
  auto out = OpenOutput(path);
  out << j.dump(2) << '\n';
  CheckWritten(out, path);
}

// ---------------------------------------------------------------------------
// Grid values

// OCCSLAM-GRID 1
// origin <x> <y>
// resolution <s>
// size <l_w> <l_h>
// columns value hits [variance]
// one line per node, w varying fastest
GridFile ParseGrid(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  int line_no = 0;
  ReadHeader(in, kGridMagic, &line_no);
  std::string line;
  auto next_tokens = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (!SkippableLine(line)) return Split(line);
    }
    throw ParseError("unexpected end of grid file", line_no);
  };
  auto expect = [&](std::string_view key, std::size_t n) {
    auto tok = next_tokens();
    if (tok.size() != n + 1 || tok[0] != key) {
      throw ParseError("expected '" + std::string(key) + "' with " + std::to_string(n) +
                           " values",
                       line_no);
    }
    return tok;
  };

  GridGeometry geom;
  auto tok = expect("origin", 2);
  geom.origin = {ParseNumber(tok[1], line_no), ParseNumber(tok[2], line_no)};
  tok = expect("resolution", 1);
  geom.resolution = ParseNumber(tok[1], line_no);
  tok = expect("size", 2);
  geom.l_w = static_cast<int>(ParseInteger(tok[1], line_no));
  geom.l_h = static_cast<int>(ParseInteger(tok[2], line_no));
  try {
    geom.Validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line_no);
  }
  tok = next_tokens();
  if (tok.empty() || tok[0] != "columns") throw ParseError("expected 'columns'", line_no);
  const bool with_var = tok.size() == 4 && tok[3] == "variance";
  if (tok.size() < 3 || tok[1] != "value" || tok[2] != "hits" || (tok.size() == 4 && !with_var) ||
      tok.size() > 4) {
    throw ParseError("columns must be 'value hits [variance]'", line_no);
  }
  const std::size_t ncol = with_var ? 3 : 2;

  GridFile file{GridMap(geom), HitMap(geom), std::nullopt};
  if (with_var) file.variances = Eigen::VectorXd::Zero(geom.NodeCount());
  for (int i = 0; i < geom.NodeCount(); ++i) {
    tok = next_tokens();
    if (tok.size() != ncol) {
      throw ParseError("expected " + std::to_string(ncol) + " columns", line_no);
    }
    file.map.mutable_values()[i] = ParseNumber(tok[0], line_no);
    file.hits.mutable_counts()[i] = ParseNumber(tok[1], line_no);
    if (with_var) (*file.variances)[i] = ParseNumber(tok[2], line_no);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!SkippableLine(line)) throw ParseError("trailing data after grid nodes", line_no);
  }
  return file;
}

void WriteGrid(const GridMap& map, const HitMap& hits, const Eigen::VectorXd* variances,
               const std::filesystem::path& path) {
  const GridGeometry& g = map.geometry();
  if (!(g == hits.geometry())) {
    throw std::invalid_argument("WriteGrid: map and hit map geometries differ");
  }
  if (variances && variances->size() != g.NodeCount()) {
    throw std::invalid_argument("WriteGrid: variance vector has the wrong size");
  }
  auto out = OpenOutput(path);
  out << kGridMagic << ' ' << kFormatVersion << '\n';
  out << "origin " << Num(g.origin.x()) << ' ' << Num(g.origin.y()) << '\n';
  out << "resolution " << Num(g.resolution) << '\n';
  out << "size " << g.l_w << ' ' << g.l_h << '\n';
  out << "columns value hits" << (variances ? " variance" : "") << '\n';
  for (int i = 0; i < g.NodeCount(); ++i) {
    out << Num(map.values()[i]) << ' ' << Num(hits.counts()[i]);
    if (variances) out << ' ' << Num((*variances)[i]);
    out << '\n';
  }
  CheckWritten(out, path);
}

// ---------------------------------------------------------------------------
// PGM

void WritePgm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& pixels) {
  if (width <= 0 || height <= 0 ||
      pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("WritePgm: pixel buffer does not match " + std::to_string(width) +
                                "x" + std::to_string(height));
  }
  auto out = OpenOutput(path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  CheckWritten(out, path);
}

PgmImage ReadPgm(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  auto read_token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(c);
    }
    if (tok.empty()) throw ParseError("truncated PGM header", 0);
    return tok;
  };
  if (read_token() != "P5") throw ParseError("not a binary PGM (P5)", 0);
  PgmImage img;
  img.width = static_cast<int>(ParseInteger(read_token(), 0));
  img.height = static_cast<int>(ParseInteger(read_token(), 0));
  const long maxval = ParseInteger(read_token(), 0);
  if (img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw ParseError("unsupported PGM geometry or depth", 0);
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ParseError("truncated PGM pixel data", 0);
  }
  return img;
}

// ---------------------------------------------------------------------------
// Rasters. Grid row h = 0 is the bottom, image row 0 is the top.

std::vector<std::uint8_t> EvidenceRaster(const GridMap& map) {
  const GridGeometry& g = map.geometry();
  const int width = g.Width();
  const int height = g.Height();
  constexpr double c = kExportEvidenceClamp;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      const double e = std::clamp(map.at(w, h), -c, c);
      px[static_cast<std::size_t>(height - 1 - h) * width + w] = ToByte(255.0 * (c - e) / (2 * c));
    }
  }
  return px;
}

std::vector<std::uint8_t> ProbabilityRaster(const CellClassification& cells) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(cells.l_w) * cells.l_h);
  for (int h = 0; h < cells.l_h; ++h) {
    for (int w = 0; w < cells.l_w; ++w) {
      const std::size_t idx = static_cast<std::size_t>(h) * cells.l_w + w;
      const std::size_t row = static_cast<std::size_t>(cells.l_h - 1 - h);
      px[row * cells.l_w + w] = cells.labels[idx] == CellLabel::kUnknown
                                    ? std::uint8_t{128}
                                    : ToByte(255.0 * (1.0 - cells.probabilities[idx]));
    }
  }
  return px;
}

std::vector<std::uint8_t> UncertaintyRaster(const Eigen::VectorXd& variances, int width,
                                            int height) {
  if (variances.size() != static_cast<Eigen::Index>(width) * height) {
    throw std::invalid_argument("UncertaintyRaster: variance vector has the wrong size");
  }
  const double lo = variances.minCoeff();
  const double hi = variances.maxCoeff();
  const double span = hi - lo;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      const double v = variances[static_cast<Eigen::Index>(h) * width + w];
      const double u = span > 0.0 ? (v - lo) / span : 0.0;
      px[static_cast<std::size_t>(height - 1 - h) * width + w] = ToByte(255.0 * (1.0 - u));
    }
  }
  return px;
}

// ---------------------------------------------------------------------------
// Solver outputs

OutputFiles WriteOutputs(const std::vector<Pose2>& poses, const GridMap& map, const HitMap& hits,
                         const CovarianceSummary* covariance,
                         const std::filesystem::path& out_dir, const Metrics* metrics,
                         const ClassifyOptions& classify) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + out_dir.string() +
                             "': " + ec.message());
  }
  OutputFiles files;
  files.trajectory = out_dir / "trajectory.txt";
  files.grid = out_dir / "grid.txt";
  files.metadata = out_dir / "map.txt";
  files.evidence_raster = out_dir / "evidence.pgm";
  files.probability_raster = out_dir / "probability.pgm";

  const GridGeometry& g = map.geometry();
  const Eigen::VectorXd* variances =
      covariance && covariance->node_variances.size() == g.NodeCount()
          ? &covariance->node_variances
          : nullptr;

  WriteTrajectory(poses, files.trajectory);
  WriteGrid(map, hits, variances, files.grid);
  WritePgm(files.evidence_raster, g.Width(), g.Height(), EvidenceRaster(map));
  const CellClassification cells = ClassifyMap(map, hits, classify);
  WritePgm(files.probability_raster, g.l_w, g.l_h, ProbabilityRaster(cells));
  if (variances) {
    files.uncertainty_raster = out_dir / "uncertainty.pgm";
    WritePgm(*files.uncertainty_raster, g.Width(), g.Height(),
             UncertaintyRaster(*variances, g.Width(), g.Height()));
  }

  auto meta = OpenOutput(files.metadata);
  meta << kMapMagic << ' ' << kFormatVersion << '\n';
  meta << "origin " << Num(g.origin.x()) << ' ' << Num(g.origin.y()) << '\n';
  meta << "resolution " << Num(g.resolution) << '\n';
  meta << "nodes " << g.Width() << ' ' << g.Height() << '\n';
  meta << "cells " << g.l_w << ' ' << g.l_h << '\n';
  meta << "evidence_clamp " << Num(kExportEvidenceClamp) << '\n';
  meta << "evidence_mapping pixel=round(255*(clamp-e)/(2*clamp))\n";
  meta << "probability_mapping pixel=round(255*(1-p)) unknown=128\n";
  meta << "p_occupied " << Num(classify.p_occupied) << '\n';
  meta << "p_free " << Num(classify.p_free) << '\n';
  meta << "evidence_raster " << files.evidence_raster.filename().string() << '\n';
  meta << "probability_raster " << files.probability_raster.filename().string() << '\n';
  if (files.uncertainty_raster) {
    meta << "uncertainty_raster " << files.uncertainty_raster->filename().string() << '\n';
    meta << "uncertainty_white_variance " << Num(variances->minCoeff()) << '\n';
    meta << "uncertainty_black_variance " << Num(variances->maxCoeff()) << '\n';
  }
  CheckWritten(meta, files.metadata);
  if (metrics) {
    files.metrics = out_dir / "metrics.txt";
    WriteMetrics(*metrics, *files.metrics);
  }
  return files;
}

void WriteSolveReport(const SolveReport& report, const std::filesystem::path& path) {
  auto out = OpenOutput(path);
  out << kReportMagic << ' ' << kFormatVersion << '\n';
  out << "converged " << (report.converged ? 1 : 0) << '\n';
  out << "stop_reason " << report.stop_reason << '\n';
  out << "iterations " << report.iterations << '\n';
  out << "final_cost " << Num(report.final_cost) << '\n';
  out << "# k cost w_s step_sq_norm skipped_samples\n";
  for (std::size_t k = 0; k < report.cost_history.size(); ++k) {
    out << "iter " << k << ' ' << Num(report.cost_history[k]) << ' '
        << Num(k < report.w_s_history.size() ? report.w_s_history[k] : 0.0);
    if (k >= 1 && k - 1 < report.step_sq_norms.size()) {
      out << ' ' << Num(report.step_sq_norms[k - 1]);
    } else {
      out << " -";
    }
    if (k >= 1 && k - 1 < report.skipped_samples_per_iter.size()) {
      out << ' ' << report.skipped_samples_per_iter[k - 1];
    } else {
      out << " -";
    }
    out << '\n';
  }
  CheckWritten(out, path);
}

void WriteMetrics(const Metrics& metrics, const std::filesystem::path& path) {
  const PoseErrorReport& poses = metrics.poses;
  const MapErrorReport* map = metrics.map ? &*metrics.map : nullptr;
  auto out = OpenOutput(path);
  out << kMetricsMagic << ' ' << kFormatVersion << '\n';
  out << "poses " << poses.translation_errors.size() << '\n';
  out << "mae_translation " << Num(poses.mae_translation) << '\n';
  out << "mae_rotation " << Num(poses.mae_rotation) << '\n';
  out << "rmse_translation " << Num(poses.rmse_translation) << '\n';
  out << "rmse_rotation " << Num(poses.rmse_rotation) << '\n';
  if (map) {
    out << "auc " << Num(map->auc) << '\n';
    out << "known_precision " << Num(map->known_precision) << '\n';
    out << "precision_free " << Num(map->precision[0]) << '\n';
    out << "precision_occupied " << Num(map->precision[1]) << '\n';
    out << "precision_unknown " << Num(map->precision[2]) << '\n';
    out << "scored_cells " << map->scored_cells << '\n';
    out << "# confusion rows: truth free/occupied/unknown, columns: estimate\n";
    for (int gt = 0; gt < 3; ++gt) {
      out << "confusion " << gt;
      for (int est = 0; est < 3; ++est) out << ' ' << map->confusion[gt][est];
      out << '\n';
    }
  }
  CheckWritten(out, path);
}

}  // namespace occslam

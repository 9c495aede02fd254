#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "occslam/dataset.hpp"
#include "occslam/evaluation.hpp"
#include "occslam/grid_map.hpp"
#include "occslam/linear.hpp"
#include "occslam/simulator.hpp"
#include "occslam/solver.hpp"

namespace occslam {

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline constexpr int kFormatVersion = 1;

// Dataset text format, one scan per line:
//   OCCSLAM-DATASET 1
//   META <key> <value...>
//   SCAN <t> <angle_min> <angle_inc> <range_max> <n> <r_1..r_n>
//        [ODOM <dx> <dy> <dtheta> [SIGMA <9 row-major>]] [GT <x> <y> <theta>]
//        [INIT <x> <y> <theta>]
// Blank lines and lines starting with '#' are ignored.
Dataset ParseDataset(std::istream& in);
Dataset ParseDataset(const std::filesystem::path& path);
void WriteDataset(const Dataset& dataset, std::ostream& out);
void WriteDataset(const Dataset& dataset, const std::filesystem::path& path);

// Trajectory: header "OCCSLAM-TRAJECTORY 1" then "<i> <x> <y> <theta>" lines.
std::vector<Pose2> ParseTrajectory(std::istream& in);
std::vector<Pose2> ParseTrajectory(const std::filesystem::path& path);
void WriteTrajectory(const std::vector<Pose2>& poses, std::ostream& out);
void WriteTrajectory(const std::vector<Pose2>& poses, const std::filesystem::path& path);

// World: JSON {"format": "occslam-world", "version": 1, "name": ...,
//              "segments": [[ax, ay, bx, by], ...]}
World ParseWorld(const std::filesystem::path& path);
World ParseWorldJson(const std::string& text);
void WriteWorld(const World& world, const std::filesystem::path& path);

/// Full-precision node values, hit counts and (optionally) variances.
struct GridFile {
  GridMap map;
  HitMap hits;
  std::optional<Eigen::VectorXd> variances;
};
GridFile ParseGrid(const std::filesystem::path& path);
void WriteGrid(const GridMap& map, const HitMap& hits, const Eigen::VectorXd* variances,
               const std::filesystem::path& path);

/// Binary 8-bit PGM (P5). Row 0 of `pixels` is the top row.
void WritePgm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& pixels);
struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};
PgmImage ReadPgm(const std::filesystem::path& path);

inline constexpr double kExportEvidenceClamp = 10.0;

/// One byte per node, high evidence dark: round(255 (c - e) / 2c) with e
/// clamped to [-c, c], c = kExportEvidenceClamp.
std::vector<std::uint8_t> EvidenceRaster(const GridMap& map);
/// One byte per cell: round(255 (1 - p)); unknown cells 128.
std::vector<std::uint8_t> ProbabilityRaster(const CellClassification& cells);
/// One byte per node, linear from min variance (255) to max variance (0).
std::vector<std::uint8_t> UncertaintyRaster(const Eigen::VectorXd& variances, int width,
                                            int height);

struct OutputFiles {
  std::filesystem::path trajectory;
  std::filesystem::path grid;
  std::filesystem::path metadata;
  std::filesystem::path evidence_raster;
  std::filesystem::path probability_raster;
  std::optional<std::filesystem::path> uncertainty_raster;

  std::optional<std::filesystem::path> metrics;
};

struct Metrics {
  PoseErrorReport poses;
  std::optional<MapErrorReport> map;
};

/// Writes trajectory.txt, grid.txt, map.txt (raster sidecar), evidence.pgm,
/// probability.pgm, uncertainty.pgm when a covariance is given and
/// metrics.txt when metrics are given, into `out_dir`, creating it if needed.
/// Throws std::runtime_error when it cannot write.
OutputFiles WriteOutputs(const std::vector<Pose2>& poses, const GridMap& map, const HitMap& hits,
                         const CovarianceSummary* covariance,
                         const std::filesystem::path& out_dir, const Metrics* metrics = nullptr,
                         const ClassifyOptions& classify = {});

void WriteSolveReport(const SolveReport& report, const std::filesystem::path& path);

// Key/value text: "OCCSLAM-METRICS 1", then one "<key> <value>" per line.
void WriteMetrics(const Metrics& metrics, const std::filesystem::path& path);

}  // namespace occslam

#include "occslam/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace occslam {

std::string ToString(MapModel model) {
  return model == MapModel::kContinuous ? "continuous" : "discrete";
}

std::string ToString(GradientModel model) {
  return model == GradientModel::kNodeBlend ? "node-blend" : "exact";
}

MapModel ParseMapModel(const std::string& name) {
  if (name == "continuous") return MapModel::kContinuous;
  if (name == "discrete") return MapModel::kDiscrete;
  throw std::invalid_argument("unknown map model '" + name + "'");
}

GradientModel ParseGradientModel(const std::string& name) {
  if (name == "node-blend") return GradientModel::kNodeBlend;
  if (name == "exact") return GradientModel::kExactBilinear;
  throw std::invalid_argument("unknown gradient model '" + name + "'");
}

void SolverConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SolverConfig: ") + what);
  };
  require(resolution_s > 0.0 && std::isfinite(resolution_s), "resolution_s must be > 0");
  require(w_z >= 0.0 && w_o >= 0.0 && w_s_initial >= 0.0, "weights must be >= 0");
  require(d_s > 1.0, "d_s must be > 1");
  require(tau_s >= 1, "tau_s must be >= 1");
  require(tau_k >= 1, "tau_k must be >= 1");
  require(tau_delta > 0.0, "tau_delta must be > 0");
  require(w_s_floor >= 0.0, "w_s_floor must be >= 0");
  require(map_margin >= 0.0, "map_margin must be >= 0");
  require(max_halvings >= 0, "max_halvings must be >= 0");
  require(tikhonov >= 0.0, "tikhonov must be >= 0");
  require(min_hits > 0.0, "min_hits must be > 0");
  require(threads >= 1, "threads must be >= 1");
}

double SolverConfig::SmoothingWeightAt(int k) const {
  const int annealings = std::max(k, 0) / tau_s;
  return std::max(w_s_initial / std::pow(d_s, annealings), w_s_floor);
}

}  // namespace occslam

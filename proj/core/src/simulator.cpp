#include "occslam/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace occslam {

namespace {

constexpr double kStepSeconds = 0.5;
constexpr double kMinNoisyRange = 1e-3;

double Cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

void AddBox(World* world, double x0, double y0, double x1, double y1) {
  world->segments.push_back({{x0, y0}, {x1, y0}});
  world->segments.push_back({{x1, y0}, {x1, y1}});
  world->segments.push_back({{x1, y1}, {x0, y1}});
  world->segments.push_back({{x0, y1}, {x0, y0}});
}

void AddWall(World* world, double x0, double y0, double x1, double y1) {
  world->segments.push_back({{x0, y0}, {x1, y1}});
}

// Poses at constant arc-length spacing along a waypoint polyline, heading
// along the direction of travel.
std::vector<Pose2> FollowWaypoints(const std::vector<Eigen::Vector2d>& waypoints, int n_poses) {
  if (waypoints.size() < 2 || n_poses < 2) {
    throw std::invalid_argument("trajectory needs >= 2 waypoints and >= 2 poses");
  }
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    cumulative.push_back(cumulative.back() + (waypoints[i] - waypoints[i - 1]).norm());
  }
  const double total = cumulative.back();
  std::vector<Eigen::Vector2d> points;
  std::size_t seg = 1;
  for (int k = 0; k < n_poses; ++k) {
    const double s = total * k / (n_poses - 1);
    while (seg + 1 < waypoints.size() && cumulative[seg] < s) ++seg;
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double u = len > 0.0 ? (s - cumulative[seg - 1]) / len : 0.0;
    points.push_back(waypoints[seg - 1] + u * (waypoints[seg] - waypoints[seg - 1]));
  }
  std::vector<Pose2> poses;
  poses.reserve(points.size());
  double heading = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k + 1 < points.size()) {
      const Eigen::Vector2d d = points[k + 1] - points[k];
      if (d.norm() > 1e-12) heading = std::atan2(d.y(), d.x());
    }
    poses.emplace_back(points[k], heading);
  }
  return poses;
}

// Moves world and trajectory so that the first pose is the origin.
Scenario Anchored(World world, const std::vector<Pose2>& trajectory) {
  const Pose2 anchor = trajectory.front();
  const Eigen::Matrix2d r = anchor.R();
  for (Segment& s : world.segments) {
    s.a = r * (s.a - anchor.t());
    s.b = r * (s.b - anchor.t());
  }
  return {std::move(world), Reanchor(trajectory)};
}

Scenario RoomScenario(int n_poses) {
  World w;
  w.name = "room";
  AddBox(&w, -2.0, -2.0, 8.0, 6.0);
  AddBox(&w, 2.4, 1.5, 3.6, 2.5);
  AddBox(&w, 6.8, -1.2, 7.2, -0.8);
  AddBox(&w, -1.2, 1.5, -0.8, 2.0);
  AddWall(&w, -2.0, 5.0, -1.0, 6.0);
  AddWall(&w, 4.0, 6.0, 4.0, 5.2);
  AddWall(&w, 1.5, -2.0, 1.5, -1.3);
  AddWall(&w, 7.2, 2.0, 7.2, 3.5);
  AddWall(&w, 7.2, 3.5, 7.6, 3.5);
  const std::vector<Eigen::Vector2d> waypoints{
      {0.0, 0.0}, {6.0, 0.0}, {6.0, 4.0}, {0.0, 4.0}, {0.0, 0.4}};
  return Anchored(std::move(w), FollowWaypoints(waypoints, n_poses > 0 ? n_poses : 60));
}

Scenario Sim1Scenario(int n_poses) {
  World w;
  w.name = "sim1-like";
  AddBox(&w, -3.0, -3.0, 21.0, 13.0);
  AddWall(&w, -3.0, 7.0, 6.0, 7.0);
  AddWall(&w, 13.0, 3.0, 13.0, 8.0);
  AddBox(&w, 3.0, 1.5, 5.0, 2.5);
  AddBox(&w, 15.0, 5.0, 16.0, 6.0);
  AddBox(&w, 11.0, 11.5, 12.0, 12.5);
  AddBox(&w, 5.8, -2.2, 6.2, -1.8);
  AddBox(&w, 11.8, -2.2, 12.2, -1.8);
  AddBox(&w, 19.8, 4.8, 20.2, 5.2);
  AddWall(&w, 2.0, 13.0, 3.5, 10.5);
  const std::vector<Eigen::Vector2d> waypoints{{0.0, 0.0},  {18.0, 0.0}, {18.0, 10.0},
                                               {9.0, 10.0}, {9.0, 4.0},  {0.0, 4.0},
                                               {0.0, 0.5}};
  return Anchored(std::move(w), FollowWaypoints(waypoints, n_poses > 0 ? n_poses : 340));
}

Scenario Sim2Scenario(int n_poses) {
  World w;
  w.name = "sim2-like";
  AddBox(&w, -3.0, -3.0, 25.0, 17.0);
  AddWall(&w, 2.0, 3.0, 17.0, 3.0);
  AddWall(&w, 7.0, 9.0, 25.0, 9.0);
  AddBox(&w, 10.0, 1.0, 11.0, 2.0);
  AddBox(&w, 14.0, 7.5, 15.0, 8.0);
  AddBox(&w, 10.0, 10.0, 11.0, 11.0);
  AddBox(&w, -2.0, 8.0, -1.0, 9.0);
  AddBox(&w, 22.0, 2.0, 23.0, 3.0);
  AddWall(&w, 23.0, 17.0, 25.0, 15.0);
  const std::vector<Eigen::Vector2d> waypoints{
      {0.0, 0.0},  {20.0, 0.0},  {20.0, 6.0},  {4.0, 6.0}, {4.0, 12.0},
      {20.0, 12.0}, {20.0, 14.0}, {0.0, 14.0}, {0.0, 0.5}};
  return Anchored(std::move(w), FollowWaypoints(waypoints, n_poses > 0 ? n_poses : 527));
}

}  // namespace

void World::Validate() const {
  for (const Segment& s : segments) {
    if (!s.a.allFinite() || !s.b.allFinite()) {
      throw std::invalid_argument("world segment has non-finite endpoint");
    }
    if ((s.a - s.b).norm() == 0.0) {
      throw std::invalid_argument("world segment is degenerate");
    }
  }
}

double RayDistance(const World& world, const Eigen::Vector2d& origin,
                   const Eigen::Vector2d& direction) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : world.segments) {
    const Eigen::Vector2d e = s.b - s.a;
    const double denom = Cross(direction, e);
    if (std::abs(denom) < 1e-12) continue;  // parallel
    const Eigen::Vector2d ao = s.a - origin;
    const double t = Cross(ao, e) / denom;
    const double u = Cross(ao, direction) / denom;
    if (t > 1e-9 && u >= 0.0 && u <= 1.0 && t < best) best = t;
  }
  return best;
}

std::vector<double> Raycast(const World& world, const Pose2& pose, const SensorSpec& sensor) {
  std::vector<double> ranges(static_cast<std::size_t>(sensor.n_beams));
  const double inc = sensor.AngleIncrement();
  for (int b = 0; b < sensor.n_beams; ++b) {
    const double a = pose.theta() + sensor.angle_min + b * inc;
    const double d = RayDistance(world, pose.t(), {std::cos(a), std::sin(a)});
    ranges[b] = d <= sensor.range_max ? d : sensor.range_max + 1.0;
  }
  return ranges;
}

Dataset GenerateDataset(const World& world, const std::vector<Pose2>& trajectory,
                        const SensorSpec& sensor, const NoiseSpec& noise) {
  world.Validate();
  if (trajectory.size() < 2) {
    throw std::invalid_argument("GenerateDataset: need at least two poses");
  }
  if (noise.odom_xy_sigma < 0.0 || noise.odom_theta_sigma < 0.0 ||
      sensor.range_noise_sigma < 0.0) {
    throw std::invalid_argument("GenerateDataset: noise sigmas must be >= 0");
  }
  Eigen::Matrix3d sigma = OdomIncrement::DefaultSigma();
  if (noise.odom_xy_sigma > 0.0 && noise.odom_theta_sigma > 0.0) {
    sigma = Eigen::Vector3d(noise.odom_xy_sigma * noise.odom_xy_sigma,
                            noise.odom_xy_sigma * noise.odom_xy_sigma,
                            noise.odom_theta_sigma * noise.odom_theta_sigma)
                .asDiagonal();
  }

  Dataset ds;
  ds.meta["generator"] = "occslam-simulator";
  ds.meta["world"] = world.name.empty() ? "custom" : world.name;
  ds.meta["seed"] = std::to_string(noise.seed);
  ds.records.resize(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(noise.seed),
                      static_cast<std::uint32_t>(noise.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> unit(0.0, 1.0);

    ScanRecord& rec = ds.records[i];
    rec.timestamp = kStepSeconds * static_cast<double>(i);
    rec.angle_min = sensor.angle_min;
    rec.angle_increment = sensor.AngleIncrement();
    rec.range_max = sensor.range_max;
    rec.gt_pose = trajectory[i];
    rec.ranges = Raycast(world, trajectory[i], sensor);
    for (double& r : rec.ranges) {
      if (r > sensor.range_max) continue;
      double noisy = r;
      if (sensor.range_noise_sigma > 0.0) {
        do {
          noisy = r + sensor.range_noise_sigma * unit(rng);
        } while (noisy < kMinNoisyRange);
      }
      r = std::min(noisy, sensor.range_max);
    }
    if (i > 0) {
      OdomIncrement odom = RelativePose(trajectory[i - 1], trajectory[i]);
      odom.dt.x() += noise.odom_xy_sigma * unit(rng);
      odom.dt.y() += noise.odom_xy_sigma * unit(rng);
      odom.dtheta = WrapAngle(odom.dtheta + noise.odom_theta_sigma * unit(rng));
      odom.sigma = sigma;
      rec.odom = odom;
    }
  }
  return ds;
}

Scenario MakeScenario(std::string_view name, int n_poses) {
  if (name == "room") return RoomScenario(n_poses);
  if (name == "sim1-like") return Sim1Scenario(n_poses);
  if (name == "sim2-like") return Sim2Scenario(n_poses);
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

std::vector<std::string> ScenarioNames() { return {"room", "sim1-like", "sim2-like"}; }

}  // namespace occslam

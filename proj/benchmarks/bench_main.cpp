#include <benchmark/benchmark.h>

#include <random>

#include "occslam/grid_map.hpp"
#include "occslam/linear.hpp"
#include "occslam/objective.hpp"
#include "occslam/simulator.hpp"

namespace {

using namespace occslam;

struct RoomFixture {
  Dataset dataset;
  std::vector<Pose2> poses;
  Objective objective;
  GridMap map;
  HitMap hits;

  static RoomFixture Make(double resolution) {
    const Scenario sc = MakeScenario("room");
    Dataset ds = GenerateDataset(sc.world, sc.trajectory, SensorSpec{}, NoiseSpec{});
    std::vector<Pose2> poses = IntegrateOdometry(ds);
    auto scans = SampleDataset(ds, resolution);
    const GridGeometry geom = ComputeGeometry(scans, poses, resolution, 1.0);
    std::vector<std::optional<OdomIncrement>> odom(ds.size());
    for (std::size_t i = 1; i < ds.size(); ++i) odom[i] = ds.records[i].odom;
    Objective obj(std::move(scans), std::move(odom), geom, ObservationOptions{});
    GridMap map = InitializeMap(obj.scans(), poses, geom);
    HitMap hits = ScatterHits(obj.scans(), poses, geom).hits;
    return {std::move(ds), std::move(poses), std::move(obj), std::move(map), std::move(hits)};
  }
};

const RoomFixture& Room() {
  static const RoomFixture fixture = RoomFixture::Make(0.1);
  return fixture;
}

void BM_Raycast(benchmark::State& state) {
  const Scenario sc = MakeScenario("room");
  const SensorSpec sensor;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Raycast(sc.world, sc.trajectory[10], sensor));
  }
  state.SetItemsProcessed(state.iterations() * sensor.n_beams);
}
BENCHMARK(BM_Raycast);

void BM_Interpolate(benchmark::State& state) {
  GridGeometry geom{{0.0, 0.0}, 0.1, 200, 200};
  GridMap map(geom);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> value(-2.0, 2.0), coord(0.0, 200.0);
  for (Eigen::Index i = 0; i < map.values().size(); ++i) map.mutable_values()[i] = value(rng);
  std::vector<Eigen::Vector2d> points(4096);
  for (auto& p : points) p = {coord(rng), coord(rng)};
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& p : points) acc += map.Interpolate(p);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points.size()));
}
BENCHMARK(BM_Interpolate);

void BM_ScatterHits(benchmark::State& state) {
  const RoomFixture& f = Room();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ScatterHits(f.objective.scans(), f.poses, f.map.geometry()));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(TotalSamples(f.objective.scans())));
}
BENCHMARK(BM_ScatterHits)->Unit(benchmark::kMillisecond);

void BM_Cost(benchmark::State& state) {
  const RoomFixture& f = Room();
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.objective.Cost(f.poses, f.map, f.hits, TermWeights{}));
  }
}
BENCHMARK(BM_Cost)->Unit(benchmark::kMillisecond);

void BM_Assemble(benchmark::State& state) {
  const RoomFixture& f = Room();
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.objective.Assemble(f.poses, f.map, f.hits, TermWeights{}));
  }
}
BENCHMARK(BM_Assemble)->Unit(benchmark::kMillisecond);

void BM_SolveLinear(benchmark::State& state) {
  const RoomFixture& f = Room();
  const NormalSystem sys = f.objective.Assemble(f.poses, f.map, f.hits, TermWeights{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveLinear(sys.lhs, sys.rhs));
  }
}
BENCHMARK(BM_SolveLinear)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

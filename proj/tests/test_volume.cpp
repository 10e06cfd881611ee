#include "doctest.h"
#include "lesiontrack/volume.hpp"
#include "support.hpp"

using namespace lesiontrack;

TEST_CASE("world_to_voxel_nearest examples") {
  const Geometry g({8, 8, 8}, {1.0, 1.0, 3.0});
  CHECK(g.world_to_voxel_nearest({2.0, 2.0, 6.0}) == VoxelIndex{2, 2, 2});
  CHECK(g.world_to_voxel_nearest(g.origin()) == VoxelIndex{0, 0, 0});

  const Geometry iso({8, 8, 8}, {1.0, 1.0, 1.0});
  CHECK(iso.world_to_voxel_nearest({2.5, 0.0, 0.0}) == VoxelIndex{3, 0, 0});
  CHECK(iso.world_to_voxel_nearest({-2.5, 0.0, 0.0}) == VoxelIndex{-3, 0, 0});
  CHECK(iso.world_to_voxel_nearest({-40.0, 100.0, 0.4}) == VoxelIndex{-40, 100, 0});
}

TEST_CASE("voxel/world round trips on anisotropic grids") {
  RandomStream rng(11);
  for (int t = 0; t < 200; ++t) {
    const Geometry g({rng.uniform_int(1, 30), rng.uniform_int(1, 30), rng.uniform_int(1, 30)},
                     {rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0), rng.uniform(0.3, 5.0)},
                     {rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(-200, 200)});
    const VoxelIndex v{rng.uniform_int(0, g.dims()[0] - 1), rng.uniform_int(0, g.dims()[1] - 1),
                       rng.uniform_int(0, g.dims()[2] - 1)};
    CHECK(g.world_to_voxel_nearest(g.voxel_to_world(v)) == v);

    WorldPoint p;
    for (int a = 0; a < 3; ++a) p[a] = g.origin()[a] + rng.uniform(0.0, (g.dims()[a] - 1) * g.spacing()[a]);
    const WorldPoint back = g.voxel_to_world(g.world_to_voxel_nearest(p));
    for (int a = 0; a < 3; ++a) CHECK(std::fabs(back[a] - p[a]) <= 0.5 * g.spacing()[a] + 1e-9);
  }
}

TEST_CASE("geometry validation") {
  CHECK_THROWS_AS(Geometry({0, 1, 1}, {1, 1, 1}), Error);
  CHECK_THROWS_AS(Geometry({1, 1, 1}, {1, 0, 1}), Error);
  CHECK_THROWS_AS(Geometry({1, 1, 1}, {1, 1, std::nan("")}), Error);
  CHECK_THROWS_AS(Geometry({1, 1, 1}, {1, 1, 1}, {0, INFINITY, 0}), Error);
  CHECK_NOTHROW(Geometry({1, 1, 1}, {0.5, 1, 3}, {-10, 0, 5}));
}

TEST_CASE("center_world is the midpoint of the voxel centres") {
  const Geometry g({4, 5, 6}, {1.0, 2.0, 3.0}, {10, 20, 30});
  CHECK(g.center_world() == WorldPoint{11.5, 24.0, 37.5});
}

TEST_CASE("storage is x fastest") {
  const Geometry g({3, 4, 5}, {1, 1, 1});
  CHECK(g.linear_index(1, 0, 0) == 1);
  CHECK(g.linear_index(0, 1, 0) == 3);
  CHECK(g.linear_index(0, 0, 1) == 12);
  CHECK(g.voxel_count() == 60);
  CHECK_THROWS_AS(Volume<float>(g, std::vector<float>(59)), Error);
}

TEST_CASE("value-domain conversions") {
  const Geometry g({2, 2, 1}, {1, 1, 1});
  IntensityVolume ok(g, std::vector<float>{0, 1, 1, 0});
  CHECK(count_nonzero(as_mask(ok)) == 2);

  IntensityVolume two(g, std::vector<float>{0, 2, 1, 0});
  CHECK_THROWS_AS(as_mask(two), Error);
  const auto labels = as_labels(two);
  CHECK(labels.at(1, 0, 0) == 2);

  IntensityVolume negative(g, std::vector<float>{0, -1, 1, 0});
  IntensityVolume fractional(g, std::vector<float>{0, 0.5f, 1, 0});
  try {
    as_labels(negative);
    FAIL("expected InvalidMask");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidMask);
  }
  CHECK_THROWS_AS(as_labels(fractional), Error);
  CHECK_THROWS_AS(as_mask(fractional), Error);
}

TEST_CASE("select_labels and binarize") {
  const Geometry g({4, 1, 1}, {1, 1, 1});
  LabelVolume l(g, std::vector<std::int32_t>{0, 1, 2, 3});
  const std::vector<std::int32_t> pick{1, 3};
  const auto m = select_labels(l, pick);
  CHECK(std::vector<std::uint8_t>(m.data().begin(), m.data().end()) == std::vector<std::uint8_t>{0, 1, 0, 1});
  CHECK(count_nonzero(binarize(l)) == 3);
}

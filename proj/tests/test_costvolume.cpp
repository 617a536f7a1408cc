#include <cmath>
#include <filesystem>
#include <limits>

#include <doctest.h>

#include "mvdepth/core/io.hpp"
#include "mvdepth/core/rng.hpp"
#include "mvdepth/costvolume/costvolume.hpp"

using namespace mvdepth;
using namespace mvdepth::costvolume;

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

std::string scratch_file(const std::string& name) {
  static const std::filesystem::path dir = [] {
    auto p = std::filesystem::temp_directory_path() / "mvdepth_test_costvol";
    std::filesystem::create_directories(p);
    return p;
  }();
  return (dir / name).string();
}

ImagePlane random_image(int h, int w, int c, uint64_t seed) {
  Rng rng(seed);
  ImagePlane img(h, w, c);
  for (float& x : img.data) x = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("depth bins are linear with exact endpoints") {
  const DepthBins bins = make_depth_bins(2.0, 45.0, 96);
  REQUIRE(bins.count == 96);
  REQUIRE(bins.values.size() == 96);
  CHECK(bins.values.front() == 2.0);
  CHECK(bins.values.back() == 45.0);
  const double step = (45.0 - 2.0) / 95.0;
  for (int i = 0; i < 96; ++i) {
    CHECK(bins.values[i] == doctest::Approx(2.0 + i * step).epsilon(1e-12));
  }
  for (int i = 1; i < 96; ++i) CHECK(bins.values[i] > bins.values[i - 1]);
}

TEST_CASE("depth bins validate their arguments") {
  CHECK_THROWS_AS(make_depth_bins(2.0, 45.0, 1), std::domain_error);
  CHECK_THROWS_AS(make_depth_bins(0.0, 45.0, 8), std::domain_error);
  CHECK_THROWS_AS(make_depth_bins(-1.0, 45.0, 8), std::domain_error);
  CHECK_THROWS_AS(make_depth_bins(5.0, 5.0, 8), std::domain_error);
  CHECK_THROWS_AS(make_depth_bins(6.0, 5.0, 8), std::domain_error);
}

TEST_CASE("identity pose makes every bin identical") {
  const ImagePlane target = random_image(6, 8, 3, 1);
  const ImagePlane source = random_image(6, 8, 3, 2);
  const CameraIntrinsics k(50.0, 50.0, 3.5, 2.5);
  const CostVolume vol =
      build_cost_volume(target, source, RigidPose::identity(), k,
                        make_depth_bins(1.0, 10.0, 8));
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 8; ++u) {
      double expected = 0.0;
      for (int c = 0; c < 3; ++c) {
        expected += std::abs(target.at(v, u, c) - source.at(v, u, c));
      }
      for (int b = 0; b < 8; ++b) {
        REQUIRE(vol.valid_at(b, v, u));
        CHECK(vol.cost_at(b, v, u) == doctest::Approx(expected).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("lateral sweep costs match a scalar re-computation") {
  // pure lateral translation: u' = u + fx * tx / d, v' = v
  const int h = 8, w = 16;
  const ImagePlane target = random_image(h, w, 3, 3);
  const ImagePlane source = random_image(h, w, 3, 4);
  const double tx = 0.3;
  const CameraIntrinsics k(40.0, 40.0, (w - 1) / 2.0, (h - 1) / 2.0);
  const DepthBins bins = make_depth_bins(2.0, 10.0, 5);
  const CostVolume vol = build_cost_volume(
      target, source, RigidPose::from_translation(tx, 0.0, 0.0), k, bins);

  for (int b = 0; b < bins.count; ++b) {
    const double du = k.fx * tx / bins.values[b];
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const double su = u + du;
        if (su < 0.0 || su > w - 1.0) {
          CHECK(!vol.valid_at(b, v, u));
          CHECK(std::isinf(vol.cost_at(b, v, u)));
          continue;
        }
        const int x0 = static_cast<int>(su);
        const int x1 = std::min(x0 + 1, w - 1);
        const double f = su - x0;
        double expected = 0.0;
        for (int c = 0; c < 3; ++c) {
          const double s =
              (1.0 - f) * source.at(v, x0, c) + f * source.at(v, x1, c);
          expected += std::abs(s - target.at(v, u, c));
        }
        REQUIRE(vol.valid_at(b, v, u));
        CHECK(vol.cost_at(b, v, u) == doctest::Approx(expected).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("channel mean is channel sum divided by the channel count") {
  const ImagePlane target = random_image(5, 7, 3, 7);
  const ImagePlane source = random_image(5, 7, 3, 8);
  const CameraIntrinsics k(30.0, 30.0, 3.0, 2.0);
  const RigidPose pose = RigidPose::from_translation(0.1, 0.0, 0.0);
  const DepthBins bins = make_depth_bins(1.0, 4.0, 4);
  const CostVolume sum =
      build_cost_volume(target, source, pose, k, bins, ChannelNorm::kSum);
  const CostVolume mean =
      build_cost_volume(target, source, pose, k, bins, ChannelNorm::kMean);
  for (std::size_t i = 0; i < sum.cost.size(); ++i) {
    if (std::isinf(sum.cost[i])) {
      CHECK(std::isinf(mean.cost[i]));
    } else {
      CHECK(mean.cost[i] == doctest::Approx(sum.cost[i] / 3.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("depth hints pick the cheapest bin, ties to the smaller depth") {
  CostVolume vol;
  vol.bins = make_depth_bins(1.0, 8.0, 8);
  vol.height = 1;
  vol.width = 3;
  vol.cost.assign(8 * 3, 5.0f);
  vol.validity.assign(8 * 3, 1);
  // pixel 0: unique minimum at bin 6
  vol.cost[vol.index(6, 0, 0)] = 0.5f;
  // pixel 1: tie between bins 2 and 5
  vol.cost[vol.index(2, 0, 1)] = 1.0f;
  vol.cost[vol.index(5, 0, 1)] = 1.0f;
  // pixel 2: no valid bin at all
  for (int b = 0; b < 8; ++b) {
    vol.cost[vol.index(b, 0, 2)] = kInf;
    vol.validity[vol.index(b, 0, 2)] = 0;
  }
  const DepthMap hints = depth_hints(vol);
  CHECK(hints.valid_at(0, 0));
  CHECK(hints.at(0, 0) == doctest::Approx(vol.bins.values[6]));
  CHECK(hints.valid_at(0, 1));
  CHECK(hints.at(0, 1) == doctest::Approx(vol.bins.values[2]));
  CHECK(!hints.valid_at(0, 2));
}

TEST_CASE("infinite cells never win the argmin") {
  CostVolume vol;
  vol.bins = make_depth_bins(1.0, 4.0, 4);
  vol.height = 1;
  vol.width = 1;
  vol.cost = {kInf, 3.0f, 2.0f, kInf};
  vol.validity = {0, 1, 1, 0};
  const DepthMap hints = depth_hints(vol);
  REQUIRE(hints.valid_at(0, 0));
  CHECK(hints.at(0, 0) == doctest::Approx(vol.bins.values[2]));
}

TEST_CASE("consistency mask flags relative deviation above the threshold") {
  DepthMap hints(1, 6);
  DepthMap single(1, 6);
  auto put = [&](int u, float a, float b) {
    hints.set(0, u, a);
    single.set(0, u, b);
  };
  put(0, 2.0f, 1.0f);        // ratio exactly 2: deviation exactly 1, not over
  put(1, 2.00005f, 1.0f);    // just over
  put(2, 1.0f, 2.00005f);    // symmetric in the other direction
  put(3, 3.0f, 3.0f);        // equal
  put(4, 10.0f, 1.0f);       // far apart
  hints.set(0, 5, 9.0f);
  single.set(0, 5, 0.0f, false);  // invalid single depth

  const BinaryMask mask = consistency_mask(hints, single, 1.0);
  CHECK(!mask.at(0, 0));
  CHECK(mask.at(0, 1));
  CHECK(mask.at(0, 2));
  CHECK(!mask.at(0, 3));
  CHECK(mask.at(0, 4));
  CHECK(!mask.at(0, 5));
}

TEST_CASE("consistency threshold maps to a ratio bound") {
  // deviation > t is the same as max ratio > 1 + t
  DepthMap a(1, 2), b(1, 2);
  a.set(0, 0, 1.49f);
  b.set(0, 0, 1.0f);
  a.set(0, 1, 1.51f);
  b.set(0, 1, 1.0f);
  const BinaryMask mask = consistency_mask(a, b, 0.5);
  CHECK(!mask.at(0, 0));
  CHECK(mask.at(0, 1));
}

TEST_CASE("cost volume round-trips through pfm and json") {
  const ImagePlane target = random_image(4, 6, 3, 9);
  const ImagePlane source = random_image(4, 6, 3, 10);
  const CameraIntrinsics k(25.0, 25.0, 2.5, 1.5);
  const CostVolume vol = build_cost_volume(
      target, source, RigidPose::from_translation(0.4, 0.0, 0.0), k,
      make_depth_bins(1.5, 6.0, 7));
  const std::string pfm = scratch_file("vol.pfm");
  const std::string json = scratch_file("vol.json");
  save_cost_volume(vol, pfm, json);

  const CostVolume again = load_cost_volume(pfm, json);
  CHECK(again.bins.d_min == vol.bins.d_min);
  CHECK(again.bins.d_max == vol.bins.d_max);
  CHECK(again.bins.count == vol.bins.count);
  CHECK(again.height == vol.height);
  CHECK(again.width == vol.width);
  REQUIRE(again.cost.size() == vol.cost.size());
  for (std::size_t i = 0; i < vol.cost.size(); ++i) {
    if (std::isinf(vol.cost[i])) {
      CHECK(std::isinf(again.cost[i]));
      CHECK(again.validity[i] == 0);
    } else {
      CHECK(again.cost[i] == vol.cost[i]);  // bit-exact floats
      CHECK(again.validity[i] == 1);
    }
  }
}

TEST_CASE("saved volume stacks bins vertically, first bin on top") {
  const ImagePlane target = random_image(3, 5, 1, 11);
  const ImagePlane source = random_image(3, 5, 1, 12);
  const CameraIntrinsics k(20.0, 20.0, 2.0, 1.0);
  const CostVolume vol =
      build_cost_volume(target, source, RigidPose::identity(), k,
                        make_depth_bins(1.0, 3.0, 4));
  const std::string pfm = scratch_file("stack.pfm");
  save_cost_volume(vol, pfm, scratch_file("stack.json"));
  const ImagePlane stacked = io::read_pfm(pfm);
  REQUIRE(stacked.height == 4 * 3);
  REQUIRE(stacked.width == 5);
  REQUIRE(stacked.channels == 1);
  for (int b = 0; b < 4; ++b) {
    for (int v = 0; v < 3; ++v) {
      for (int u = 0; u < 5; ++u) {
        CHECK(stacked.at(b * 3 + v, u) == vol.cost_at(b, v, u));
      }
    }
  }
}

#include <cmath>

#include <doctest.h>

#include "mvdepth/dynmask/dynmask.hpp"

using namespace mvdepth;
using namespace mvdepth::dynmask;

namespace {

// Ground plane at world height `h` below the camera, backdrop wall at
// `backdrop` for rows at or above the horizon, one object rectangle.
struct SceneMaps {
  DepthMap d_ref;
  DepthMap d_over;
  BinaryMask object;
  BinaryMask co_region;
  BinaryMask con_region;
};

constexpr int kW = 64, kH = 64;
const CameraIntrinsics kK(64.0, 64.0, 31.5, 31.5);

SceneMaps make_scene(float co_factor = 2.5f, float con_factor = 0.625f) {
  SceneMaps s{DepthMap(kH, kW), DepthMap(kH, kW), BinaryMask(kH, kW),
              BinaryMask(kH, kW), BinaryMask(kH, kW)};
  const double height = 1.5;
  for (int v = 0; v < kH; ++v) {
    const double dy = (v - kK.cy) / kK.fy;
    for (int u = 0; u < kW; ++u) {
      if (dy > 1e-3) {
        s.d_ref.set(v, u, static_cast<float>(height / dy));  // ground
      } else {
        s.d_ref.set(v, u, 30.0f);  // backdrop
      }
    }
  }
  // object rectangle at depth 5, fully inside the (-1.5, 1.5) ground band
  for (int v = 16; v <= 40; ++v) {
    for (int u = 10; u <= 25; ++u) {
      s.d_ref.set(v, u, 5.0f);
      s.object.set(v, u, true);
      if (u <= 17) {
        s.co_region.set(v, u, true);
      } else {
        s.con_region.set(v, u, true);
      }
    }
  }
  s.d_over = s.d_ref;
  for (int v = 16; v <= 40; ++v) {
    for (int u = 10; u <= 25; ++u) {
      s.d_over.set(v, u, 5.0f * (u <= 17 ? co_factor : con_factor));
    }
  }
  return s;
}

}  // namespace

TEST_CASE("median align rescales by the ratio of medians") {
  DepthMap over(1, 5), ref(1, 5);
  const float ov[5] = {2.0f, 4.0f, 6.0f, 8.0f, 10.0f};   // median 6
  const float rf[5] = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f};    // median 3
  for (int u = 0; u < 5; ++u) {
    over.set(0, u, ov[u]);
    ref.set(0, u, rf[u]);
  }
  const DepthMap aligned = median_align(over, ref);
  for (int u = 0; u < 5; ++u) {
    CHECK(aligned.at(0, u) == doctest::Approx(ov[u] * 0.5).epsilon(1e-6));
  }
}

TEST_CASE("median align ignores pixels not valid in both maps") {
  DepthMap over(1, 4), ref(1, 4);
  over.set(0, 0, 100.0f);  // ref invalid here: excluded
  over.set(0, 1, 4.0f);
  ref.set(0, 1, 2.0f);
  over.set(0, 2, 8.0f);
  ref.set(0, 2, 4.0f);
  ref.set(0, 3, 50.0f);  // over invalid here: excluded
  const DepthMap aligned = median_align(over, ref);
  CHECK(aligned.at(0, 1) == doctest::Approx(2.0f));
  CHECK(aligned.at(0, 2) == doctest::Approx(4.0f));

  DepthMap disjoint_a(1, 2), disjoint_b(1, 2);
  disjoint_a.set(0, 0, 1.0f);
  disjoint_b.set(0, 1, 1.0f);
  CHECK_THROWS_AS(median_align(disjoint_a, disjoint_b), std::domain_error);
}

TEST_CASE("directional masks use strict thresholds") {
  DepthMap aligned(1, 7), ref(1, 7);
  auto put = [&](int u, float a, float r) {
    aligned.set(0, u, a);
    ref.set(0, u, r);
  };
  put(0, 2.0f, 1.0f);      // exactly 2x: not over
  put(1, 2.001f, 1.0f);    // just past: m_co
  put(2, 0.85f, 1.0f);     // exactly 0.85x: not under
  put(3, 0.849f, 1.0f);    // just under: m_con
  put(4, 1.0f, 1.0f);      // agreement
  put(5, 25.0f, 1.0f);     // way over
  aligned.set(0, 6, 9.0f);
  ref.set(0, 6, 1.0f, false);  // invalid reference

  auto [m_co, m_con] = directional_masks(aligned, ref);
  CHECK(!m_co.at(0, 0));
  CHECK(m_co.at(0, 1));
  CHECK(!m_con.at(0, 2));
  CHECK(m_con.at(0, 3));
  CHECK(!m_co.at(0, 4));
  CHECK(!m_con.at(0, 4));
  CHECK(m_co.at(0, 5));
  CHECK(!m_con.at(0, 5));
  CHECK(!m_co.at(0, 6));
  CHECK(!m_con.at(0, 6));

  CHECK_THROWS_AS(directional_masks(aligned, ref, 1.0, 0.85),
                  std::domain_error);
  CHECK_THROWS_AS(directional_masks(aligned, ref, 2.0, 1.0),
                  std::domain_error);
}

TEST_CASE("ground mask keeps strictly interior heights only") {
  // fy = 10, cy = 2: backprojected y at depth d is (v - 2) / 10 * d
  const CameraIntrinsics k(10.0, 10.0, 2.0, 2.0);
  geometry::GroundPlane plane;
  plane.camera_height = 1.0;
  DepthMap depth(5, 1);
  depth.set(0, 0, 4.999f);  // y = -0.9998: inside
  depth.set(1, 0, 10.0f);   // y = -1 exactly: excluded by strictness
  depth.set(2, 0, 7.0f);    // y = 0: inside
  depth.set(3, 0, 10.0f);   // y = +1 exactly: excluded
  depth.set(4, 0, 5.5f);    // y = +1.1: outside
  const BinaryMask mask = ground_mask(depth, k, plane);
  CHECK(mask.at(0, 0));
  CHECK(!mask.at(1, 0));
  CHECK(mask.at(2, 0));
  CHECK(!mask.at(3, 0));
  CHECK(!mask.at(4, 0));

  DepthMap holed(1, 1);  // invalid depth stays outside the band
  const BinaryMask none = ground_mask(holed, k, plane);
  CHECK(!none.at(0, 0));

  plane.camera_height = 0.0;
  CHECK_THROWS_AS(ground_mask(depth, k, plane), std::domain_error);
}

TEST_CASE("inconsistency mask is the gated union") {
  BinaryMask co(1, 4), con(1, 4), ground(1, 4);
  co.set(0, 0, true);
  con.set(0, 1, true);
  co.set(0, 2, true);
  ground.set(0, 0, true);
  ground.set(0, 1, true);
  ground.set(0, 3, true);
  const BinaryMask m_i = inconsistency_mask(co, con, ground);
  CHECK(m_i.at(0, 0));   // co AND ground
  CHECK(m_i.at(0, 1));   // con AND ground
  CHECK(!m_i.at(0, 2));  // co but off-ground
  CHECK(!m_i.at(0, 3));  // ground but consistent
}

TEST_CASE("full mask pipeline isolates the moving object") {
  const SceneMaps s = make_scene();
  const MaskBundle bundle = generate_masks(s.d_over, s.d_ref, kK);

  CHECK(bundle.provenance.ground_fit_ok);
  CHECK(bundle.provenance.y_g == doctest::Approx(1.5).epsilon(0.02));
  CHECK(bundle.provenance.scale == doctest::Approx(1.0).epsilon(0.02));
  CHECK(bundle.provenance.co_threshold == 2.0);
  CHECK(bundle.provenance.con_threshold == 0.85);

  for (int v = 0; v < kH; ++v) {
    for (int u = 0; u < kW; ++u) {
      CHECK(bundle.masks.m_co.at(v, u) == s.co_region.at(v, u));
      CHECK(bundle.masks.m_con.at(v, u) == s.con_region.at(v, u));
      CHECK(bundle.masks.m_i.at(v, u) == s.object.at(v, u));
    }
  }
}

TEST_CASE("masks are invariant to the scale of the over-fit depth") {
  const SceneMaps s = make_scene();
  const MaskBundle base = generate_masks(s.d_over, s.d_ref, kK);
  for (const float k : {0.5f, 2.0f, 4.0f, 3.0f, 0.1f, 42.0f}) {
    DepthMap scaled(kH, kW);
    for (int v = 0; v < kH; ++v) {
      for (int u = 0; u < kW; ++u) {
        scaled.set(v, u, s.d_over.at(v, u) * k, s.d_over.valid_at(v, u));
      }
    }
    const MaskBundle other = generate_masks(scaled, s.d_ref, kK);
    CHECK(other.masks.m_co.data == base.masks.m_co.data);
    CHECK(other.masks.m_con.data == base.masks.m_con.data);
    CHECK(other.masks.m_ground.data == base.masks.m_ground.data);
    CHECK(other.masks.m_i.data == base.masks.m_i.data);
  }
}

TEST_CASE("failed ground fit degrades to an all-true ground band") {
  // valid depth only well above the horizon: no points to fit a ground to
  DepthMap ref(kH, kW);
  for (int v = 0; v < 16; ++v) {
    for (int u = 0; u < kW; ++u) ref.set(v, u, 30.0f);
  }
  DepthMap over = ref;
  for (int v = 4; v < 8; ++v) {
    for (int u = 10; u < 20; ++u) over.set(v, u, 90.0f);  // 3x: m_co
  }
  const MaskBundle bundle = generate_masks(over, ref, kK);
  CHECK(!bundle.provenance.ground_fit_ok);
  CHECK(bundle.provenance.y_g == 0.0);
  CHECK(bundle.masks.m_ground.count_true() == bundle.masks.m_ground.data.size());
  // with the gate fully open, m_i reduces to the directional union
  CHECK(bundle.masks.m_i.data == bundle.masks.m_co.data);
  CHECK(bundle.masks.m_i.count_true() == 40);
}

TEST_CASE("provenance serializes every audit field") {
  const SceneMaps s = make_scene();
  const MaskBundle bundle = generate_masks(s.d_over, s.d_ref, kK);
  const nlohmann::json j = provenance_to_json(bundle.provenance);
  for (const char* key : {"y_g", "median_over", "median_ref", "scale",
                          "co_threshold", "con_threshold", "ground_fit_ok",
                          "ground_inlier_ratio"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["ground_fit_ok"].get<bool>());
}

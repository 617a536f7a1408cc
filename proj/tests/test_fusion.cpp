#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <doctest.h>

#include "mvdepth/core/io.hpp"
#include "mvdepth/core/rng.hpp"
#include "mvdepth/fusion/fusion.hpp"
#include "mvdepth/geometry/geometry.hpp"

using namespace mvdepth;
using namespace mvdepth::fusion;

namespace {

std::string scratch_file(const std::string& name) {
  static const std::filesystem::path dir = [] {
    auto p = std::filesystem::temp_directory_path() / "mvdepth_test_fusion";
    std::filesystem::create_directories(p);
    return p;
  }();
  return (dir / name).string();
}

ImagePlane random_image(int h, int w, int c, uint64_t seed) {
  Rng rng(seed);
  ImagePlane img(h, w, c);
  for (float& x : img.data) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return img;
}

ConvBlockWeights random_block(int cin, int cout, int stride, Activation act,
                              uint64_t seed) {
  ConvBlockWeights block;
  block.in_channels = cin;
  block.out_channels = cout;
  block.stride = stride;
  block.activation = act;
  Rng rng(seed);
  block.kernels.resize(static_cast<size_t>(9) * cin * cout);
  for (float& k : block.kernels) k = static_cast<float>(rng.uniform(-0.5, 0.5));
  block.biases.resize(cout);
  for (float& b : block.biases) b = static_cast<float>(rng.uniform(-0.2, 0.2));
  return block;
}

// Quadruple-loop oracle for the same convolution contract: zero padding 1,
// given stride, bias, optional ELU. Written independently of the library path.
ImagePlane naive_conv(const ImagePlane& in, const ConvBlockWeights& w) {
  const int oh = (in.height + w.stride - 1) / w.stride;
  const int ow = (in.width + w.stride - 1) / w.stride;
  ImagePlane out(oh, ow, w.out_channels, 0.0f);
  for (int ov = 0; ov < oh; ++ov) {
    for (int ou = 0; ou < ow; ++ou) {
      for (int co = 0; co < w.out_channels; ++co) {
        double acc = w.biases[co];
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const int iv = ov * w.stride + ky - 1;
            const int iu = ou * w.stride + kx - 1;
            if (iv < 0 || iv >= in.height || iu < 0 || iu >= in.width) continue;
            for (int ci = 0; ci < w.in_channels; ++ci) {
              acc += static_cast<double>(in.at(iv, iu, ci)) *
                     w.kernels[((ky * 3 + kx) * w.in_channels + ci) *
                                   w.out_channels +
                               co];
            }
          }
        }
        if (w.activation == Activation::kElu && acc < 0.0) acc = std::expm1(acc);
        out.at(ov, ou, co) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("convolution matches the quadruple-loop oracle") {
  for (const int stride : {1, 2}) {
    for (const Activation act : {Activation::kElu, Activation::kLinear}) {
      const ImagePlane in = random_image(7, 9, 4, 100 + stride);
      const ConvBlockWeights w =
          random_block(4, 5, stride, act, 200 + stride);
      const ImagePlane got = conv2d_forward(in, w);
      const ImagePlane want = naive_conv(in, w);
      REQUIRE(got.height == want.height);
      REQUIRE(got.width == want.width);
      REQUIRE(got.channels == 5);
      for (size_t i = 0; i < got.data.size(); ++i) {
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("stride two takes the ceiling of odd dimensions") {
  const ImagePlane in = random_image(5, 7, 2, 1);
  const ConvBlockWeights w = random_block(2, 3, 2, Activation::kLinear, 2);
  const ImagePlane out = conv2d_forward(in, w);
  CHECK(out.height == 3);
  CHECK(out.width == 4);
}

TEST_CASE("an identity center-tap kernel passes the input through") {
  ConvBlockWeights w;
  w.in_channels = 2;
  w.out_channels = 2;
  w.stride = 1;
  w.activation = Activation::kLinear;
  w.kernels.assign(9 * 2 * 2, 0.0f);
  // center tap (ky = kx = 1), channel-diagonal
  for (int c = 0; c < 2; ++c) {
    w.kernels[((1 * 3 + 1) * 2 + c) * 2 + c] = 1.0f;
  }
  w.biases.assign(2, 0.0f);
  const ImagePlane in = random_image(4, 6, 2, 3);
  const ImagePlane out = conv2d_forward(in, w);
  CHECK(out.data == in.data);
}

TEST_CASE("elu bends negatives and leaves positives alone") {
  ConvBlockWeights w;
  w.in_channels = 1;
  w.out_channels = 1;
  w.stride = 1;
  w.activation = Activation::kElu;
  w.kernels.assign(9, 0.0f);
  w.kernels[(1 * 3 + 1) * 1 * 1] = 1.0f;  // identity center tap
  w.biases.assign(1, 0.0f);
  ImagePlane in(1, 3, 1);
  in.at(0, 0) = -2.0f;
  in.at(0, 1) = 0.0f;
  in.at(0, 2) = 1.5f;
  const ImagePlane out = conv2d_forward(in, w);
  CHECK(out.at(0, 0) == doctest::Approx(std::expm1(-2.0)).epsilon(1e-6));
  CHECK(out.at(0, 1) == 0.0f);
  CHECK(out.at(0, 2) == 1.5f);
}

TEST_CASE("convolution validates its configuration") {
  const ImagePlane in = random_image(4, 4, 2, 4);
  ConvBlockWeights w = random_block(2, 3, 1, Activation::kElu, 5);
  w.stride = 3;
  CHECK_THROWS_AS(conv2d_forward(in, w), std::domain_error);
  w = random_block(2, 3, 1, Activation::kElu, 5);
  w.kernels.pop_back();
  CHECK_THROWS_AS(conv2d_forward(in, w), DimensionError);
  w = random_block(3, 3, 1, Activation::kElu, 5);  // channel mismatch
  CHECK_THROWS_AS(conv2d_forward(in, w), DimensionError);
}

TEST_CASE("residual block is its two convs plus the projection, nothing after") {
  const ImagePlane in = random_image(8, 8, 3, 6);
  const auto convs = std::make_pair(
      random_block(3, 4, 2, Activation::kElu, 7),
      random_block(4, 4, 1, Activation::kElu, 8));
  ConvBlockWeights proj = random_block(3, 4, 2, Activation::kLinear, 9);
  // keep only the center tap so the shortcut is a true 1x1
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      if (ky == 1 && kx == 1) continue;
      for (int ci = 0; ci < 3; ++ci) {
        for (int co = 0; co < 4; ++co) {
          proj.kernels[((ky * 3 + kx) * 3 + ci) * 4 + co] = 0.0f;
        }
      }
    }
  }
  const ImagePlane got = resblock_forward(in, convs, proj);
  const ImagePlane main_path =
      conv2d_forward(conv2d_forward(in, convs.first), convs.second);
  const ImagePlane shortcut = conv2d_forward(in, proj);
  REQUIRE(got.same_shape(main_path));
  bool saw_negative = false;
  for (size_t i = 0; i < got.data.size(); ++i) {
    CHECK(got.data[i] ==
          doctest::Approx(main_path.data[i] + shortcut.data[i]).epsilon(1e-5));
    if (got.data[i] < -1.0f) saw_negative = true;
  }
  // sums below -1 are impossible after any ELU, so none ran after the sum
  CHECK(saw_negative);
}

TEST_CASE("residual block rejects non-chaining shapes") {
  const ImagePlane in = random_image(8, 8, 3, 10);
  auto convs = std::make_pair(random_block(3, 4, 2, Activation::kElu, 11),
                              random_block(4, 4, 1, Activation::kElu, 12));
  ConvBlockWeights proj = random_block(3, 4, 2, Activation::kLinear, 13);
  convs.second.stride = 2;  // wrong: second conv must keep resolution
  CHECK_THROWS_AS(resblock_forward(in, convs, proj), DimensionError);
  convs.second.stride = 1;
  convs.second.in_channels = 5;  // wrong: must accept conv1's output
  convs.second.kernels.resize(9 * 5 * 4);
  CHECK_THROWS_AS(resblock_forward(in, convs, proj), DimensionError);
}

TEST_CASE("upsample matches bilinear sampling at half-pixel offsets") {
  const ImagePlane in = random_image(5, 6, 3, 14);
  const ImagePlane up = upsample_bilinear_2x(in);
  REQUIRE(up.height == 10);
  REQUIRE(up.width == 12);
  // align-corners-false: output pixel centers sit at (i + 0.5)/2 - 0.5 in
  // input coordinates, clamped at the borders
  geometry::CorrespondenceGrid grid(10, 12);
  for (int v = 0; v < 10; ++v) {
    for (int u = 0; u < 12; ++u) {
      const size_t i = grid.index(v, u);
      grid.u[i] = static_cast<float>(
          std::clamp((u + 0.5) / 2.0 - 0.5, 0.0, 5.0));
      grid.v[i] = static_cast<float>(
          std::clamp((v + 0.5) / 2.0 - 0.5, 0.0, 4.0));
      grid.valid[i] = 1;
    }
  }
  auto [want, mask] = geometry::bilinear_sample(in, grid);
  REQUIRE(mask.count_true() == 120);
  for (size_t i = 0; i < up.data.size(); ++i) {
    CHECK(up.data[i] == doctest::Approx(want.data[i]).epsilon(1e-6));
  }
}

TEST_CASE("fusion concatenates the advertised channel slices") {
  const int c1 = 6, c2 = 8, width = 16;
  const ImagePlane f1 = random_image(12, 16, c1, 20);
  const ImagePlane f2 = random_image(6, 8, c2, 21);
  const FusionWeights weights = random_fusion_weights(99, c1, c2, width);
  const FusedFeatures fused = msfusion_forward(f1, f2, weights);

  REQUIRE(fused.f12.height == 6);
  REQUIRE(fused.f12.width == 8);
  REQUIRE(fused.f12.channels == width);
  REQUIRE(fused.f32.height == 6);
  REQUIRE(fused.f32.width == 8);
  REQUIRE(fused.f32.channels == width);
  REQUIRE(fused.fms.channels == c2 + 2 * width);

  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 8; ++u) {
      for (int c = 0; c < c2; ++c) {
        CHECK(fused.fms.at(v, u, c) == f2.at(v, u, c));
      }
      for (int c = 0; c < width; ++c) {
        CHECK(fused.fms.at(v, u, c2 + c) == fused.f12.at(v, u, c));
        CHECK(fused.fms.at(v, u, c2 + width + c) == fused.f32.at(v, u, c));
      }
    }
  }
}

TEST_CASE("fusion equals a from-parts recomputation") {
  const int c1 = 4, c2 = 5, width = 8;
  const ImagePlane f1 = random_image(12, 16, c1, 30);
  const ImagePlane f2 = random_image(6, 8, c2, 31);
  const FusionWeights w = random_fusion_weights(7, c1, c2, width);
  const FusedFeatures fused = msfusion_forward(f1, f2, w);

  // f12 by hand: conv_f1 downsamples f1, concat with f2, then conv_merge
  const ImagePlane down = conv2d_forward(f1, w.conv_f1);
  REQUIRE(down.height == 6);
  REQUIRE(down.width == 8);
  ImagePlane cat(6, 8, down.channels + c2);
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 8; ++u) {
      for (int c = 0; c < down.channels; ++c) {
        cat.at(v, u, c) = down.at(v, u, c);
      }
      for (int c = 0; c < c2; ++c) {
        cat.at(v, u, down.channels + c) = f2.at(v, u, c);
      }
    }
  }
  const ImagePlane f12 = conv2d_forward(cat, w.conv_merge);
  CHECK(f12.data == fused.f12.data);

  // f32 by hand: residual block then 2x upsample back to f2 resolution
  const ImagePlane f32 = upsample_bilinear_2x(resblock_forward(
      f2, std::make_pair(w.res_conv1, w.res_conv2), w.res_projection));
  REQUIRE(f32.height == 6);
  REQUIRE(f32.width == 8);
  CHECK(f32.data == fused.f32.data);
}

TEST_CASE("fusion rejects resolution mismatches") {
  const FusionWeights w = random_fusion_weights(1, 3, 3, 4);
  const ImagePlane f1 = random_image(10, 8, 3, 1);
  const ImagePlane f2 = random_image(6, 4, 3, 2);  // 10 is not 2 * 6
  CHECK_THROWS_AS(msfusion_forward(f1, f2, w), DimensionError);
  const ImagePlane f1_odd = random_image(10, 14, 3, 3);
  const ImagePlane f2_odd = random_image(5, 7, 3, 4);  // odd: cannot re-align
  CHECK_THROWS_AS(msfusion_forward(f1_odd, f2_odd, w), DimensionError);
}

TEST_CASE("weights round-trip through blob and manifest") {
  const FusionWeights w = random_fusion_weights(123, 5, 6, 12);
  const std::string blob = scratch_file("w.bin");
  const std::string manifest = scratch_file("w.json");
  save_fusion_weights(w, blob, manifest);
  const FusionWeights again = load_fusion_weights(blob, manifest);

  auto check_block = [](const ConvBlockWeights& a, const ConvBlockWeights& b) {
    CHECK(a.in_channels == b.in_channels);
    CHECK(a.out_channels == b.out_channels);
    CHECK(a.stride == b.stride);
    CHECK(a.activation == b.activation);
    CHECK(a.kernels == b.kernels);
    CHECK(a.biases == b.biases);
  };
  check_block(w.conv_f1, again.conv_f1);
  check_block(w.conv_merge, again.conv_merge);
  check_block(w.res_conv1, again.res_conv1);
  check_block(w.res_conv2, again.res_conv2);
  check_block(w.res_projection, again.res_projection);

  // identical forward results after the round trip
  const ImagePlane f1 = random_image(8, 8, 5, 40);
  const ImagePlane f2 = random_image(4, 4, 6, 41);
  const FusedFeatures a = msfusion_forward(f1, f2, w);
  const FusedFeatures b = msfusion_forward(f1, f2, again);
  CHECK(a.fms.data == b.fms.data);
}

TEST_CASE("weight loading rejects truncated and oversized blobs") {
  const FusionWeights w = random_fusion_weights(5, 3, 4, 8);
  const std::string blob = scratch_file("t.bin");
  const std::string manifest = scratch_file("t.json");
  save_fusion_weights(w, blob, manifest);

  std::ifstream in(blob, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  in.close();

  const std::string shorter = scratch_file("short.bin");
  std::ofstream(shorter, std::ios::binary)
      .write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 4));
  CHECK_THROWS_AS(load_fusion_weights(shorter, manifest), IoError);

  const std::string longer = scratch_file("long.bin");
  {
    std::ofstream outf(longer, std::ios::binary);
    outf.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    const float extra = 0.0f;
    outf.write(reinterpret_cast<const char*>(&extra), 4);
  }
  CHECK_THROWS_AS(load_fusion_weights(longer, manifest), IoError);
}

TEST_CASE("random weights have the projection zeroed off-center") {
  const FusionWeights w = random_fusion_weights(77, 4, 6, 10);
  CHECK(w.res_projection.activation == Activation::kLinear);
  const int cin = w.res_projection.in_channels;
  const int cout = w.res_projection.out_channels;
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      for (int ci = 0; ci < cin; ++ci) {
        for (int co = 0; co < cout; ++co) {
          const float k =
              w.res_projection.kernels[((ky * 3 + kx) * cin + ci) * cout + co];
          if (ky == 1 && kx == 1) continue;
          CHECK(k == 0.0f);
        }
      }
    }
  }
}

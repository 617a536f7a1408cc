#include "mvdepth/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mvdepth/core/io.hpp"
#include "mvdepth/core/rng.hpp"

namespace mvdepth::fusion {

namespace {

void validate_block(const ConvBlockWeights& w, const char* name) {
  if (w.in_channels < 1 || w.out_channels < 1) {
    throw DimensionError(std::string(name) + ": channel counts must be >= 1");
  }
  if (w.stride != 1 && w.stride != 2) {
    throw std::domain_error(std::string(name) + ": stride must be 1 or 2");
  }
  const std::size_t want_k =
      9u * static_cast<std::size_t>(w.in_channels) * w.out_channels;
  if (w.kernels.size() != want_k ||
      w.biases.size() != static_cast<std::size_t>(w.out_channels)) {
    throw DimensionError(std::string(name) + ": weight buffer sizes disagree " +
                         "with the declared channel counts");
  }
}

double activate(double x, Activation activation) {
  if (activation == Activation::kLinear) return x;
  return x > 0.0 ? x : std::expm1(x);
}

ImagePlane concat_channels(const ImagePlane& a, const ImagePlane& b) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError("concat: spatial dimensions differ");
  }
  ImagePlane out(a.height, a.width, a.channels + b.channels);
  for (int v = 0; v < a.height; ++v) {
    for (int u = 0; u < a.width; ++u) {
      for (int c = 0; c < a.channels; ++c) out.at(v, u, c) = a.at(v, u, c);
      for (int c = 0; c < b.channels; ++c)
        out.at(v, u, a.channels + c) = b.at(v, u, c);
    }
  }
  return out;
}

ImagePlane resize_bilinear(const ImagePlane& input, int out_h, int out_w) {
  ImagePlane out(out_h, out_w, input.channels);
  const double sy = static_cast<double>(input.height) / out_h;
  const double sx = static_cast<double>(input.width) / out_w;
  for (int v = 0; v < out_h; ++v) {
    double y = (v + 0.5) * sy - 0.5;
    y = std::clamp(y, 0.0, static_cast<double>(input.height - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, input.height - 1);
    const double fy = y - y0;
    for (int u = 0; u < out_w; ++u) {
      double x = (u + 0.5) * sx - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(input.width - 1));
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, input.width - 1);
      const double fx = x - x0;
      for (int c = 0; c < input.channels; ++c) {
        const double top = (1.0 - fx) * input.at(y0, x0, c) +
                           fx * input.at(y0, x1, c);
        const double bottom = (1.0 - fx) * input.at(y1, x0, c) +
                              fx * input.at(y1, x1, c);
        out.at(v, u, c) = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

}  // namespace

ImagePlane conv2d_forward(const ImagePlane& input,
                          const ConvBlockWeights& weights) {
  validate_block(weights, "conv2d_forward");
  if (input.channels != weights.in_channels) {
    throw DimensionError("conv2d_forward: input has " +
                         std::to_string(input.channels) +
                         " channels, weights expect " +
                         std::to_string(weights.in_channels));
  }
  const int out_h = (input.height + weights.stride - 1) / weights.stride;
  const int out_w = (input.width + weights.stride - 1) / weights.stride;
  ImagePlane out(out_h, out_w, weights.out_channels);
  for (int vo = 0; vo < out_h; ++vo) {
    for (int uo = 0; uo < out_w; ++uo) {
      for (int co = 0; co < weights.out_channels; ++co) {
        double acc = weights.biases[co];
        for (int ky = 0; ky < 3; ++ky) {
          const int vi = vo * weights.stride + ky - 1;
          if (vi < 0 || vi >= input.height) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ui = uo * weights.stride + kx - 1;
            if (ui < 0 || ui >= input.width) continue;
            const std::size_t base =
                (static_cast<std::size_t>(ky * 3 + kx) * weights.in_channels);
            for (int ci = 0; ci < weights.in_channels; ++ci) {
              acc += static_cast<double>(
                         weights.kernels[(base + ci) * weights.out_channels +
                                         co]) *
                     input.at(vi, ui, ci);
            }
          }
        }
        out.at(vo, uo, co) =
            static_cast<float>(activate(acc, weights.activation));
      }
    }
  }
  return out;
}

ImagePlane resblock_forward(
    const ImagePlane& input,
    const std::pair<ConvBlockWeights, ConvBlockWeights>& convs,
    const ConvBlockWeights& projection) {
  if (convs.first.stride != 2 || convs.second.stride != 1 ||
      projection.stride != 2) {
    throw DimensionError(
        "resblock_forward: strides must be 2, 1 and 2 (projection)");
  }
  if (convs.second.in_channels != convs.first.out_channels ||
      projection.in_channels != convs.first.in_channels ||
      projection.out_channels != convs.second.out_channels) {
    throw DimensionError("resblock_forward: block channels do not chain");
  }
  const ImagePlane main_path =
      conv2d_forward(conv2d_forward(input, convs.first), convs.second);
  const ImagePlane shortcut = conv2d_forward(input, projection);
  ImagePlane out = main_path;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] += shortcut.data[i];
  }
  return out;
}

ImagePlane upsample_bilinear_2x(const ImagePlane& input) {
  return resize_bilinear(input, input.height * 2, input.width * 2);
}

FusedFeatures msfusion_forward(const ImagePlane& f1, const ImagePlane& f2,
                               const FusionWeights& weights) {
  if (f1.height != 2 * f2.height || f1.width != 2 * f2.width) {
    throw DimensionError("msfusion_forward: f1 must be exactly 2x f2's size");
  }
  if (f2.height % 2 != 0 || f2.width % 2 != 0) {
    throw DimensionError(
        "msfusion_forward: f2 dims must be even so the residual path "
        "re-aligns after upsampling");
  }
  FusedFeatures out;
  const ImagePlane f1_down = conv2d_forward(f1, weights.conv_f1);
  out.f12 = conv2d_forward(concat_channels(f1_down, f2), weights.conv_merge);
  const ImagePlane res = resblock_forward(
      f2, {weights.res_conv1, weights.res_conv2}, weights.res_projection);
  out.f32 = upsample_bilinear_2x(res);
  out.fms = concat_channels(concat_channels(f2, out.f12), out.f32);
  return out;
}

FusionWeights random_fusion_weights(std::uint64_t seed, int c1, int c2,
                                    int width) {
  if (c1 < 1 || c2 < 1 || width < 1) {
    throw std::domain_error(
        "random_fusion_weights: channel counts must be >= 1");
  }
  Rng rng(seed);
  auto make_block = [&](int in, int out, int stride, Activation activation) {
    ConvBlockWeights w;
    w.in_channels = in;
    w.out_channels = out;
    w.stride = stride;
    w.activation = activation;
    w.kernels.resize(9u * static_cast<std::size_t>(in) * out);
    w.biases.assign(out, 0.0f);
    const double scale = std::sqrt(2.0 / (9.0 * in));
    for (float& k : w.kernels) {
      k = static_cast<float>(rng.normal() * scale);
    }
    return w;
  };
  FusionWeights weights;
  weights.conv_f1 = make_block(c1, width, 2, Activation::kElu);
  weights.conv_merge = make_block(width + c2, width, 1, Activation::kElu);
  weights.res_conv1 = make_block(c2, width, 2, Activation::kElu);
  weights.res_conv2 = make_block(width, width, 1, Activation::kElu);
  weights.res_projection = make_block(c2, width, 2, Activation::kLinear);
  // keep only the center tap so the shortcut is a true 1x1 projection
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      if (ky == 1 && kx == 1) continue;
      for (int ci = 0; ci < c2; ++ci) {
        for (int co = 0; co < width; ++co) {
          weights.res_projection
              .kernels[((static_cast<std::size_t>(ky) * 3 + kx) * c2 + ci) *
                           width +
                       co] = 0.0f;
        }
      }
    }
  }
  return weights;
}

namespace {

bool host_little_endian() {
  const std::uint16_t probe = 1;
  return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

void byteswap_floats(std::vector<float>& values) {
  for (float& f : values) {
    auto* b = reinterpret_cast<std::uint8_t*>(&f);
    std::swap(b[0], b[3]);
    std::swap(b[1], b[2]);
  }
}

nlohmann::json block_manifest(const ConvBlockWeights& w) {
  nlohmann::json j;
  j["in_channels"] = w.in_channels;
  j["out_channels"] = w.out_channels;
  j["stride"] = w.stride;
  j["activation"] = w.activation == Activation::kElu ? "elu" : "linear";
  return j;
}

ConvBlockWeights block_from_manifest(const nlohmann::json& j,
                                     const std::string& json_path) {
  ConvBlockWeights w;
  try {
    w.in_channels = j.at("in_channels").get<int>();
    w.out_channels = j.at("out_channels").get<int>();
    w.stride = j.at("stride").get<int>();
    const std::string activation = j.at("activation").get<std::string>();
    if (activation == "elu") {
      w.activation = Activation::kElu;
    } else if (activation == "linear") {
      w.activation = Activation::kLinear;
    } else {
      throw IoError(json_path + ": unknown activation \"" + activation + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(json_path + ": bad block manifest (" + e.what() + ")");
  }
  return w;
}

constexpr const char* kBlockOrder[5] = {"conv_f1", "conv_merge", "res_conv1",
                                        "res_conv2", "res_projection"};

}  // namespace

void save_fusion_weights(const FusionWeights& weights,
                         const std::string& blob_path,
                         const std::string& json_path) {
  const ConvBlockWeights* blocks[5] = {
      &weights.conv_f1, &weights.conv_merge, &weights.res_conv1,
      &weights.res_conv2, &weights.res_projection};
  std::vector<float> flat;
  nlohmann::json manifest;
  for (int i = 0; i < 5; ++i) {
    validate_block(*blocks[i], kBlockOrder[i]);
    manifest[kBlockOrder[i]] = block_manifest(*blocks[i]);
    flat.insert(flat.end(), blocks[i]->kernels.begin(),
                blocks[i]->kernels.end());
    flat.insert(flat.end(), blocks[i]->biases.begin(),
                blocks[i]->biases.end());
  }
  manifest["float_count"] = flat.size();
  if (!host_little_endian()) byteswap_floats(flat);
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(blob_path.c_str(), "wb"), &std::fclose);
  if (!f) throw IoError(blob_path + ": cannot open for writing");
  if (std::fwrite(flat.data(), sizeof(float), flat.size(), f.get()) !=
      flat.size()) {
    throw IoError(blob_path + ": short write");
  }
  io::write_text_file(json_path, manifest.dump(2) + "\n");
}

FusionWeights load_fusion_weights(const std::string& blob_path,
                                  const std::string& json_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text_file(json_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(json_path + ": not valid JSON (" + e.what() + ")");
  }
  FusionWeights weights;
  ConvBlockWeights* blocks[5] = {&weights.conv_f1, &weights.conv_merge,
                                 &weights.res_conv1, &weights.res_conv2,
                                 &weights.res_projection};
  std::size_t total = 0;
  for (int i = 0; i < 5; ++i) {
    if (!manifest.contains(kBlockOrder[i])) {
      throw IoError(json_path + ": manifest is missing block \"" +
                    kBlockOrder[i] + "\"");
    }
    *blocks[i] = block_from_manifest(manifest[kBlockOrder[i]], json_path);
    total += 9u * static_cast<std::size_t>(blocks[i]->in_channels) *
                 blocks[i]->out_channels +
             blocks[i]->out_channels;
  }
  std::vector<float> flat(total);
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
      std::fopen(blob_path.c_str(), "rb"), &std::fclose);
  if (!f) throw IoError(blob_path + ": cannot open for reading");
  if (std::fread(flat.data(), sizeof(float), total, f.get()) != total) {
    throw IoError(blob_path + ": blob holds fewer floats than the manifest " +
                  "declares (" + std::to_string(total) + " expected)");
  }
  if (std::fgetc(f.get()) != EOF) {
    throw IoError(blob_path + ": blob holds more floats than the manifest " +
                  "declares");
  }
  if (!host_little_endian()) byteswap_floats(flat);
  std::size_t cursor = 0;
  for (int i = 0; i < 5; ++i) {
    const std::size_t nk = 9u *
                           static_cast<std::size_t>(blocks[i]->in_channels) *
                           blocks[i]->out_channels;
    const std::size_t nb = blocks[i]->out_channels;
    blocks[i]->kernels.assign(flat.begin() + cursor, flat.begin() + cursor + nk);
    cursor += nk;
    blocks[i]->biases.assign(flat.begin() + cursor, flat.begin() + cursor + nb);
    cursor += nb;
    validate_block(*blocks[i], kBlockOrder[i]);
  }
  return weights;
}

}  // namespace mvdepth::fusion

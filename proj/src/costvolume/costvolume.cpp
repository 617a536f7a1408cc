#include "mvdepth/costvolume/costvolume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "mvdepth/core/io.hpp"
#include "mvdepth/geometry/geometry.hpp"

namespace mvdepth::costvolume {

DepthBins make_depth_bins(double d_min, double d_max, int count) {
  if (count < 2) {
    throw std::domain_error("make_depth_bins: need at least 2 bins, got " +
                            std::to_string(count));
  }
  if (!(d_min > 0.0) || !(d_min < d_max) || !std::isfinite(d_min) ||
      !std::isfinite(d_max)) {
    throw std::domain_error("make_depth_bins: require 0 < d_min < d_max");
  }
  DepthBins bins;
  bins.d_min = d_min;
  bins.d_max = d_max;
  bins.count = count;
  bins.values.resize(count);
  const double step = (d_max - d_min) / (count - 1);
  for (int i = 0; i < count; ++i) {
    bins.values[i] = d_min + i * step;
  }
  bins.values.front() = d_min;
  bins.values.back() = d_max;
  return bins;
}

CostVolume build_cost_volume(const ImagePlane& f_target,
                             const ImagePlane& f_source, const RigidPose& pose,
                             const CameraIntrinsics& intrinsics,
                             const DepthBins& bins, ChannelNorm norm) {
  if (!f_target.same_shape(f_source)) {
    throw DimensionError("build_cost_volume: feature shapes differ");
  }
  const int h = f_target.height;
  const int w = f_target.width;
  const int channels = f_target.channels;
  CostVolume volume;
  volume.bins = bins;
  volume.height = h;
  volume.width = w;
  const std::size_t cells =
      static_cast<std::size_t>(bins.count) * h * w;
  volume.cost.assign(cells, std::numeric_limits<float>::infinity());
  volume.validity.assign(cells, 0);

  DepthMap plane(h, w);
  for (int bin = 0; bin < bins.count; ++bin) {
    const float d = static_cast<float>(bins.values[bin]);
    std::fill(plane.data.begin(), plane.data.end(), d);
    std::fill(plane.valid.begin(), plane.valid.end(),
              static_cast<std::uint8_t>(1));
    const geometry::CorrespondenceGrid grid =
        geometry::warp_grid(plane, pose, intrinsics);
    const auto [warped, mask] = geometry::bilinear_sample(f_source, grid);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        if (!mask.at(v, u)) continue;
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          acc += std::abs(static_cast<double>(f_target.at(v, u, c)) -
                          static_cast<double>(warped.at(v, u, c)));
        }
        if (norm == ChannelNorm::kMean) acc /= channels;
        const std::size_t idx = volume.index(bin, v, u);
        volume.cost[idx] = static_cast<float>(acc);
        volume.validity[idx] = 1;
      }
    }
  }
  return volume;
}

DepthMap depth_hints(const CostVolume& volume) {
  DepthMap hints(volume.height, volume.width);
  for (int v = 0; v < volume.height; ++v) {
    for (int u = 0; u < volume.width; ++u) {
      float best_cost = std::numeric_limits<float>::infinity();
      int best_bin = -1;
      for (int bin = 0; bin < volume.bins.count; ++bin) {
        if (!volume.valid_at(bin, v, u)) continue;
        const float c = volume.cost_at(bin, v, u);
        if (best_bin < 0 || c < best_cost) {
          best_cost = c;
          best_bin = bin;
        }
      }
      if (best_bin >= 0) {
        hints.set(v, u, static_cast<float>(volume.bins.values[best_bin]));
      }
    }
  }
  return hints;
}

BinaryMask consistency_mask(const DepthMap& d_hints, const DepthMap& d_single,
                            double threshold) {
  if (d_hints.height != d_single.height || d_hints.width != d_single.width) {
    throw DimensionError("consistency_mask: depth dimensions differ");
  }
  BinaryMask mask(d_hints.height, d_hints.width);
  for (int v = 0; v < d_hints.height; ++v) {
    for (int u = 0; u < d_hints.width; ++u) {
      if (!d_hints.valid_at(v, u) || !d_single.valid_at(v, u)) continue;
      const double a = d_hints.at(v, u);
      const double b = d_single.at(v, u);
      if (!(a > 0.0) || !(b > 0.0)) continue;
      const double deviation = std::max((a - b) / b, (b - a) / a);
      mask.set(v, u, deviation > threshold);
    }
  }
  return mask;
}

void save_cost_volume(const CostVolume& volume, const std::string& pfm_path,
                      const std::string& json_path) {
  ImagePlane stack = new_image_plane(volume.bins.count * volume.height,
                                     volume.width, 1, 0.0f);
  for (int bin = 0; bin < volume.bins.count; ++bin) {
    for (int v = 0; v < volume.height; ++v) {
      for (int u = 0; u < volume.width; ++u) {
        stack.at(bin * volume.height + v, u, 0) = volume.cost_at(bin, v, u);
      }
    }
  }
  io::write_pfm(pfm_path, stack);
  nlohmann::json j;
  j["d_min"] = volume.bins.d_min;
  j["d_max"] = volume.bins.d_max;
  j["D"] = volume.bins.count;
  j["height"] = volume.height;
  j["width"] = volume.width;
  io::write_text_file(json_path, j.dump(2) + "\n");
}

CostVolume load_cost_volume(const std::string& pfm_path,
                            const std::string& json_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text_file(json_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(json_path + ": not valid JSON (" + e.what() + ")");
  }
  if (!j.contains("d_min") || !j.contains("d_max") || !j.contains("D") ||
      !j.contains("height") || !j.contains("width")) {
    throw IoError(json_path +
                  ": cost volume header needs d_min, d_max, D, height, width");
  }
  const int count = j.at("D").get<int>();
  const int h = j.at("height").get<int>();
  const int w = j.at("width").get<int>();
  CostVolume volume;
  try {
    volume.bins = make_depth_bins(j.at("d_min").get<double>(),
                                  j.at("d_max").get<double>(), count);
  } catch (const std::domain_error& e) {
    throw IoError(json_path + ": " + e.what());
  }
  const ImagePlane stack = io::read_pfm(pfm_path);
  if (stack.channels != 1 || stack.height != count * h || stack.width != w) {
    throw IoError(pfm_path + ": cost stack dimensions disagree with " +
                  json_path);
  }
  volume.height = h;
  volume.width = w;
  const std::size_t cells = static_cast<std::size_t>(count) * h * w;
  volume.cost.resize(cells);
  volume.validity.resize(cells);
  for (int bin = 0; bin < count; ++bin) {
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const float c = stack.at(bin * h + v, u, 0);
        const std::size_t idx = volume.index(bin, v, u);
        volume.cost[idx] = c;
        volume.validity[idx] = std::isfinite(c) ? 1 : 0;
      }
    }
  }
  return volume;
}

}  // namespace mvdepth::costvolume

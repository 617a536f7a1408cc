#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvdepth/core/camera.hpp"
#include "mvdepth/core/types.hpp"

namespace mvdepth::costvolume {

/// Linearly spaced depth hypotheses with exact endpoints.
struct DepthBins {
  double d_min = 0.0;
  double d_max = 0.0;
  int count = 0;
  std::vector<double> values;
};

/// How matching cost aggregates over feature channels.
enum class ChannelNorm {
  kSum,   // sum of absolute channel differences
  kMean,  // mean of absolute channel differences
};

/// Plane-sweep matching cost, cost[bin][v][u]. Cells whose warp left the
/// source frame carry +inf cost and validity 0.
struct CostVolume {
  DepthBins bins;
  int height = 0;
  int width = 0;
  std::vector<float> cost;
  std::vector<std::uint8_t> validity;

  std::size_t index(int bin, int v, int u) const {
    return (static_cast<std::size_t>(bin) * height + v) * width + u;
  }
  float cost_at(int bin, int v, int u) const { return cost[index(bin, v, u)]; }
  bool valid_at(int bin, int v, int u) const {
    return validity[index(bin, v, u)] != 0;
  }
};

/// d_i = d_min + i * (d_max - d_min) / (count - 1), endpoints exact.
/// Throws std::domain_error unless 0 < d_min < d_max and count >= 2.
DepthBins make_depth_bins(double d_min, double d_max, int count);

/// For each bin, warp f_source into the target view through a constant-depth
/// plane and record the per-pixel L1 feature distance to f_target.
/// `pose` maps target-camera points into the source camera; `intrinsics` are
/// expressed at the feature resolution.
CostVolume build_cost_volume(const ImagePlane& f_target,
                             const ImagePlane& f_source, const RigidPose& pose,
                             const CameraIntrinsics& intrinsics,
                             const DepthBins& bins,
                             ChannelNorm norm = ChannelNorm::kSum);

/// Per-pixel depth of the cheapest valid bin; ties go to the smaller depth;
/// pixels with no valid bin come back invalid.
DepthMap depth_hints(const CostVolume& volume);

/// True where two positive depths disagree by more than `threshold` relative
/// deviation, i.e. max((a-b)/b, (b-a)/a) > threshold; false when either pixel
/// is invalid.
BinaryMask consistency_mask(const DepthMap& d_hints, const DepthMap& d_single,
                            double threshold = 1.0);

/// Cost slices stacked vertically (bin 0 first) in one PFM, plus a JSON
/// header {d_min, d_max, D, height, width}. Invalid cells round-trip as +inf.
void save_cost_volume(const CostVolume& volume, const std::string& pfm_path,
                      const std::string& json_path);
CostVolume load_cost_volume(const std::string& pfm_path,
                            const std::string& json_path);

}  // namespace mvdepth::costvolume

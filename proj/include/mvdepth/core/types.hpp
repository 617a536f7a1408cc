#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvdepth {

/// Raster dimensions disagree with what an operation requires.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// File could not be read/written or its contents are ill-formed.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Ground-plane estimation did not produce a usable model.
class GroundFitError : public std::runtime_error {
 public:
  explicit GroundFitError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense H x W x C float raster. Carrier for images, features, per-pixel
/// losses and anything else defined densely on the pixel grid. Data is
/// row-major with interleaved channels: index = (v * width + u) * channels + c.
struct ImagePlane {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImagePlane() = default;
  ImagePlane(int height_, int width_, int channels_, float fill = 0.0f)
      : height(height_), width(width_), channels(channels_) {
    if (height < 1 || width < 1 || channels < 1) {
      throw DimensionError("ImagePlane: dimensions must be >= 1, got " + std::to_string(height_) +
                           "x" + std::to_string(width_) + "x" + std::to_string(channels_));
    }
    data.assign(static_cast<size_t>(height) * width * channels, fill);
  }

  float& at(int v, int u, int c = 0) {
    return data[(static_cast<size_t>(v) * width + u) * channels + c];
  }
  float at(int v, int u, int c = 0) const {
    return data[(static_cast<size_t>(v) * width + u) * channels + c];
  }

  bool same_shape(const ImagePlane& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }

  bool all_finite() const {
    for (float x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

/// Per-pixel depth with an explicit validity channel. Valid pixels carry
/// depth > 0 in scene units; invalid pixels are excluded from statistics.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::vector<uint8_t> valid;

  DepthMap() = default;
  DepthMap(int height_, int width_, float fill = 0.0f, bool valid_fill = false)
      : height(height_), width(width_) {
    if (height < 1 || width < 1) {
      throw DimensionError("DepthMap: dimensions must be >= 1");
    }
    data.assign(static_cast<size_t>(height) * width, fill);
    valid.assign(static_cast<size_t>(height) * width, valid_fill ? 1 : 0);
  }

  float& at(int v, int u) { return data[static_cast<size_t>(v) * width + u]; }
  float at(int v, int u) const { return data[static_cast<size_t>(v) * width + u]; }
  bool valid_at(int v, int u) const { return valid[static_cast<size_t>(v) * width + u] != 0; }
  void set(int v, int u, float depth, bool is_valid = true) {
    size_t i = static_cast<size_t>(v) * width + u;
    data[i] = depth;
    valid[i] = is_valid ? 1 : 0;
  }

  bool same_shape(const DepthMap& other) const {
    return height == other.height && width == other.width;
  }
  size_t pixel_count() const { return static_cast<size_t>(height) * width; }
};

/// Per-pixel boolean raster gating other rasters of the same dimensions.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int height_, int width_, bool fill = false) : height(height_), width(width_) {
    if (height < 1 || width < 1) {
      throw DimensionError("BinaryMask: dimensions must be >= 1");
    }
    data.assign(static_cast<size_t>(height) * width, fill ? 1 : 0);
  }

  bool at(int v, int u) const { return data[static_cast<size_t>(v) * width + u] != 0; }
  void set(int v, int u, bool value) {
    data[static_cast<size_t>(v) * width + u] = value ? 1 : 0;
  }

  bool same_shape(const BinaryMask& other) const {
    return height == other.height && width == other.width;
  }
  size_t count_true() const {
    size_t n = 0;
    for (uint8_t b : data) n += (b != 0);
    return n;
  }
};

/// Construct a constant-filled raster. Throws DimensionError on a zero dimension.
inline ImagePlane new_image_plane(int height, int width, int channels, float fill) {
  return ImagePlane(height, width, channels, fill);
}

}  // namespace mvdepth

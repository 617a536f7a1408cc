#include "mvdepth/photometric/photometric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mvdepth::photometric {

namespace {

void require_same_shape(const ImagePlane& a, const ImagePlane& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch (" +
                         std::to_string(a.height) + "x" +
                         std::to_string(a.width) + "x" +
                         std::to_string(a.channels) + " vs " +
                         std::to_string(b.height) + "x" +
                         std::to_string(b.width) + "x" +
                         std::to_string(b.channels) + ")");
  }
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

}  // namespace

ImagePlane ssim(const ImagePlane& a, const ImagePlane& b) {
  require_same_shape(a, b, "ssim");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int h = a.height;
  const int w = a.width;
  ImagePlane out = new_image_plane(h, w, 1, 0.0f);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int c = 0; c < a.channels; ++c) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int dv = -1; dv <= 1; ++dv) {
          const int rv = reflect(v + dv, h);
          for (int du = -1; du <= 1; ++du) {
            const int ru = reflect(u + du, w);
            const double x = a.at(rv, ru, c);
            const double y = b.at(rv, ru, c);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
          }
        }
        const double mx = sx / 9.0;
        const double my = sy / 9.0;
        const double vx = sxx / 9.0 - mx * mx;
        const double vy = syy / 9.0 - my * my;
        const double vxy = sxy / 9.0 - mx * my;
        const double num = (2.0 * mx * my + kC1) * (2.0 * vxy + kC2);
        const double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
        acc += num / den;
      }
      const double mean = acc / a.channels;
      out.at(v, u, 0) = static_cast<float>(std::clamp(mean, -1.0, 1.0));
    }
  }
  return out;
}

LossMap photometric_error(const ImagePlane& target, const ImagePlane& recon,
                          double alpha) {
  require_same_shape(target, recon, "photometric_error");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::domain_error("photometric_error: alpha must lie in [0, 1], got " +
                            std::to_string(alpha));
  }
  const ImagePlane sim = ssim(target, recon);
  const int h = target.height;
  const int w = target.width;
  LossMap out = new_image_plane(h, w, 1, 0.0f);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double l1 = 0.0;
      for (int c = 0; c < target.channels; ++c) {
        l1 += std::abs(static_cast<double>(target.at(v, u, c)) -
                       static_cast<double>(recon.at(v, u, c)));
      }
      l1 /= target.channels;
      const double pe =
          alpha * 0.5 * (1.0 - static_cast<double>(sim.at(v, u, 0))) +
          (1.0 - alpha) * l1;
      out.at(v, u, 0) = static_cast<float>(std::max(pe, 0.0));
    }
  }
  return out;
}

LossMap min_reprojection(const std::vector<LossMap>& losses) {
  if (losses.empty()) {
    throw std::domain_error("min_reprojection: need at least one loss map");
  }
  LossMap out = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) {
    require_same_shape(out, losses[i], "min_reprojection");
    for (std::size_t k = 0; k < out.data.size(); ++k) {
      out.data[k] = std::min(out.data[k], losses[i].data[k]);
    }
  }
  return out;
}

double smoothness(const DepthMap& depth, const ImagePlane& image) {
  if (depth.height != image.height || depth.width != image.width) {
    throw DimensionError("smoothness: depth and image dimensions differ");
  }
  if (depth.height < 2 || depth.width < 2) {
    throw std::domain_error("smoothness: needs at least a 2x2 raster");
  }
  const int h = depth.height;
  const int w = depth.width;
  std::vector<double> inv(static_cast<std::size_t>(h) * w);
  double inv_sum = 0.0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const double d = depth.at(v, u);
      if (!depth.valid_at(v, u) || !(d > 0.0) || !std::isfinite(d)) {
        throw std::domain_error("smoothness: all depths must be valid and > 0");
      }
      const double id = 1.0 / d;
      inv[static_cast<std::size_t>(v) * w + u] = id;
      inv_sum += id;
    }
  }
  const double inv_mean = inv_sum / (static_cast<double>(h) * w);
  auto dhat = [&](int v, int u) {
    return inv[static_cast<std::size_t>(v) * w + u] / inv_mean;
  };
  auto grad_image = [&](int v0, int u0, int v1, int u1) {
    double g = 0.0;
    for (int c = 0; c < image.channels; ++c) {
      g += std::abs(static_cast<double>(image.at(v1, u1, c)) -
                    static_cast<double>(image.at(v0, u0, c)));
    }
    return g / image.channels;
  };
  double acc = 0.0;
  for (int v = 0; v + 1 < h; ++v) {
    for (int u = 0; u + 1 < w; ++u) {
      const double dx = std::abs(dhat(v, u + 1) - dhat(v, u));
      const double dy = std::abs(dhat(v + 1, u) - dhat(v, u));
      const double gx = grad_image(v, u, v, u + 1);
      const double gy = grad_image(v, u, v + 1, u);
      acc += dx * std::exp(-gx) + dy * std::exp(-gy);
    }
  }
  return acc / (static_cast<double>(h - 1) * (w - 1));
}

}  // namespace mvdepth::photometric

#include "mvdepth/distill/distill.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvdepth/core/rng.hpp"

namespace mvdepth::distill {

BinaryMask robust_mask(const LossMap& l_ph_single, const LossMap& l_ph_multi) {
  if (!l_ph_single.same_shape(l_ph_multi)) {
    throw DimensionError("robust_mask: loss map shapes differ");
  }
  if (l_ph_single.channels != 1) {
    throw DimensionError("robust_mask: loss maps must be single-channel");
  }
  BinaryMask mask(l_ph_single.height, l_ph_single.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    mask.data[i] = l_ph_single.data[i] < l_ph_multi.data[i] ? 1 : 0;
  }
  return mask;
}

double consistency_loss(const DepthMap& d_multi, const DepthMap& d_single,
                        const BinaryMask& gate, LossNorm norm) {
  if (!d_multi.same_shape(d_single) || d_multi.height != gate.height ||
      d_multi.width != gate.width) {
    throw DimensionError("consistency_loss: raster dimensions differ");
  }
  double sum = 0.0;
  for (int v = 0; v < d_multi.height; ++v) {
    for (int u = 0; u < d_multi.width; ++u) {
      if (!gate.at(v, u)) continue;
      if (!d_multi.valid_at(v, u) || !d_single.valid_at(v, u)) continue;
      sum += std::abs(static_cast<double>(d_multi.at(v, u)) -
                      static_cast<double>(d_single.at(v, u)));
    }
  }
  if (norm == LossNorm::kSum) return sum;
  return sum / static_cast<double>(d_multi.pixel_count());
}

BinaryMask compose_gate(const BinaryMask& m, const BinaryMask* m_r,
                        bool augmented) {
  if (!augmented) return m;
  if (m_r == nullptr) {
    throw std::domain_error(
        "compose_gate: augmented samples need a robust mask");
  }
  if (!m.same_shape(*m_r)) {
    throw DimensionError("compose_gate: mask shapes differ");
  }
  BinaryMask out(m.height, m.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = (m.data[i] != 0 && m_r->data[i] != 0) ? 1 : 0;
  }
  return out;
}

ImagePlane static_frame_augment(const ImagePlane& target,
                                std::uint64_t jitter_seed, double strength) {
  if (!(strength >= 0.0) || !std::isfinite(strength)) {
    throw std::domain_error("static_frame_augment: strength must be >= 0");
  }
  Rng rng(jitter_seed);
  std::vector<double> gain(target.channels);
  std::vector<double> bias(target.channels);
  for (int c = 0; c < target.channels; ++c) {
    gain[c] = rng.uniform(1.0 - 0.1 * strength, 1.0 + 0.1 * strength);
    bias[c] = rng.uniform(-0.05 * strength, 0.05 * strength);
  }
  ImagePlane out = target;
  for (int v = 0; v < target.height; ++v) {
    for (int u = 0; u < target.width; ++u) {
      for (int c = 0; c < target.channels; ++c) {
        const double x = gain[c] * target.at(v, u, c) + bias[c];
        out.at(v, u, c) = static_cast<float>(std::clamp(x, 0.0, 1.0));
      }
    }
  }
  return out;
}

costvolume::CostVolume zero_cost_volume_augment(
    const costvolume::CostVolume& volume) {
  costvolume::CostVolume out = volume;
  std::fill(out.cost.begin(), out.cost.end(), 0.0f);
  std::fill(out.validity.begin(), out.validity.end(),
            static_cast<std::uint8_t>(1));
  return out;
}

LossBreakdown total_loss(const LossMap& l_ph, const LossMap& l_ph_s,
                         const BinaryMask& m, const BinaryMask& m_i,
                         double l_c, double l_sm, double l_sm_s, double beta) {
  if (!l_ph.same_shape(l_ph_s) || l_ph.height != m.height ||
      l_ph.width != m.width || !m.same_shape(m_i)) {
    throw DimensionError("total_loss: raster dimensions differ");
  }
  LossBreakdown out;
  out.beta = beta;
  out.l_c = l_c;
  out.l_sm = l_sm;
  out.l_sm_s = l_sm_s;

  double sum_multi = 0.0;
  double sum_single = 0.0;
  for (int v = 0; v < l_ph.height; ++v) {
    for (int u = 0; u < l_ph.width; ++u) {
      const bool dynamic_px = m_i.at(v, u);
      if (!dynamic_px) {
        sum_single += l_ph_s.at(v, u, 0);
        ++out.gate_single_count;
        if (!m.at(v, u)) {
          sum_multi += l_ph.at(v, u, 0);
          ++out.gate_multi_count;
        }
      }
    }
  }
  out.l_ph = out.gate_multi_count > 0
                 ? sum_multi / static_cast<double>(out.gate_multi_count)
                 : 0.0;
  out.l_ph_s = out.gate_single_count > 0
                   ? sum_single / static_cast<double>(out.gate_single_count)
                   : 0.0;
  out.total =
      out.l_ph + out.l_c + beta * out.l_sm + out.l_ph_s + beta * out.l_sm_s;
  return out;
}

nlohmann::json breakdown_to_json(const LossBreakdown& breakdown) {
  nlohmann::json j;
  j["l_ph"] = breakdown.l_ph;
  j["l_c"] = breakdown.l_c;
  j["l_sm"] = breakdown.l_sm;
  j["l_ph_s"] = breakdown.l_ph_s;
  j["l_sm_s"] = breakdown.l_sm_s;
  j["beta"] = breakdown.beta;
  j["total"] = breakdown.total;
  j["gate_multi_count"] = breakdown.gate_multi_count;
  j["gate_single_count"] = breakdown.gate_single_count;
  return j;
}

}  // namespace mvdepth::distill

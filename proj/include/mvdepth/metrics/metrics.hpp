#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mvdepth/core/types.hpp"

namespace mvdepth::metrics {

/// Depth-accuracy statistics over the evaluable pixels of one frame.
struct EvalReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double scale = 1.0;  // multiplier applied to pred before comparison
  std::size_t pixel_count = 0;
};

/// pred rescaled so its median matches gt's over jointly valid pixels.
/// Returns the scaled map and the applied multiplier median(gt)/median(pred).
/// Throws std::domain_error when no pixel is valid in both maps.
std::pair<DepthMap, double> median_scale(const DepthMap& pred,
                                         const DepthMap& gt);

/// Evaluate pred against gt over pixels valid in both with gt in
/// (0, max_depth]. Optionally median-scales pred over that set first, then
/// clamps it to [1e-3, max_depth]. Throws std::domain_error when no pixel
/// qualifies.
EvalReport evaluate(const DepthMap& pred, const DepthMap& gt,
                    double max_depth = 80.0, bool apply_median_scale = true);

struct FrameEval {
  std::string frame;
  EvalReport report;
};

/// CSV text: header, one row per frame, and a final "mean" row carrying the
/// unweighted mean of each metric and the total pixel count.
std::string eval_csv(const std::vector<FrameEval>& rows);

}  // namespace mvdepth::metrics

#include "mvdepth/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "mvdepth/core/stats.hpp"

namespace mvdepth::metrics {

std::pair<DepthMap, double> median_scale(const DepthMap& pred,
                                         const DepthMap& gt) {
  if (!pred.same_shape(gt)) {
    throw DimensionError("median_scale: depth dimensions differ");
  }
  std::vector<double> p;
  std::vector<double> g;
  for (int v = 0; v < pred.height; ++v) {
    for (int u = 0; u < pred.width; ++u) {
      if (pred.valid_at(v, u) && gt.valid_at(v, u)) {
        p.push_back(pred.at(v, u));
        g.push_back(gt.at(v, u));
      }
    }
  }
  if (p.empty()) {
    throw std::domain_error("median_scale: no jointly valid pixels");
  }
  const double scale = median_of(g) / median_of(p);
  DepthMap out = pred;
  for (float& d : out.data) d = static_cast<float>(d * scale);
  return {out, scale};
}

EvalReport evaluate(const DepthMap& pred, const DepthMap& gt, double max_depth,
                    bool apply_median_scale) {
  if (!pred.same_shape(gt)) {
    throw DimensionError("evaluate: depth dimensions differ");
  }
  if (!(max_depth > 0.0)) {
    throw std::domain_error("evaluate: max_depth must be positive");
  }
  std::vector<double> p;
  std::vector<double> g;
  for (int v = 0; v < pred.height; ++v) {
    for (int u = 0; u < pred.width; ++u) {
      if (!pred.valid_at(v, u) || !gt.valid_at(v, u)) continue;
      const double gv = gt.at(v, u);
      if (!(gv > 0.0) || gv > max_depth) continue;
      p.push_back(pred.at(v, u));
      g.push_back(gv);
    }
  }
  if (p.empty()) {
    throw std::domain_error("evaluate: no evaluable pixels");
  }

  EvalReport report;
  report.pixel_count = p.size();
  if (apply_median_scale) {
    report.scale = median_of(g) / median_of(p);
  }
  constexpr double kPredFloor = 1e-3;
  const double t1 = 1.25;
  const double t2 = t1 * t1;
  const double t3 = t2 * t1;
  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, sq_log = 0.0;
  std::size_t n1 = 0, n2 = 0, n3 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pv = std::clamp(p[i] * report.scale, kPredFloor, max_depth);
    const double gv = g[i];
    const double diff = pv - gv;
    abs_rel += std::abs(diff) / gv;
    sq_rel += diff * diff / gv;
    sq += diff * diff;
    const double dlog = std::log(pv) - std::log(gv);
    sq_log += dlog * dlog;
    const double ratio = std::max(pv / gv, gv / pv);
    n1 += ratio < t1;
    n2 += ratio < t2;
    n3 += ratio < t3;
  }
  const double n = static_cast<double>(p.size());
  report.abs_rel = abs_rel / n;
  report.sq_rel = sq_rel / n;
  report.rmse = std::sqrt(sq / n);
  report.rmse_log = std::sqrt(sq_log / n);
  report.delta1 = n1 / n;
  report.delta2 = n2 / n;
  report.delta3 = n3 / n;
  return report;
}

std::string eval_csv(const std::vector<FrameEval>& rows) {
  std::string out = "frame,abs_rel,sq_rel,rmse,rmse_log,d1,d2,d3,scale,pixels\n";
  auto append_row = [&out](const std::string& frame, const EvalReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n",
                  frame.c_str(), r.abs_rel, r.sq_rel, r.rmse, r.rmse_log,
                  r.delta1, r.delta2, r.delta3, r.scale, r.pixel_count);
    out += buf;
  };
  for (const FrameEval& row : rows) {
    append_row(row.frame, row.report);
  }
  if (!rows.empty()) {
    EvalReport mean;
    mean.scale = 0.0;
    for (const FrameEval& row : rows) {
      mean.abs_rel += row.report.abs_rel;
      mean.sq_rel += row.report.sq_rel;
      mean.rmse += row.report.rmse;
      mean.rmse_log += row.report.rmse_log;
      mean.delta1 += row.report.delta1;
      mean.delta2 += row.report.delta2;
      mean.delta3 += row.report.delta3;
      mean.scale += row.report.scale;
      mean.pixel_count += row.report.pixel_count;
    }
    const double n = static_cast<double>(rows.size());
    mean.abs_rel /= n;
    mean.sq_rel /= n;
    mean.rmse /= n;
    mean.rmse_log /= n;
    mean.delta1 /= n;
    mean.delta2 /= n;
    mean.delta3 /= n;
    mean.scale /= n;
    append_row("mean", mean);
  }
  return out;
}

}  // namespace mvdepth::metrics

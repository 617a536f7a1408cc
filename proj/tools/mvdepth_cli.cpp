#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvdepth/core/camera.hpp"
#include "mvdepth/core/io.hpp"
#include "mvdepth/core/types.hpp"
#include "mvdepth/costvolume/costvolume.hpp"
#include "mvdepth/distill/distill.hpp"
#include "mvdepth/dynmask/dynmask.hpp"
#include "mvdepth/geometry/geometry.hpp"
#include "mvdepth/metrics/metrics.hpp"
#include "mvdepth/photometric/photometric.hpp"
#include "mvdepth/synth/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mvdepth;

struct GlobalOptions {
  std::string intrinsics_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;
};

CameraIntrinsics require_intrinsics(const GlobalOptions& global) {
  if (global.intrinsics_path.empty()) {
    throw std::domain_error("--intrinsics is required for this subcommand");
  }
  return io::read_intrinsics_json(global.intrinsics_path);
}

std::string out_path(const GlobalOptions& global, const std::string& name) {
  fs::create_directories(global.out_dir);
  return (fs::path(global.out_dir) / name).string();
}

ImagePlane read_raster(const std::string& path) {
  if (path.ends_with(".ppm")) return io::read_ppm(path);
  return io::read_pfm(path);
}

void write_raster(const std::string& path_base, const GlobalOptions& global,
                  const ImagePlane& image) {
  if (image.channels == 3) {
    io::write_ppm(out_path(global, path_base + ".ppm"), image);
  } else {
    io::write_pfm(out_path(global, path_base + ".pfm"), image);
  }
}

void write_summary(const GlobalOptions& global, const nlohmann::json& summary) {
  io::write_text_file(out_path(global, "summary.json"), summary.dump(2) + "\n");
}

// ---------------------------------------------------------------- warp

struct WarpOptions {
  std::string target, source, depth, pose;
  double alpha = 0.85;
};

void run_warp(const GlobalOptions& global, const WarpOptions& opt) {
  const CameraIntrinsics k = require_intrinsics(global);
  const ImagePlane target = read_raster(opt.target);
  const ImagePlane source = read_raster(opt.source);
  const DepthMap depth = io::read_depth_pfm(opt.depth);
  const RigidPose pose = io::read_pose_json(opt.pose);

  const geometry::CorrespondenceGrid grid = geometry::warp_grid(depth, pose, k);
  auto [recon, valid] = geometry::bilinear_sample(source, grid);
  photometric::LossMap pe =
      photometric::photometric_error(target, recon, opt.alpha);

  double sum = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < pe.height; ++v) {
    for (int u = 0; u < pe.width; ++u) {
      if (valid.at(v, u)) {
        sum += pe.at(v, u, 0);
        ++n;
      } else {
        pe.at(v, u, 0) = 0.0f;
      }
    }
  }
  write_raster("recon", global, recon);
  io::write_mask_pgm(out_path(global, "valid.pgm"), valid);
  io::write_pfm(out_path(global, "pe.pfm"), pe);
  nlohmann::json summary;
  summary["mean_pe"] = n > 0 ? sum / static_cast<double>(n) : 0.0;
  summary["valid_pixels"] = n;
  write_summary(global, summary);
  std::cout << "warp: mean photometric error "
            << (n > 0 ? sum / static_cast<double>(n) : 0.0) << " over " << n
            << " valid pixels\n";
}

// ---------------------------------------------------------------- costvol

struct CostvolOptions {
  std::string target, source, pose;
  std::string ref_depth, true_depth;
  double d_min = 0.0, d_max = 0.0;
  int bins = 96;
  std::string channel_norm = "sum";
  double ratio = 1.0;
};

void run_costvol(const GlobalOptions& global, const CostvolOptions& opt) {
  const CameraIntrinsics k = require_intrinsics(global);
  const ImagePlane target = read_raster(opt.target);
  const ImagePlane source = read_raster(opt.source);
  const RigidPose pose = io::read_pose_json(opt.pose);
  const costvolume::DepthBins bins =
      costvolume::make_depth_bins(opt.d_min, opt.d_max, opt.bins);
  const costvolume::ChannelNorm norm = opt.channel_norm == "mean"
                                           ? costvolume::ChannelNorm::kMean
                                           : costvolume::ChannelNorm::kSum;

  const costvolume::CostVolume volume =
      costvolume::build_cost_volume(target, source, pose, k, bins, norm);
  costvolume::save_cost_volume(volume, out_path(global, "cost_volume.pfm"),
                               out_path(global, "cost_volume.json"));
  const DepthMap hints = costvolume::depth_hints(volume);
  io::write_depth_pfm(out_path(global, "hints.pfm"), hints);

  double spread = 0.0;
  for (int v = 0; v < volume.height; ++v) {
    for (int u = 0; u < volume.width; ++u) {
      float lo = std::numeric_limits<float>::infinity();
      float hi = -std::numeric_limits<float>::infinity();
      for (int b = 0; b < volume.bins.count; ++b) {
        if (!volume.valid_at(b, v, u)) continue;
        lo = std::min(lo, volume.cost_at(b, v, u));
        hi = std::max(hi, volume.cost_at(b, v, u));
      }
      if (hi >= lo) spread = std::max(spread, static_cast<double>(hi - lo));
    }
  }
  const double half_bin =
      (bins.d_max - bins.d_min) / (bins.count - 1) / 2.0;
  nlohmann::json summary;
  summary["degenerate"] = spread < 1e-6;
  summary["max_cost_spread"] = spread;
  summary["half_bin_width"] = half_bin;

  if (!opt.ref_depth.empty()) {
    const DepthMap ref = io::read_depth_pfm(opt.ref_depth);
    const BinaryMask mask = costvolume::consistency_mask(hints, ref, opt.ratio);
    io::write_mask_pgm(out_path(global, "consistency.pgm"), mask);
    summary["consistency_flagged"] = mask.count_true();
  }
  if (!opt.true_depth.empty()) {
    const DepthMap truth = io::read_depth_pfm(opt.true_depth);
    if (!truth.same_shape(hints)) {
      throw DimensionError("costvol: --true-depth dimensions differ");
    }
    double abs_rel = 0.0, abs_err = 0.0;
    std::size_t n = 0;
    for (int v = 0; v < hints.height; ++v) {
      for (int u = 0; u < hints.width; ++u) {
        if (!hints.valid_at(v, u) || !truth.valid_at(v, u)) continue;
        const double t = truth.at(v, u);
        if (!(t > 0.0)) continue;
        abs_rel += std::abs(hints.at(v, u) - t) / t;
        abs_err += std::abs(hints.at(v, u) - t);
        ++n;
      }
    }
    summary["hint_abs_rel"] = n > 0 ? abs_rel / n : 0.0;
    summary["hint_mean_abs_err"] = n > 0 ? abs_err / n : 0.0;
    summary["hint_compared_pixels"] = n;
  }
  write_summary(global, summary);
  if (spread < 1e-6) {
    std::cout << "costvol: volume is degenerate (cost constant along depth)\n";
  } else {
    std::cout << "costvol: " << bins.count << " bins ["
              << bins.d_min << ", " << bins.d_max << "] written\n";
  }
}

// ---------------------------------------------------------------- mask

struct MaskOptions {
  std::string d_over, d_ref, truth_mask;
  double ground_region = 1.0 / 3.0;
  double co = 2.0;
  double con = 0.85;
};

nlohmann::json mask_counts(const dynmask::InconsistencyMasks& masks) {
  nlohmann::json j;
  j["m_co"] = masks.m_co.count_true();
  j["m_con"] = masks.m_con.count_true();
  j["m_ground"] = masks.m_ground.count_true();
  j["m_i"] = masks.m_i.count_true();
  return j;
}

void precision_recall(const BinaryMask& predicted, const BinaryMask& truth,
                      nlohmann::json* summary) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predicted.data.size(); ++i) {
    const bool p = predicted.data[i] != 0;
    const bool t = truth.data[i] != 0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  (*summary)["precision"] =
      tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 1.0;
  (*summary)["recall"] = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0;
  (*summary)["truth_pixels"] = tp + fn;
}

void run_mask(const GlobalOptions& global, const MaskOptions& opt) {
  const CameraIntrinsics k = require_intrinsics(global);
  const DepthMap d_over = io::read_depth_pfm(opt.d_over);
  const DepthMap d_ref = io::read_depth_pfm(opt.d_ref);
  const dynmask::MaskBundle bundle = dynmask::generate_masks(
      d_over, d_ref, k, opt.ground_region, global.seed, opt.co, opt.con);

  io::write_mask_pgm(out_path(global, "m_co.pgm"), bundle.masks.m_co);
  io::write_mask_pgm(out_path(global, "m_con.pgm"), bundle.masks.m_con);
  io::write_mask_pgm(out_path(global, "m_ground.pgm"), bundle.masks.m_ground);
  io::write_mask_pgm(out_path(global, "m_i.pgm"), bundle.masks.m_i);

  nlohmann::json summary = dynmask::provenance_to_json(bundle.provenance);
  summary["counts"] = mask_counts(bundle.masks);
  if (!opt.truth_mask.empty()) {
    const BinaryMask truth = io::read_mask_pgm(opt.truth_mask);
    if (!truth.same_shape(bundle.masks.m_i)) {
      throw DimensionError("mask: --truth-mask dimensions differ");
    }
    precision_recall(bundle.masks.m_i, truth, &summary);
  }
  io::write_text_file(out_path(global, "provenance.json"),
                      summary.dump(2) + "\n");
  if (!bundle.provenance.ground_fit_ok) {
    std::cerr << "warning: ground-plane fit failed; m_ground degraded to "
                 "all-true\n";
  }
  std::cout << "mask: m_i flags " << bundle.masks.m_i.count_true() << " of "
            << bundle.masks.m_i.data.size() << " pixels\n";
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string pred_dir, gt_dir;
  double max_depth = 80.0;
  bool median_scale = true;
};

void run_eval(const GlobalOptions& global, const EvalOptions& opt) {
  std::set<std::string> pred_names;
  std::set<std::string> gt_names;
  auto collect = [](const std::string& dir, std::set<std::string>* names) {
    if (!fs::is_directory(dir)) {
      throw IoError(dir + ": not a directory");
    }
    for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pfm") {
        names->insert(entry.path().filename().string());
      }
    }
  };
  collect(opt.pred_dir, &pred_names);
  collect(opt.gt_dir, &gt_names);

  std::vector<std::string> matched;
  for (const std::string& name : pred_names) {
    if (gt_names.count(name)) {
      matched.push_back(name);
    } else {
      std::cerr << "warning: no ground truth for " << name << ", skipped\n";
    }
  }
  for (const std::string& name : gt_names) {
    if (!pred_names.count(name)) {
      std::cerr << "warning: no prediction for " << name << ", skipped\n";
    }
  }
  if (matched.empty()) {
    throw std::domain_error("eval: no frames matched between the directories");
  }

  struct Slot {
    std::optional<metrics::FrameEval> row;
    std::string skip_reason;
    std::string error;
  };
  std::vector<Slot> slots(matched.size());
  const int workers =
      std::clamp(global.workers, 1, static_cast<int>(matched.size()));
  auto work = [&](int first) {
    for (std::size_t i = first; i < matched.size();
         i += static_cast<std::size_t>(workers)) {
      try {
        const DepthMap pred = io::read_depth_pfm(
            (fs::path(opt.pred_dir) / matched[i]).string());
        const DepthMap gt =
            io::read_depth_pfm((fs::path(opt.gt_dir) / matched[i]).string());
        const metrics::EvalReport report =
            metrics::evaluate(pred, gt, opt.max_depth, opt.median_scale);
        slots[i].row = metrics::FrameEval{matched[i], report};
      } catch (const std::domain_error& e) {
        slots[i].skip_reason = e.what();
      } catch (const std::exception& e) {
        slots[i].error = matched[i] + ": " + e.what();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }

  std::vector<metrics::FrameEval> rows;
  for (const Slot& slot : slots) {
    if (!slot.error.empty()) throw IoError(slot.error);
    if (!slot.skip_reason.empty()) {
      std::cerr << "warning: " << slot.skip_reason << ", frame skipped\n";
      continue;
    }
    rows.push_back(*slot.row);
  }
  if (rows.empty()) {
    throw std::domain_error("eval: no frame produced evaluable pixels");
  }
  const std::string csv = metrics::eval_csv(rows);
  io::write_text_file(out_path(global, "eval.csv"), csv);
  const std::size_t last = csv.rfind("mean,");
  std::cout << "eval: " << rows.size() << " frames\n"
            << csv.substr(0, csv.find('\n') + 1) << csv.substr(last);
}

// ---------------------------------------------------------------- demo

struct DemoOptions {
  std::string scene_path, pose_path;
  int width = 192;
  int height = 96;
  double d_min = 2.0, d_max = 45.0;
  int bins = 96;
  double alpha = 0.85;
  double beta = 1e-3;
  double ratio = 1.0;
  bool static_variant = false;
};

photometric::LossMap masked_pe(const ImagePlane& target,
                               const ImagePlane& recon, const BinaryMask& valid,
                               double alpha) {
  photometric::LossMap pe =
      photometric::photometric_error(target, recon, alpha);
  for (int v = 0; v < pe.height; ++v) {
    for (int u = 0; u < pe.width; ++u) {
      if (!valid.at(v, u)) pe.at(v, u, 0) = 0.0f;
    }
  }
  return pe;
}

void run_demo(const GlobalOptions& global, const DemoOptions& opt) {
  synth::SceneSpec scene = opt.scene_path.empty()
                               ? synth::default_demo_scene()
                               : synth::read_scene_json(opt.scene_path);
  if (opt.static_variant) {
    for (synth::BoxSpec& box : scene.boxes) box.motion = ObjectMotion::zero();
  }
  const RigidPose pose = opt.pose_path.empty()
                             ? RigidPose::from_translation(0.0, 0.0, 0.6)
                             : io::read_pose_json(opt.pose_path);
  const CameraIntrinsics k =
      global.intrinsics_path.empty()
          ? CameraIntrinsics(96.0, 96.0, (opt.width - 1) / 2.0,
                             (opt.height - 1) / 2.0)
          : io::read_intrinsics_json(global.intrinsics_path);

  const synth::RenderedFrame frame_t =
      synth::render(scene, RigidPose::identity(), k, opt.height, opt.width);
  const synth::RenderedFrame frame_prev =
      synth::render(scene, pose, k, opt.height, opt.width, -1.0);
  const DepthMap& d_ref = frame_t.depth;
  const synth::OverfitDepthMap over =
      synth::overfit_depth_map(scene, pose, k, opt.height, opt.width);

  const dynmask::MaskBundle bundle = dynmask::generate_masks(
      over.depth, d_ref, k, 1.0 / 3.0, global.seed);

  const geometry::CorrespondenceGrid grid_multi =
      geometry::warp_grid(over.depth, pose, k);
  auto [recon_multi, valid_multi] =
      geometry::bilinear_sample(frame_prev.image, grid_multi);
  const photometric::LossMap pe_multi =
      masked_pe(frame_t.image, recon_multi, valid_multi, opt.alpha);

  const geometry::CorrespondenceGrid grid_single =
      geometry::warp_grid(d_ref, pose, k);
  auto [recon_single, valid_single] =
      geometry::bilinear_sample(frame_prev.image, grid_single);
  const photometric::LossMap pe_single =
      masked_pe(frame_t.image, recon_single, valid_single, opt.alpha);

  const costvolume::CostVolume volume = costvolume::build_cost_volume(
      frame_t.image, frame_prev.image, pose, k,
      costvolume::make_depth_bins(opt.d_min, opt.d_max, opt.bins));
  const DepthMap hints = costvolume::depth_hints(volume);
  const BinaryMask m = costvolume::consistency_mask(hints, d_ref, opt.ratio);

  const BinaryMask gate = distill::compose_gate(m, nullptr, false);
  const double l_c = distill::consistency_loss(over.depth, d_ref, gate);
  bool smoothness_skipped = false;
  double l_sm = 0.0, l_sm_s = 0.0;
  try {
    l_sm = photometric::smoothness(over.depth, frame_t.image);
    l_sm_s = photometric::smoothness(d_ref, frame_t.image);
  } catch (const std::domain_error&) {
    smoothness_skipped = true;
    l_sm = l_sm_s = 0.0;
  }

  const distill::LossBreakdown gated =
      distill::total_loss(pe_multi, pe_single, m, bundle.masks.m_i, l_c, l_sm,
                          l_sm_s, opt.beta);
  const BinaryMask no_dynamic(opt.height, opt.width, false);
  const distill::LossBreakdown ungated = distill::total_loss(
      pe_multi, pe_single, m, no_dynamic, l_c, l_sm, l_sm_s, opt.beta);

  // how much the m_i-flagged pixels add to each photometric mean
  double dyn_multi_sum = 0.0, dyn_single_sum = 0.0;
  std::size_t outside_m = 0;
  for (int v = 0; v < opt.height; ++v) {
    for (int u = 0; u < opt.width; ++u) {
      const bool flagged = bundle.masks.m_i.at(v, u);
      if (!m.at(v, u)) {
        ++outside_m;
        if (flagged) dyn_multi_sum += pe_multi.at(v, u, 0);
      }
      if (flagged) dyn_single_sum += pe_single.at(v, u, 0);
    }
  }
  const double total_px = static_cast<double>(d_ref.pixel_count());
  const double dyn_pe_ungated =
      (outside_m > 0 ? dyn_multi_sum / outside_m : 0.0) +
      dyn_single_sum / total_px;
  // under gating those pixels are excluded from both terms
  const double dyn_pe_gated = 0.0;

  BinaryMask truth(opt.height, opt.width);
  for (int v = 0; v < opt.height; ++v) {
    for (int u = 0; u < opt.width; ++u) {
      const int id = frame_t.id_at(v, u);
      truth.set(v, u, id > 0 && !scene.boxes[id - 1].motion.is_zero());
    }
  }

  io::write_ppm(out_path(global, "image_t.ppm"), frame_t.image);
  io::write_ppm(out_path(global, "image_prev.ppm"), frame_prev.image);
  io::write_ppm(out_path(global, "recon_multi.ppm"), recon_multi);
  io::write_depth_pfm(out_path(global, "depth_ref.pfm"), d_ref);
  io::write_depth_pfm(out_path(global, "depth_over.pfm"), over.depth);
  io::write_depth_pfm(out_path(global, "hints.pfm"), hints);
  io::write_pfm(out_path(global, "pe_multi.pfm"), pe_multi);
  io::write_pfm(out_path(global, "pe_single.pfm"), pe_single);
  io::write_mask_pgm(out_path(global, "consistency.pgm"), m);
  io::write_mask_pgm(out_path(global, "m_co.pgm"), bundle.masks.m_co);
  io::write_mask_pgm(out_path(global, "m_con.pgm"), bundle.masks.m_con);
  io::write_mask_pgm(out_path(global, "m_ground.pgm"), bundle.masks.m_ground);
  io::write_mask_pgm(out_path(global, "m_i.pgm"), bundle.masks.m_i);
  io::write_mask_pgm(out_path(global, "ill_posed.pgm"), over.ill_posed);
  io::write_mask_pgm(out_path(global, "moving_truth.pgm"), truth);
  synth::write_scene_json(out_path(global, "scene.json"), scene);
  io::write_pose_json(out_path(global, "pose.json"), pose);
  io::write_intrinsics_json(out_path(global, "intrinsics.json"), k);

  nlohmann::json summary;
  summary["gated"] = distill::breakdown_to_json(gated);
  summary["ungated"] = distill::breakdown_to_json(ungated);
  summary["dynamic_pe_gated"] = dyn_pe_gated;
  summary["dynamic_pe_ungated"] = dyn_pe_ungated;
  summary["mask_counts"] = mask_counts(bundle.masks);
  summary["provenance"] = dynmask::provenance_to_json(bundle.provenance);
  summary["smoothness_skipped"] = smoothness_skipped;
  summary["ill_posed_pixels"] = over.ill_posed.count_true();
  precision_recall(bundle.masks.m_i, truth, &summary);

  nlohmann::json per_box = nlohmann::json::array();
  for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
    std::size_t pixels = 0, co_hits = 0, con_hits = 0, i_hits = 0;
    for (int v = 0; v < opt.height; ++v) {
      for (int u = 0; u < opt.width; ++u) {
        if (frame_t.id_at(v, u) != static_cast<int>(b) + 1) continue;
        ++pixels;
        co_hits += bundle.masks.m_co.at(v, u);
        con_hits += bundle.masks.m_con.at(v, u);
        i_hits += bundle.masks.m_i.at(v, u);
      }
    }
    nlohmann::json row;
    row["box"] = b + 1;
    row["moving"] = !scene.boxes[b].motion.is_zero();
    row["pixels"] = pixels;
    row["m_co_pixels"] = co_hits;
    row["m_con_pixels"] = con_hits;
    row["m_i_pixels"] = i_hits;
    per_box.push_back(row);
  }
  summary["per_box"] = per_box;
  write_summary(global, summary);

  std::cout << "demo-dynamic: m_i flags " << bundle.masks.m_i.count_true()
            << " pixels; dynamic photometric contribution " << dyn_pe_gated
            << " gated vs " << dyn_pe_ungated << " ungated\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-view depth supervision toolkit"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--intrinsics", global.intrinsics_path,
                 "camera intrinsics JSON {fx, fy, cx, cy}");
  app.add_option("--out", global.out_dir, "output directory (default .)");
  app.add_option("--seed", global.seed, "RNG seed (default 0)");
  app.add_option("--workers", global.workers, "worker threads for eval")
      ->check(CLI::PositiveNumber);

  WarpOptions wopt;
  CLI::App* warp = app.add_subcommand(
      "warp", "reconstruct the target view from a source frame");
  warp->add_option("--target", wopt.target, "target image (.ppm or .pfm)")
      ->required();
  warp->add_option("--source", wopt.source, "source image (.ppm or .pfm)")
      ->required();
  warp->add_option("--depth", wopt.depth, "target depth PFM")->required();
  warp->add_option("--pose", wopt.pose, "target-to-source pose JSON")
      ->required();
  warp->add_option("--alpha", wopt.alpha, "SSIM/L1 blend weight");
  warp->callback([&] { run_warp(global, wopt); });

  CostvolOptions copt;
  CLI::App* costvol = app.add_subcommand(
      "costvol", "plane-sweep cost volume, depth hints, consistency mask");
  costvol->add_option("--target", copt.target, "target features/image")
      ->required();
  costvol->add_option("--source", copt.source, "source features/image")
      ->required();
  costvol->add_option("--pose", copt.pose, "target-to-source pose JSON")
      ->required();
  costvol->add_option("--d-min", copt.d_min, "nearest depth hypothesis")
      ->required();
  costvol->add_option("--d-max", copt.d_max, "farthest depth hypothesis")
      ->required();
  costvol->add_option("--bins", copt.bins, "depth bin count (default 96)");
  costvol->add_option("--channel-norm", copt.channel_norm,
                      "cost over channels: sum or mean")
      ->check(CLI::IsMember({"sum", "mean"}));
  costvol->add_option("--ref-depth", copt.ref_depth,
                      "reference depth PFM for the consistency mask");
  costvol->add_option("--true-depth", copt.true_depth,
                      "ground-truth depth PFM for hint accuracy reporting");
  costvol->add_option("--ratio", copt.ratio,
                      "consistency relative-deviation threshold");
  costvol->callback([&] { run_costvol(global, copt); });

  MaskOptions mopt;
  CLI::App* mask = app.add_subcommand(
      "mask", "depth-inconsistency masks from over-fit and reference depth");
  mask->add_option("--d-over", mopt.d_over, "over-fit depth PFM")->required();
  mask->add_option("--d-ref", mopt.d_ref, "reference depth PFM")->required();
  mask->add_option("--ground-region", mopt.ground_region,
                   "bottom image fraction used for the ground fit");
  mask->add_option("--co", mopt.co, "co-directional threshold (default 2.0)");
  mask->add_option("--con", mopt.con,
                   "contra-directional threshold (default 0.85)");
  mask->add_option("--truth-mask", mopt.truth_mask,
                   "PGM of true dynamic pixels for precision/recall");
  mask->callback([&] { run_mask(global, mopt); });

  EvalOptions eopt;
  CLI::App* eval = app.add_subcommand(
      "eval", "depth accuracy metrics over a directory of frames");
  eval->add_option("--pred", eopt.pred_dir, "directory of predicted PFMs")
      ->required();
  eval->add_option("--gt", eopt.gt_dir, "directory of ground-truth PFMs")
      ->required();
  eval->add_option("--max-depth", eopt.max_depth,
                   "evaluation cap in scene units (default 80)");
  eval->add_flag("--median-scale,!--no-median-scale", eopt.median_scale,
                 "median-align predictions before scoring (default on)");
  eval->callback([&] { run_eval(global, eopt); });

  DemoOptions dopt;
  CLI::App* demo = app.add_subcommand(
      "demo-dynamic",
      "two-frame dynamic scene walkthrough: over-fit depth, masks, losses");
  demo->add_option("--scene", dopt.scene_path,
                   "scene JSON (omit for the built-in demo scene)");
  demo->add_option("--pose", dopt.pose_path,
                   "target-to-previous pose JSON (default forward 0.6)");
  demo->add_option("--width", dopt.width, "render width")
      ->check(CLI::PositiveNumber);
  demo->add_option("--height", dopt.height, "render height")
      ->check(CLI::PositiveNumber);
  demo->add_option("--d-min", dopt.d_min, "nearest depth hypothesis");
  demo->add_option("--d-max", dopt.d_max, "farthest depth hypothesis");
  demo->add_option("--bins", dopt.bins, "depth bin count (default 96)");
  demo->add_option("--alpha", dopt.alpha, "SSIM/L1 blend weight");
  demo->add_option("--beta", dopt.beta, "smoothness weight (default 1e-3)");
  demo->add_option("--ratio", dopt.ratio,
                   "consistency relative-deviation threshold");
  demo->add_flag("--static", dopt.static_variant,
                 "zero all object motions (static control)");
  demo->callback([&] { run_demo(global, dopt); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

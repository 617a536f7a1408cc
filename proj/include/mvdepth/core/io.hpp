#pragma once

#include <string>

#include "mvdepth/core/camera.hpp"
#include "mvdepth/core/types.hpp"

namespace mvdepth::io {

// PFM, little-endian (scale -1.0), rows bottom-to-top per the format spec.
// 1-channel planes use "Pf", 3-channel use "PF"; other channel counts are rejected.
void write_pfm(const std::string& path, const ImagePlane& plane);
ImagePlane read_pfm(const std::string& path);

// Depth maps ride on 1-channel PFM; invalid pixels are stored as 0 and
// any nonpositive value reads back as invalid.
void write_depth_pfm(const std::string& path, const DepthMap& depth);
DepthMap read_depth_pfm(const std::string& path);

// Binary PGM (P5, maxval 255): 0 = false, 255 = true. Any nonzero reads as true.
void write_mask_pgm(const std::string& path, const BinaryMask& mask);
BinaryMask read_mask_pgm(const std::string& path);

// Binary PPM (P6) for RGB planes with values in [0,1].
void write_ppm(const std::string& path, const ImagePlane& image);
ImagePlane read_ppm(const std::string& path);

// JSON objects {"fx","fy","cx","cy"} and {"rotation":[9 row-major],"translation":[3]}.
std::string intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const std::string& text);
CameraIntrinsics read_intrinsics_json(const std::string& path);
void write_intrinsics_json(const std::string& path, const CameraIntrinsics& k);

std::string pose_to_json(const RigidPose& pose);
RigidPose pose_from_json(const std::string& text);
RigidPose read_pose_json(const std::string& path);
void write_pose_json(const std::string& path, const RigidPose& pose);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mvdepth::io

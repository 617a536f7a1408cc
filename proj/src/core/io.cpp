#include "mvdepth/core/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mvdepth::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw IoError(path + ": " + why);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

// PNM/PFM header token, skipping whitespace and # comments.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) fail(path, "truncated header");
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

int parse_int(const std::string& tok, const std::string& path) {
  try {
    size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size()) fail(path, "malformed integer '" + tok + "'");
    return v;
  } catch (const IoError&) {
    throw;
  } catch (...) {
    fail(path, "malformed integer '" + tok + "'");
  }
}

bool host_is_little_endian() {
  uint32_t probe = 1;
  uint8_t byte0;
  std::memcpy(&byte0, &probe, 1);
  return byte0 == 1;
}

void swap_floats(std::vector<float>& values) {
  for (float& f : values) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    bits = ((bits & 0xff000000u) >> 24) | ((bits & 0x00ff0000u) >> 8) |
           ((bits & 0x0000ff00u) << 8) | ((bits & 0x000000ffu) << 24);
    std::memcpy(&f, &bits, 4);
  }
}

}  // namespace

void write_pfm(const std::string& path, const ImagePlane& plane) {
  if (plane.channels != 1 && plane.channels != 3) {
    fail(path, "PFM supports 1 or 3 channels, got " + std::to_string(plane.channels));
  }
  auto out = open_out(path);
  out << (plane.channels == 3 ? "PF" : "Pf") << "\n"
      << plane.width << " " << plane.height << "\n"
      << "-1.0\n";
  // bottom row first
  std::vector<float> row(static_cast<size_t>(plane.width) * plane.channels);
  for (int v = plane.height - 1; v >= 0; --v) {
    std::memcpy(row.data(), plane.data.data() + static_cast<size_t>(v) * plane.width * plane.channels,
                row.size() * 4);
    if (!host_is_little_endian()) swap_floats(row);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) fail(path, "write failed");
}

ImagePlane read_pfm(const std::string& path) {
  auto in = open_in(path);
  std::string magic = next_token(in, path);
  int channels;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    fail(path, "not a PFM file (magic '" + magic + "')");
  }
  int width = parse_int(next_token(in, path), path);
  int height = parse_int(next_token(in, path), path);
  if (width < 1 || height < 1) fail(path, "bad dimensions");
  double scale;
  try {
    scale = std::stod(next_token(in, path));
  } catch (...) {
    fail(path, "malformed scale");
  }
  bool file_little = scale < 0.0;

  ImagePlane plane(height, width, channels);
  std::vector<float> row(static_cast<size_t>(width) * channels);
  for (int v = height - 1; v >= 0; --v) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) fail(path, "truncated pixel data");
    if (file_little != host_is_little_endian()) swap_floats(row);
    std::memcpy(plane.data.data() + static_cast<size_t>(v) * width * channels, row.data(),
                row.size() * 4);
  }
  return plane;
}

void write_depth_pfm(const std::string& path, const DepthMap& depth) {
  ImagePlane plane(depth.height, depth.width, 1);
  for (size_t i = 0; i < depth.pixel_count(); ++i) {
    plane.data[i] = depth.valid[i] ? depth.data[i] : 0.0f;
  }
  write_pfm(path, plane);
}

DepthMap read_depth_pfm(const std::string& path) {
  ImagePlane plane = read_pfm(path);
  if (plane.channels != 1) fail(path, "depth PFM must be single channel");
  DepthMap depth(plane.height, plane.width);
  for (size_t i = 0; i < depth.pixel_count(); ++i) {
    float d = plane.data[i];
    if (std::isfinite(d) && d > 0.0f) {
      depth.data[i] = d;
      depth.valid[i] = 1;
    }
  }
  return depth;
}

void write_mask_pgm(const std::string& path, const BinaryMask& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(mask.width));
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) row[u] = mask.at(v, u) ? 255 : 0;
    out.write(reinterpret_cast<const char*>(row.data()), mask.width);
  }
  if (!out) fail(path, "write failed");
}

BinaryMask read_mask_pgm(const std::string& path) {
  auto in = open_in(path);
  if (next_token(in, path) != "P5") fail(path, "not a binary PGM");
  int width = parse_int(next_token(in, path), path);
  int height = parse_int(next_token(in, path), path);
  int maxval = parse_int(next_token(in, path), path);
  if (width < 1 || height < 1) fail(path, "bad dimensions");
  if (maxval < 1 || maxval > 255) fail(path, "unsupported maxval " + std::to_string(maxval));
  BinaryMask mask(height, width);
  std::vector<uint8_t> row(static_cast<size_t>(width));
  for (int v = 0; v < height; ++v) {
    in.read(reinterpret_cast<char*>(row.data()), width);
    if (!in) fail(path, "truncated pixel data");
    for (int u = 0; u < width; ++u) mask.set(v, u, row[u] != 0);
  }
  return mask;
}

void write_ppm(const std::string& path, const ImagePlane& image) {
  if (image.channels != 3) fail(path, "PPM requires 3 channels, got " + std::to_string(image.channels));
  auto out = open_out(path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(image.width) * 3);
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      for (int c = 0; c < 3; ++c) {
        float x = image.at(v, u, c);
        x = x < 0.0f ? 0.0f : (x > 1.0f ? 1.0f : x);
        row[static_cast<size_t>(u) * 3 + c] = static_cast<uint8_t>(std::lround(x * 255.0f));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(path, "write failed");
}

ImagePlane read_ppm(const std::string& path) {
  auto in = open_in(path);
  if (next_token(in, path) != "P6") fail(path, "not a binary PPM");
  int width = parse_int(next_token(in, path), path);
  int height = parse_int(next_token(in, path), path);
  int maxval = parse_int(next_token(in, path), path);
  if (width < 1 || height < 1) fail(path, "bad dimensions");
  if (maxval < 1 || maxval > 255) fail(path, "unsupported maxval " + std::to_string(maxval));
  ImagePlane image(height, width, 3);
  std::vector<uint8_t> row(static_cast<size_t>(width) * 3);
  for (int v = 0; v < height; ++v) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) fail(path, "truncated pixel data");
    for (int u = 0; u < width; ++u) {
      for (int c = 0; c < 3; ++c) {
        image.at(v, u, c) = static_cast<float>(row[static_cast<size_t>(u) * 3 + c]) /
                            static_cast<float>(maxval);
      }
    }
  }
  return image;
}

std::string intrinsics_to_json(const CameraIntrinsics& k) {
  nlohmann::json j{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
  return j.dump(2) + "\n";
}

CameraIntrinsics intrinsics_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  return CameraIntrinsics(j.at("fx").get<double>(), j.at("fy").get<double>(),
                          j.at("cx").get<double>(), j.at("cy").get<double>());
}

CameraIntrinsics read_intrinsics_json(const std::string& path) {
  try {
    return intrinsics_from_json(read_text_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    fail(path, std::string("bad intrinsics JSON: ") + e.what());
  }
}

void write_intrinsics_json(const std::string& path, const CameraIntrinsics& k) {
  write_text_file(path, intrinsics_to_json(k));
}

std::string pose_to_json(const RigidPose& pose) {
  nlohmann::json j;
  j["rotation"] = pose.rotation;
  j["translation"] = pose.translation;
  return j.dump(2) + "\n";
}

RigidPose pose_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  auto rot = j.at("rotation").get<std::vector<double>>();
  auto trans = j.at("translation").get<std::vector<double>>();
  if (rot.size() != 9 || trans.size() != 3) {
    throw std::domain_error("pose JSON needs 9 rotation and 3 translation entries");
  }
  std::array<double, 9> r;
  std::array<double, 3> t;
  std::copy(rot.begin(), rot.end(), r.begin());
  std::copy(trans.begin(), trans.end(), t.begin());
  return RigidPose::from(r, t);
}

RigidPose read_pose_json(const std::string& path) {
  try {
    return pose_from_json(read_text_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    fail(path, std::string("bad pose JSON: ") + e.what());
  }
}

void write_pose_json(const std::string& path, const RigidPose& pose) {
  write_text_file(path, pose_to_json(pose));
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
  if (!out) fail(path, "write failed");
}

}  // namespace mvdepth::io

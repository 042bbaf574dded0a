#include "regtrack/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "regtrack/error.hpp"
#include "regtrack/level_set.hpp"
#include "regtrack/png_io.hpp"
#include "regtrack/rasterizer.hpp"

namespace regtrack {

double rotation_error(const Mat3& r, const Mat3& r_gt) {
  const double c = ((r.transpose() * r_gt).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double translation_error(const Vec3& t, const Vec3& t_gt) { return (t - t_gt).norm(); }

double vertex_error(const TriangleMesh& mesh, const RigidTransform& t, const RigidTransform& t_gt) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "vertex error of an empty mesh");
  double sum = 0.0;
  for (const Vec3& v : mesh.vertices()) sum += (t.apply(v) - t_gt.apply(v)).norm();
  return sum / double(mesh.vertex_count());
}

double auc_score(std::span<const double> errors, double diameter, double lambda_max) {
  if (!(diameter > 0.0)) throw Error(ErrorCode::InvalidArgument, "diameter must be positive");
  if (errors.empty()) return 0.0;
  // success(lambda) is a step function; each frame contributes over (q_k, lambda_max]
  double sum = 0.0;
  for (double e : errors) sum += std::max(0.0, lambda_max - e / diameter);
  return 100.0 * sum / double(errors.size());
}

Sequence Sequence::in_memory(const CameraIntrinsics& camera, std::vector<RgbImage> frames,
                             std::vector<std::vector<RigidTransform>> poses) {
  if (frames.size() != poses.size())
    throw Error(ErrorCode::DimensionMismatch, "one pose list per frame required");
  for (const auto& p : poses)
    if (p.size() != poses.front().size())
      throw Error(ErrorCode::DimensionMismatch, "object count changes between frames");
  Sequence s;
  s.camera_ = camera;
  s.frames_ = std::move(frames);
  s.poses_ = std::move(poses);
  return s;
}

RgbImage Sequence::frame(std::size_t index) const {
  if (index >= frame_count()) throw Error(ErrorCode::InvalidArgument, "frame index out of range");
  if (!frames_.empty()) return frames_[index];
  char name[32];
  std::snprintf(name, sizeof name, "%06zu.png", index);
  RgbImage img;
  try {
    img = read_png_rgb(directory_ / "frames" / name);
  } catch (const Error& e) {
    throw Error(ErrorCode::SequenceFormat, "frame " + std::to_string(index) + ": " + e.what());
  }
  if (img.width() != camera_.width || img.height() != camera_.height)
    throw Error(ErrorCode::SequenceFormat,
                "frame " + std::to_string(index) + " does not match camera.txt size");
  return img;
}

namespace {

[[noreturn]] void format_error(const std::filesystem::path& file, int line, const std::string& what) {
  throw Error(ErrorCode::SequenceFormat,
              file.string() + (line > 0 ? ":" + std::to_string(line) : "") + ": " + what);
}

std::vector<double> parse_numbers(const std::string& text, const std::filesystem::path& file,
                                  int line) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) format_error(file, line, "not a number: '" + tok + "'");
    if (!std::isfinite(v)) format_error(file, line, "non-finite value '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

Sequence load_sequence(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::SequenceFormat, dir.string() + ": not a directory");
  Sequence s;
  s.directory_ = dir;

  const auto camera_path = dir / "camera.txt";
  std::ifstream cam(camera_path);
  if (!cam) format_error(camera_path, 0, "missing");
  std::string text;
  std::getline(cam, text);
  const auto c = parse_numbers(text, camera_path, 1);
  if (c.size() != 6) format_error(camera_path, 1, "expected fx fy cx cy width height");
  s.camera_ = CameraIntrinsics{c[0], c[1], c[2], c[3], int(c[4]), int(c[5])};
  try {
    s.camera_.validate();
  } catch (const Error& e) {
    format_error(camera_path, 1, e.what());
  }

  const auto poses_path = dir / "poses.txt";
  std::ifstream poses(poses_path);
  if (!poses) format_error(poses_path, 0, "missing");
  int line_no = 0;
  std::size_t objects = 0;
  while (std::getline(poses, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto v = parse_numbers(text, poses_path, line_no);
    if (v.size() != 13) format_error(poses_path, line_no, "expected 13 values");
    const auto id = static_cast<std::size_t>(v[0]);
    if (v[0] < 0 || double(id) != v[0]) format_error(poses_path, line_no, "bad object id");
    if (id == 0) {
      if (s.poses_.size() == 1) objects = s.poses_[0].size();
      if (s.poses_.size() > 1 && s.poses_.back().size() != objects)
        format_error(poses_path, line_no, "previous frame has a different object count");
      s.poses_.emplace_back();
    } else if (s.poses_.empty() || s.poses_.back().size() != id) {
      format_error(poses_path, line_no, "object ids must count up from 0 within a frame");
    }
    RigidTransform p;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) p.rotation(a, b) = v[1 + 3 * a + b];
    p.translation = Vec3(v[10], v[11], v[12]);
    if ((p.rotation.transpose() * p.rotation - Mat3::Identity()).norm() > 1e-6 ||
        p.rotation.determinant() < 0.0)
      format_error(poses_path, line_no, "rotation is not orthonormal");
    s.poses_.back().push_back(p);
  }
  if (s.poses_.empty()) format_error(poses_path, 0, "no poses");
  if (objects == 0) objects = s.poses_.back().size();
  if (s.poses_.back().size() != objects)
    format_error(poses_path, line_no, "last frame has a different object count");

  char name[32];
  for (std::size_t f = 0; f < s.poses_.size(); ++f) {
    std::snprintf(name, sizeof name, "%06zu.png", f);
    if (!std::filesystem::exists(dir / "frames" / name))
      throw Error(ErrorCode::SequenceFormat, "missing frame " + std::to_string(f) + " (" +
                                                 (dir / "frames" / name).string() + ")");
  }
  for (std::size_t j = 0; j < objects; ++j) {
    const auto mesh_path = dir / ("mesh_" + std::to_string(j) + ".obj");
    if (!std::filesystem::exists(mesh_path)) {
      s.meshes_.clear();
      break;
    }
    s.meshes_.push_back(load_obj(mesh_path));
  }
  return s;
}

namespace {

FrameError frame_error(const RigidTransform& est, const RigidTransform& gt,
                       const TriangleMesh* mesh) {
  FrameError e;
  e.translation_error = translation_error(est.translation, gt.translation);
  e.rotation_error = rotation_error(est.rotation, gt.rotation);
  if (mesh) e.vertex_error = vertex_error(*mesh, est, gt);
  return e;
}

std::vector<SequenceReport> run_protocol(PoseTracker& tracker, const Sequence& sequence,
                                         const Thresholds& th, std::span<const TriangleMesh> meshes,
                                         const FrameObserver& observer, bool reset,
                                         const std::string& name) {
  const std::size_t n = sequence.object_count();
  if (tracker.object_count() != n)
    throw Error(ErrorCode::DimensionMismatch, "tracker and sequence object counts differ");
  if (!meshes.empty() && meshes.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "one mesh per object required");
  if (sequence.frame_count() < 1) throw Error(ErrorCode::SequenceFormat, "empty sequence");

  std::vector<SequenceReport> reports(n);
  for (std::size_t j = 0; j < n; ++j) {
    reports[j].object = static_cast<int>(j);
    reports[j].protocol = name;
  }
  const auto& first = sequence.poses(0);
  tracker.initialize(sequence.frame(0), first);
  for (std::size_t f = 1; f < sequence.frame_count(); ++f) {
    const RgbImage image = sequence.frame(f);
    const auto t0 = std::chrono::steady_clock::now();
    const auto estimates = tracker.step(image);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (observer) observer(f, image, estimates);
    const auto& gt = sequence.poses(f);
    for (std::size_t j = 0; j < n; ++j) {
      FrameRecord rec;
      rec.index = static_cast<int>(f);
      rec.runtime_ms = ms;
      rec.error = frame_error(estimates[j], gt[j], meshes.empty() ? nullptr : &meshes[j]);
      rec.success =
          rec.error.translation_error < th.translation && rec.error.rotation_error < th.rotation;
      if (!rec.success && reset) {
        tracker.reset_pose(j, gt[j]);
        ++reports[j].resets;
      }
      reports[j].frames.push_back(rec);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    SequenceReport& r = reports[j];
    if (r.frames.empty()) continue;
    const auto ok = std::count_if(r.frames.begin(), r.frames.end(),
                                  [](const FrameRecord& f) { return f.success; });
    r.success_rate = 100.0 * double(ok) / double(r.frames.size());
    if (!meshes.empty()) {
      std::vector<double> errors;
      for (const auto& f : r.frames) errors.push_back(f.error.vertex_error);
      r.auc_score = auc_score(errors, meshes[j].diameter());
    }
  }
  return reports;
}

}  // namespace

std::vector<SequenceReport> rbot_protocol(PoseTracker& tracker, const Sequence& sequence,
                                          const Thresholds& thresholds,
                                          std::span<const TriangleMesh> meshes,
                                          const FrameObserver& observer) {
  return run_protocol(tracker, sequence, thresholds, meshes, observer, true, "rbot");
}

std::vector<SequenceReport> auc_protocol(PoseTracker& tracker, const Sequence& sequence,
                                         std::span<const TriangleMesh> meshes,
                                         const Thresholds& thresholds,
                                         const FrameObserver& observer) {
  if (meshes.empty()) throw Error(ErrorCode::InvalidArgument, "the AUC protocol needs meshes");
  return run_protocol(tracker, sequence, thresholds, meshes, observer, false, "auc");
}

std::string report_json(std::span<const SequenceReport> reports) {
  nlohmann::json root;
  root["objects"] = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json o;
    o["object"] = r.object;
    o["protocol"] = r.protocol;
    o["success_rate"] = r.success_rate;
    o["auc_score"] = r.auc_score;
    o["resets"] = r.resets;
    o["frames"] = nlohmann::json::array();
    for (const auto& f : r.frames) {
      o["frames"].push_back({{"index", f.index},
                             {"translation_error", f.error.translation_error},
                             {"rotation_error", f.error.rotation_error},
                             {"rotation_error_deg", f.error.rotation_error / kDegree},
                             {"vertex_error", f.error.vertex_error},
                             {"success", f.success},
                             {"runtime_ms", f.runtime_ms}});
    }
    root["objects"].push_back(std::move(o));
  }
  return root.dump(2);
}

void write_report_json(const std::filesystem::path& path, std::span<const SequenceReport> reports) {
  std::ofstream out(path);
  out << report_json(reports) << '\n';
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

void write_report_csv(const std::filesystem::path& path, std::span<const SequenceReport> reports) {
  std::ofstream out(path);
  out.precision(10);
  out << "object,frame,translation_error,rotation_error,vertex_error,success,runtime_ms\n";
  for (const auto& r : reports)
    for (const auto& f : r.frames)
      out << r.object << ',' << f.index << ',' << f.error.translation_error << ','
          << f.error.rotation_error << ',' << f.error.vertex_error << ',' << int(f.success) << ','
          << f.runtime_ms << '\n';
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

RgbImage draw_overlay(const RgbImage& frame, std::span<const TriangleMesh> meshes,
                      std::span<const RigidTransform> poses, const CameraIntrinsics& k) {
  static constexpr Rgb kColors[] = {{0, 255, 0}, {255, 0, 255}, {0, 255, 255}, {255, 255, 0}};
  RgbImage out = frame;
  const SceneRender render = render_scene(meshes, poses, k, Frustum{});
  for (std::size_t j = 0; j < meshes.size(); ++j) {
    ContourSet contour;
    try {
      contour = extract_contour(render.mask, static_cast<int>(j + 1));
    } catch (const Error&) {
      continue;
    }
    for (const Pixel& p : contour.pixels) out(p.x, p.y) = kColors[j % 4];
  }
  return out;
}

}  // namespace regtrack

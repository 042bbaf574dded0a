#include "regtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <Eigen/Geometry>

#include "regtrack/error.hpp"
#include "regtrack/png_io.hpp"

namespace regtrack {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAmbient = 0.2;

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::vector<Vec3> colors_by_normal(const TriangleMesh& mesh, const Vec3& a, const Vec3& b) {
  std::vector<Vec3> colors(mesh.vertex_count(), a);
  const auto& v = mesh.vertices();
  for (const Triangle& t : mesh.triangles()) {
    const Vec3 n = (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]);
    const bool y_face = std::abs(n.y()) > std::abs(n.x()) && std::abs(n.y()) > std::abs(n.z());
    for (int i : t) colors[static_cast<std::size_t>(i)] = y_face ? b : a;
  }
  return colors;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

void ColoredMesh::validate() const {
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "colored mesh without vertices");
  if (colors.size() != mesh.vertex_count())
    throw Error(ErrorCode::DimensionMismatch, "one color per vertex required");
}

ColoredMesh paint_two_tone(TriangleMesh mesh, const Vec3& a, const Vec3& b) {
  auto colors = colors_by_normal(mesh, a, b);
  return {std::move(mesh), std::move(colors)};
}

ColoredMesh make_two_tone_cube(double size, int subdivisions, const Vec3& a, const Vec3& b) {
  return paint_two_tone(make_cube(size, subdivisions), a, b);
}

ColoredMesh make_colored_sphere(double radius, int subdivisions, const Vec3& color) {
  return paint(make_icosphere(radius, subdivisions), color);
}

ColoredMesh paint(TriangleMesh mesh, const Vec3& color) {
  std::vector<Vec3> colors(mesh.vertex_count(), color);
  return {std::move(mesh), std::move(colors)};
}

TrajectorySpec::TrajectorySpec(std::vector<Keyframe> keyframes) : keys_(std::move(keyframes)) {
  if (keys_.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory without keyframes");
  if (keys_.front().frame != 0)
    throw Error(ErrorCode::InvalidArgument, "first keyframe must be frame 0");
  for (std::size_t i = 1; i < keys_.size(); ++i)
    if (keys_[i].frame <= keys_[i - 1].frame)
      throw Error(ErrorCode::InvalidArgument, "keyframe indices must increase strictly");
}

RigidTransform TrajectorySpec::pose_at(int frame) const {
  if (frame <= 0) return keys_.front().pose;
  if (frame >= keys_.back().frame) return keys_.back().pose;
  const auto next = std::upper_bound(keys_.begin(), keys_.end(), frame,
                                     [](int f, const Keyframe& k) { return f < k.frame; });
  const Keyframe& b = *next;
  const Keyframe& a = *(next - 1);
  if (frame == a.frame) return a.pose;
  const double t = double(frame - a.frame) / double(b.frame - a.frame);
  const Eigen::Quaterniond qa(a.pose.rotation), qb(b.pose.rotation);
  RigidTransform out;
  out.rotation = orthonormalize(qa.slerp(t, qb).toRotationMatrix());
  out.translation = (1.0 - t) * a.pose.translation + t * b.pose.translation;
  return out;
}

TrajectorySpec default_trajectory(int frames, double distance, int spacing) {
  if (frames < 1 || spacing < 1) throw Error(ErrorCode::InvalidArgument, "bad trajectory length");
  // oscillates about a view showing three faces
  const Mat3 base = axis_angle(Vec3::UnitX(), -30.0 * kPi / 180.0) *
                    axis_angle(Vec3::UnitY(), 40.0 * kPi / 180.0);
  const double amp = 18.0 * kPi / 180.0;
  std::vector<Keyframe> keys;
  const int last = frames - 1;
  for (int f = 0;; f = std::min(f + spacing, last)) {
    const double t = f;
    const double rx = amp * std::sin(2.0 * kPi * t / 90.0);
    const double ry = amp * std::sin(2.0 * kPi * t / 70.0 + 0.5);
    const double rz = amp * std::sin(2.0 * kPi * t / 110.0 + 1.2);
    RigidTransform p;
    p.rotation = axis_angle(Vec3::UnitZ(), rz) * axis_angle(Vec3::UnitX(), rx) *
                 axis_angle(Vec3::UnitY(), ry) * base;
    p.translation = Vec3(0.05 * std::sin(2.0 * kPi * t / 90.0),
                         0.03 * std::sin(2.0 * kPi * t / 70.0 + 1.0),
                         distance + 0.05 * std::sin(2.0 * kPi * t / 120.0));
    keys.push_back({f, p});
    if (f == last) break;
  }
  return TrajectorySpec(std::move(keys));
}

TrajectorySpec orbit_trajectory(int frames, const Vec3& center, double radius, int period,
                                int spacing) {
  if (frames < 1 || spacing < 1 || period < 1)
    throw Error(ErrorCode::InvalidArgument, "bad orbit parameters");
  std::vector<Keyframe> keys;
  const int last = frames - 1;
  for (int f = 0;; f = std::min(f + spacing, last)) {
    const double a = 2.0 * kPi * f / period;
    RigidTransform p;
    p.rotation = axis_angle(Vec3(0.3, 1.0, 0.2), 0.25 * a) *
                 axis_angle(Vec3::UnitX(), -30.0 * kPi / 180.0);
    // starts in front of the target (smaller z)
    p.translation = center + Vec3(radius * std::sin(a), 0.0, -radius * std::cos(a));
    keys.push_back({f, p});
    if (f == last) break;
  }
  return TrajectorySpec(std::move(keys));
}

void SequenceVariant::validate() const {
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative noise sigma");
  if (occluder) occluder->mesh.validate();
}

SequenceVariant make_variant(const std::string& name, const Vec3& orbit_center,
                             double orbit_radius, int frames, double noise_sigma,
                             double occluder_size) {
  SequenceVariant v;
  v.name = name;
  if (name == "regular") return v;
  v.dynamic_light = true;
  if (name == "dynlight") return v;
  v.noise_sigma = noise_sigma;
  if (name == "noisy") return v;
  if (name == "occlusion") {
    const TriangleMesh unit = make_cube(1.0, 2);
    std::vector<Vec3> vertices;
    for (const Vec3& p : unit.vertices())
      vertices.push_back(occluder_size * Vec3(p.x(), 0.5 * p.y(), 0.5 * p.z()));
    v.occluder = OccluderSpec{
        paint_two_tone(TriangleMesh(std::move(vertices), unit.triangles()), Vec3(0.85, 0.75, 0.2),
                       Vec3(0.25, 0.6, 0.3)),
        orbit_trajectory(frames, orbit_center, orbit_radius, 40)};
    return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown variant '" + name + "'");
}

Sprite shade(std::span<const ShadedObject> objects, const CameraIntrinsics& k,
             const Vec3& light, const Frustum& frustum, int ss) {
  k.validate();
  if (ss < 1) throw Error(ErrorCode::InvalidArgument, "supersampling must be >= 1");
  if (std::abs(light.norm() - 1.0) > 1e-6)
    throw Error(ErrorCode::InvalidArgument, "light direction must be a unit vector");
  CameraIntrinsics ks = k;
  ks.fx *= ss;
  ks.fy *= ss;
  ks.cx = ss * (k.cx + 0.5) - 0.5;
  ks.cy = ss * (k.cy + 0.5) - 0.5;
  ks.width = k.width * ss;
  ks.height = k.height * ss;

  Image<double> inv_z(ks.width, ks.height, 0.0);
  Image<Vec3> color(ks.width, ks.height, Vec3::Zero());
  Image<std::uint16_t> owner(ks.width, ks.height, 0);
  for (std::size_t j = 0; j < objects.size(); ++j) {
    const ColoredMesh& cm = *objects[j].mesh;
    cm.validate();
    const RigidTransform& pose = objects[j].pose;
    const auto& v = cm.mesh.vertices();
    const auto& tris = cm.mesh.triangles();
    std::vector<double> brightness(tris.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const Vec3 n = pose.rotation * (v[tris[t][1]] - v[tris[t][0]])
                                         .cross(v[tris[t][2]] - v[tris[t][0]]);
      const double len = n.norm();
      brightness[t] = std::max(kAmbient, len > 0.0 ? n.dot(light) / len : 0.0);
    }
    rasterize_mesh(cm.mesh, pose, ks, frustum, [&](const Fragment& f) {
      if (f.inv_z <= inv_z(f.x, f.y)) return;
      const Triangle& t = tris[static_cast<std::size_t>(f.triangle)];
      const Vec3 albedo = f.bary[0] * cm.colors[t[0]] + f.bary[1] * cm.colors[t[1]] +
                          f.bary[2] * cm.colors[t[2]];
      inv_z(f.x, f.y) = f.inv_z;
      color(f.x, f.y) = 255.0 * brightness[static_cast<std::size_t>(f.triangle)] * albedo;
      owner(f.x, f.y) = static_cast<std::uint16_t>(j + 1);
    });
  }

  Sprite out{Image<Vec3>(k.width, k.height, Vec3::Zero()), Image<double>(k.width, k.height, 0.0),
             SilhouetteMask(k.width, k.height, 0)};
  bool any = false;
  std::vector<int> votes(objects.size() + 1);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      Vec3 sum = Vec3::Zero();
      int hits = 0;
      std::fill(votes.begin(), votes.end(), 0);
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const int o = owner(x * ss + sx, y * ss + sy);
          if (!o) continue;
          sum += color(x * ss + sx, y * ss + sy);
          ++hits;
          ++votes[static_cast<std::size_t>(o)];
        }
      }
      if (!hits) continue;
      any = true;
      out.color(x, y) = sum / hits;
      out.coverage(x, y) = double(hits) / (ss * ss);
      out.index(x, y) = static_cast<std::uint16_t>(
          std::max_element(votes.begin() + 1, votes.end()) - votes.begin());
    }
  }
  if (!any) throw Error(ErrorCode::NotVisible, "nothing to shade in view");
  return out;
}

RgbImage composite(const RgbImage& background, const Sprite& sprite, double noise_sigma,
                   std::uint64_t seed) {
  const int w = background.width();
  const int h = background.height();
  if (sprite.coverage.width() != w || sprite.coverage.height() != h ||
      sprite.color.width() != w || sprite.color.height() != h)
    throw Error(ErrorCode::DimensionMismatch, "sprite and background differ in size");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative noise sigma");

  Image<Vec3> mixed(w, h, Vec3::Zero());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb b = background(x, y);
      const double c = sprite.coverage(x, y);
      mixed(x, y) = c * sprite.color(x, y) + (1.0 - c) * Vec3(b.r, b.g, b.b);
    }
  }

  double kernel[3];
  {
    const double e = std::exp(-1.0 / (2.0 * 0.85 * 0.85));
    const double sum = 1.0 + 2.0 * e;
    kernel[0] = kernel[2] = e / sum;
    kernel[1] = 1.0 / sum;
  }
  Image<Vec3> blurred = mixed;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool near_object = false;
      for (int dy = -1; dy <= 1 && !near_object; ++dy)
        for (int dx = -1; dx <= 1 && !near_object; ++dx)
          near_object = sprite.coverage.contains(x + dx, y + dy) &&
                        sprite.coverage(x + dx, y + dy) > 0.0;
      if (!near_object) continue;
      Vec3 acc = Vec3::Zero();
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          acc += kernel[dx + 1] * kernel[dy + 1] *
                 mixed(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
      blurred(x, y) = acc;
    }
  }

  RgbImage out(w, h);
  std::mt19937_64 rng = seeded(seed, 0x6e6f697365ULL);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Vec3 c = blurred(x, y);
      if (noise_sigma > 0.0) c += Vec3(noise(rng), noise(rng), noise(rng));
      out(x, y) = Rgb{to_byte(c.x()), to_byte(c.y()), to_byte(c.z())};
    }
  }
  return out;
}

RgbImage make_background(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "empty background");
  std::mt19937_64 rng = seeded(seed, 0x626bULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // earthy palette with a few saturated accents
  const auto random_color = [&]() {
    const double v = 60.0 + 150.0 * unit(rng);
    Vec3 tint(0.8 + 0.4 * unit(rng), 0.8 + 0.4 * unit(rng), 0.7 + 0.3 * unit(rng));
    if (unit(rng) < 0.15) tint = Vec3(unit(rng), unit(rng), unit(rng)) * 1.6;
    return Vec3(v * tint.x(), v * tint.y(), v * tint.z());
  };

  constexpr int kGrid = 6;
  std::vector<Vec3> grid((kGrid + 1) * (kGrid + 1));
  for (auto& g : grid) g = random_color();
  Image<Vec3> img(width, height, Vec3::Zero());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double gx = double(x) / width * kGrid;
      const double gy = double(y) / height * kGrid;
      const int ix = std::min(int(gx), kGrid - 1), iy = std::min(int(gy), kGrid - 1);
      const double fx = gx - ix, fy = gy - iy;
      const auto at = [&](int i, int j) { return grid[static_cast<std::size_t>(j * (kGrid + 1) + i)]; };
      img(x, y) = (1 - fy) * ((1 - fx) * at(ix, iy) + fx * at(ix + 1, iy)) +
                  fy * ((1 - fx) * at(ix, iy + 1) + fx * at(ix + 1, iy + 1));
    }
  }
  const int shapes = 12 + (width * height) / 2000;
  for (int s = 0; s < shapes; ++s) {
    const Vec3 c = random_color();
    const double cx = unit(rng) * width, cy = unit(rng) * height;
    const double r = (0.02 + 0.08 * unit(rng)) * std::min(width, height);
    const bool disc = unit(rng) < 0.5;
    const double ax = r * (0.5 + unit(rng)), ay = r * (0.5 + unit(rng));
    for (int y = std::max(0, int(cy - 2 * r)); y < std::min(height, int(cy + 2 * r) + 1); ++y) {
      for (int x = std::max(0, int(cx - 2 * r)); x < std::min(width, int(cx + 2 * r) + 1); ++x) {
        const double dx = x - cx, dy = y - cy;
        const bool inside = disc ? dx * dx + dy * dy < r * r
                                 : std::abs(dx) < ax && std::abs(dy) < ay;
        if (inside) img(x, y) = c;
      }
    }
  }
  RgbImage out(width, height);
  std::uniform_real_distribution<double> grain(-12.0, 12.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Vec3 c = img(x, y) + Vec3::Constant(grain(rng));
      out(x, y) = Rgb{to_byte(c.x()), to_byte(c.y()), to_byte(c.z())};
    }
  }
  return out;
}

CameraIntrinsics default_camera(int width, int height) {
  CameraIntrinsics k;
  k.fx = k.fy = 300.0 * width / 320.0;
  k.cx = (width - 1) / 2.0;
  k.cy = (height - 1) / 2.0;
  k.width = width;
  k.height = height;
  return k;
}

Vec3 light_direction(const SequenceVariant& variant, int frame) {
  const Vec3 base = Vec3(-0.3, -0.5, -1.0).normalized();
  if (!variant.dynamic_light) return base;
  return axis_angle(Vec3::UnitY(), frame * kPi / 180.0) * base;
}

GeneratedSequence render_sequence(const SequenceRequest& r) {
  r.object.validate();
  r.variant.validate();
  r.camera.validate();
  if (r.frames < 1) throw Error(ErrorCode::InvalidArgument, "at least one frame required");
  if (r.backgrounds.empty()) throw Error(ErrorCode::InvalidArgument, "no background image");
  for (const auto& b : r.backgrounds)
    if (b.width() != r.camera.width || b.height() != r.camera.height)
      throw Error(ErrorCode::DimensionMismatch, "background size does not match the camera");

  GeneratedSequence out;
  for (int f = 0; f < r.frames; ++f) {
    std::vector<RigidTransform> poses{r.trajectory.pose_at(f)};
    std::vector<ShadedObject> objects{{&r.object, poses[0]}};
    if (r.variant.occluder) {
      poses.push_back(r.variant.occluder->trajectory.pose_at(f));
      objects.push_back({&r.variant.occluder->mesh, poses[1]});
    }
    const Sprite sprite = shade(objects, r.camera, light_direction(r.variant, f));
    const RgbImage& bg = r.backgrounds[static_cast<std::size_t>(f) % r.backgrounds.size()];
    out.frames.push_back(composite(bg, sprite, r.variant.noise_sigma,
                                   r.seed * 1000003ULL + static_cast<std::uint64_t>(f)));
    out.poses.push_back(std::move(poses));
  }
  return out;
}

void generate_sequence(const SequenceRequest& r, const std::filesystem::path& out) {
  const GeneratedSequence seq = render_sequence(r);
  std::filesystem::create_directories(out / "frames");
  char name[32];
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    std::snprintf(name, sizeof name, "%06zu.png", f);
    write_png(out / "frames" / name, seq.frames[f]);
  }
  std::ofstream poses(out / "poses.txt");
  poses.precision(17);
  for (const auto& frame : seq.poses) {
    for (std::size_t j = 0; j < frame.size(); ++j) {
      poses << j;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) poses << ' ' << frame[j].rotation(a, b);
      for (int a = 0; a < 3; ++a) poses << ' ' << frame[j].translation(a);
      poses << '\n';
    }
  }
  std::ofstream camera(out / "camera.txt");
  camera.precision(17);
  camera << r.camera.fx << ' ' << r.camera.fy << ' ' << r.camera.cx << ' ' << r.camera.cy << ' '
         << r.camera.width << ' ' << r.camera.height << '\n';
  std::ofstream meta(out / "meta.txt");
  meta << "variant = " << r.variant.name << "\ndynamic_light = " << r.variant.dynamic_light
       << "\nnoise_sigma = " << r.variant.noise_sigma
       << "\noccluder = " << (r.variant.occluder ? 1 : 0) << "\nseed = " << r.seed
       << "\nframes = " << r.frames << "\nobjects = " << (r.variant.occluder ? 2 : 1) << '\n';
  save_obj(out / "mesh_0.obj", r.object.mesh);
  if (r.variant.occluder) save_obj(out / "mesh_1.obj", r.variant.occluder->mesh.mesh);
  if (!poses || !camera || !meta) throw Error(ErrorCode::Io, "failed writing " + out.string());
}

}  // namespace regtrack

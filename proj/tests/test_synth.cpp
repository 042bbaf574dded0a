#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "regtrack/eval.hpp"
#include "regtrack/synth.hpp"

using namespace regtrack;
using oracle::error_of;

namespace {

const CameraIntrinsics kCamera = default_camera(64, 48);

// Square in the z = 0 plane whose winding gives the normal -z (towards the camera).
ColoredMesh square(const Vec3& albedo) {
  TriangleMesh m({{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}}, {{0, 2, 1}, {0, 3, 2}});
  return paint(std::move(m), albedo);
}

Vec3 center_color(const Sprite& s) { return s.color(32, 24); }

}  // namespace

TEST_CASE("lambertian shading") {
  const ColoredMesh sq = square(Vec3(0.5, 0.25, 1.0));
  const ShadedObject o{&sq, RigidTransform::translate({0, 0, 5})};
  const Sprite lit = shade(std::span(&o, 1), kCamera, Vec3(0, 0, -1));
  CHECK(lit.coverage(32, 24) == 1.0);
  CHECK(lit.index(32, 24) == 1);
  CHECK(center_color(lit).isApprox(Vec3(127.5, 63.75, 255.0)));
  const Sprite dark = shade(std::span(&o, 1), kCamera, Vec3(0, 0, 1));
  CHECK(center_color(dark).isApprox(0.2 * Vec3(127.5, 63.75, 255.0)));
  const Sprite grazing = shade(std::span(&o, 1), kCamera, Vec3(1, 0, 0));
  CHECK(center_color(grazing).isApprox(0.2 * Vec3(127.5, 63.75, 255.0)));
  const Vec3 tilted = Vec3(0, std::sin(0.5), -std::cos(0.5));
  CHECK(center_color(shade(std::span(&o, 1), kCamera, tilted)).isApprox(std::cos(0.5) * Vec3(127.5, 63.75, 255.0)));

  const ShadedObject behind{&sq, RigidTransform::translate({0, 0, -5})};
  CHECK(error_of([&] { shade(std::span(&behind, 1), kCamera, Vec3(0, 0, -1)); }) == ErrorCode::NotVisible);
  CHECK(error_of([&] { shade(std::span(&o, 1), kCamera, Vec3(0, 0, -2)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("orthogonal lights brighten different faces") {
  const ColoredMesh cube = make_two_tone_cube(0.4, 1, Vec3(0.6, 0.6, 0.6), Vec3(0.6, 0.6, 0.6));
  const RigidTransform pose{axis_angle(Vec3::UnitY(), 0.6), Vec3(0, 0, 2)};
  const ShadedObject o{&cube, pose};
  // after the yaw the +x face shows right of center, the -z face left of it
  const Vec3 nx = pose.rotation * Vec3::UnitX();
  const Vec3 nz = pose.rotation * -Vec3::UnitZ();
  const Sprite a = shade(std::span(&o, 1), kCamera, nx);
  const Sprite b = shade(std::span(&o, 1), kCamera, nz);
  const int left = 32 - 6, right = 32 + 6;
  CHECK(a.color(right, 24).x() > a.color(left, 24).x());
  CHECK(b.color(left, 24).x() > b.color(right, 24).x());
  CHECK(a.color(right, 24).x() == doctest::Approx(0.6 * 255));
  CHECK(b.color(left, 24).x() == doctest::Approx(0.6 * 255));
}

TEST_CASE("compositing") {
  const RgbImage bg = make_background(64, 48, 3);
  Sprite empty{Image<Vec3>(64, 48, Vec3::Zero()), Image<double>(64, 48, 0.0), SilhouetteMask(64, 48, 0)};
  CHECK(composite(bg, empty, 0.0, 1) == bg);

  Sprite full{Image<Vec3>(64, 48, Vec3(200, 100, 50)), Image<double>(64, 48, 1.0),
              SilhouetteMask(64, 48, 1)};
  const RgbImage out = composite(bg, full, 0.0, 1);
  for (const Rgb& c : out.data()) CHECK(c == Rgb{200, 100, 50});

  // a half-covered image: interior colours survive, the seam gets blurred
  Sprite half = empty;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 32; ++x) {
      half.color(x, y) = Vec3(255, 0, 0);
      half.coverage(x, y) = 1.0;
      half.index(x, y) = 1;
    }
  const RgbImage h = composite(bg, half, 0.0, 1);
  CHECK(h(10, 10) == Rgb{255, 0, 0});
  CHECK(h(50, 10) == bg(50, 10));
  CHECK(h(31, 10).r < 255);
  CHECK(h(32, 10).r > bg(32, 10).r);

  const RgbImage n1 = composite(bg, half, 10.0, 5);
  const RgbImage n2 = composite(bg, half, 10.0, 5);
  const RgbImage n3 = composite(bg, half, 10.0, 6);
  CHECK(n1 == n2);
  CHECK_FALSE(n1 == n3);
  double sq = 0.0;
  for (int y = 10; y < 40; ++y)
    for (int x = 40; x < 60; ++x) {
      const double d = double(n1(x, y).g) - double(bg(x, y).g);
      sq += d * d;
    }
  const double sigma = std::sqrt(sq / (30 * 20));
  CHECK(sigma > 7.0);
  CHECK(sigma < 13.0);
  CHECK(error_of([&] { composite(RgbImage(10, 10), half, 0.0, 1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("trajectories") {
  const RigidTransform a = RigidTransform::translate({0, 0, 1});
  const RigidTransform b{axis_angle(Vec3::UnitZ(), 1.0), Vec3(1, 0, 1)};
  const TrajectorySpec t({{0, a}, {10, b}});
  CHECK(t.pose_at(0).translation == a.translation);
  CHECK(t.pose_at(10).rotation.isApprox(b.rotation, 1e-12));
  const RigidTransform mid = t.pose_at(5);
  CHECK(mid.rotation.isApprox(axis_angle(Vec3::UnitZ(), 0.5), 1e-12));
  CHECK(mid.translation.isApprox(Vec3(0.5, 0, 1)));
  CHECK(t.pose_at(30).translation == b.translation);
  CHECK(error_of([&] { TrajectorySpec({{1, a}}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([&] { TrajectorySpec({{0, a}, {0, b}}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([&] { TrajectorySpec({}); }) == ErrorCode::InvalidArgument);

  const TrajectorySpec d = default_trajectory(100, 0.5);
  CHECK(d.keyframes().front().frame == 0);
  CHECK(d.last_keyframe() == 99);
  for (int f = 0; f < 100; ++f) {
    const RigidTransform p = d.pose_at(f);
    CHECK(p.translation.z() > 0.4);
    CHECK((p.rotation * p.rotation.transpose() - Mat3::Identity()).norm() < 1e-12);
  }
  const TrajectorySpec o = orbit_trajectory(80, Vec3(0, 0, 0.5), 0.1, 40);
  CHECK((o.pose_at(0).translation - Vec3(0, 0, 0.4)).norm() < 1e-12);
  CHECK((o.pose_at(20).translation - Vec3(0, 0, 0.6)).norm() < 1e-9);
}

TEST_CASE("variants and light") {
  const Vec3 c(0, 0, 0.5);
  CHECK(make_variant("regular", c, 0.1, 10).noise_sigma == 0.0);
  CHECK_FALSE(make_variant("regular", c, 0.1, 10).dynamic_light);
  CHECK(make_variant("dynlight", c, 0.1, 10).noise_sigma == 0.0);
  CHECK(make_variant("dynlight", c, 0.1, 10).dynamic_light);
  CHECK(make_variant("noisy", c, 0.1, 10).noise_sigma == 10.0);
  CHECK_FALSE(make_variant("noisy", c, 0.1, 10).occluder.has_value());
  CHECK(make_variant("occlusion", c, 0.1, 10).occluder.has_value());
  CHECK(error_of([&] { make_variant("fog", c, 0.1, 10); }) == ErrorCode::InvalidArgument);

  const SequenceVariant dyn = make_variant("dynlight", c, 0.1, 10);
  const double step = std::acos(light_direction(dyn, 0).dot(light_direction(dyn, 1)));
  const Vec3 l0 = light_direction(dyn, 0), l1 = light_direction(dyn, 1);
  CHECK(l1.y() == doctest::Approx(l0.y()));
  CHECK(step == doctest::Approx(std::acos(std::cos(kDegree) * (1 - l0.y() * l0.y()) + l0.y() * l0.y())));
  CHECK(light_direction(make_variant("regular", c, 0.1, 10), 50) == l0);
  CHECK(default_camera(320, 256).fx == 300.0);
  CHECK(default_camera(640, 512).cx == 319.5);
}

TEST_CASE("sequence rendering") {
  SequenceRequest r;
  r.object = make_two_tone_cube(0.1, 2, Vec3(0.8, 0.2, 0.2), Vec3(0.2, 0.3, 0.8));
  r.camera = default_camera(64, 48);
  r.trajectory = TrajectorySpec({{0, RigidTransform::translate({0, 0, 0.5})}});
  r.backgrounds = {make_background(64, 48, 1)};
  r.frames = 2;
  const GeneratedSequence s = render_sequence(r);
  REQUIRE(s.frames.size() == 2);
  CHECK(s.poses[0][0].translation == s.poses[1][0].translation);
  CHECK(s.poses[0][0].rotation == r.trajectory.pose_at(0).rotation);
  CHECK(s.frames[0] == s.frames[1]);
  CHECK(render_sequence(r).frames[0] == s.frames[0]);

  r.backgrounds = {make_background(32, 32, 1)};
  CHECK(error_of([&] { render_sequence(r); }) == ErrorCode::DimensionMismatch);
  r.backgrounds = {};
  CHECK(error_of([&] { render_sequence(r); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("the orbiting occluder covers the object in some frames") {
  SequenceRequest r;
  r.object = make_two_tone_cube(0.1, 2, Vec3(0.8, 0.2, 0.2), Vec3(0.2, 0.3, 0.8));
  r.camera = default_camera(160, 128);
  r.frames = 40;
  r.trajectory = TrajectorySpec({{0, RigidTransform::translate({0, 0, 0.5})}});
  r.variant = make_variant("occlusion", Vec3(0, 0, 0.5), 0.12, r.frames);
  int occluded = 0, free = 0;
  for (int f = 0; f < r.frames; ++f) {
    const RigidTransform occ = r.variant.occluder->trajectory.pose_at(f);
    const ShadedObject alone{&r.object, r.trajectory.pose_at(f)};
    const std::vector<ShadedObject> both{alone, {&r.variant.occluder->mesh, occ}};
    const Sprite a = shade(std::span(&alone, 1), r.camera, Vec3(0, 0, -1));
    const Sprite b = shade(both, r.camera, Vec3(0, 0, -1));
    int overwritten = 0;
    for (std::size_t i = 0; i < a.index.size(); ++i)
      overwritten += a.index.data()[i] == 1 && b.index.data()[i] == 2;
    (overwritten > 0 ? occluded : free) += 1;
  }
  CHECK(occluded > 0);
  CHECK(free > 0);
}

TEST_CASE("written sequences load back exactly") {
  SequenceRequest r;
  r.object = make_two_tone_cube(0.1, 2, Vec3(0.8, 0.2, 0.2), Vec3(0.2, 0.3, 0.8));
  r.camera = default_camera(64, 48);
  r.frames = 6;
  r.trajectory = default_trajectory(r.frames, 0.5, 2);
  r.variant = make_variant("occlusion", Vec3(0, 0, 0.5), 0.1, r.frames);
  r.backgrounds = {make_background(64, 48, 1), make_background(64, 48, 2)};
  r.seed = 4;
  const auto dir = std::filesystem::temp_directory_path() / "regtrack_synth_roundtrip";
  std::filesystem::remove_all(dir);
  generate_sequence(r, dir);
  const GeneratedSequence mem = render_sequence(r);
  const Sequence seq = load_sequence(dir);
  CHECK(seq.frame_count() == 6);
  CHECK(seq.object_count() == 2);
  CHECK(seq.camera() == r.camera);
  CHECK(seq.meshes().size() == 2);
  for (std::size_t f = 0; f < 6; ++f) {
    CHECK(seq.frame(f) == mem.frames[f]);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK((seq.poses(f)[j].rotation - mem.poses[f][j].rotation).norm() < 1e-9);
      CHECK((seq.poses(f)[j].translation - mem.poses[f][j].translation).norm() < 1e-9);
    }
  }
  std::filesystem::remove_all(dir);
}

#include "regtrack/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "regtrack/diagnostics.hpp"
#include "regtrack/error.hpp"
#include "regtrack/eval.hpp"
#include "regtrack/png_io.hpp"
#include "regtrack/settings.hpp"
#include "regtrack/synth.hpp"
#include "regtrack/tracker.hpp"

namespace regtrack {

namespace {

namespace fs = std::filesystem;

// Standard cube used when no mesh is given: 10 cm edge, red/blue faces.
constexpr double kCubeEdge = 0.1;
const Vec3 kToneA(0.8, 0.22, 0.18);
const Vec3 kToneB(0.18, 0.3, 0.8);

struct SynthConfig {
  std::string out;
  std::string mesh;
  std::vector<std::string> backgrounds;
  int frames = 100;
  std::string resolution = "320x256";
  std::string variant = "regular";
  double noise_sigma = 10.0;
  std::uint64_t seed = 0;
};

struct TrackConfig {
  std::string seq;
  std::vector<std::string> meshes;
  std::string out;
  std::string protocol = "rbot";
  std::string settings;
  std::string overlay;
  std::optional<std::uint64_t> seed;
};

struct JacobianConfig {
  std::string mesh;
  std::uint64_t seed = 0;
  int scenes = 1;
  bool inject_sign_flip = false;
};

std::pair<int, int> parse_resolution(const std::string& text) {
  int w = 0, h = 0;
  char x = 0, extra = 0;
  if (std::sscanf(text.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || (x != 'x' && x != 'X') ||
      w < 16 || h < 16)
    throw Error(ErrorCode::InvalidArgument, "resolution must look like 320x256");
  return {w, h};
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::Io, "no such file: " + path);
}

int cmd_synth(const SynthConfig& c, std::ostream& out) {
  const auto [w, h] = parse_resolution(c.resolution);
  if (c.frames < 1) throw Error(ErrorCode::InvalidArgument, "--frames must be positive");
  for (const auto& b : c.backgrounds) require_file(b);
  SequenceRequest r;
  if (!c.mesh.empty()) {
    require_file(c.mesh);
    r.object = paint_two_tone(load_obj(c.mesh), kToneA, kToneB);
  } else {
    r.object = make_two_tone_cube(kCubeEdge, 4, kToneA, kToneB);
  }
  // keep the object at the apparent size of the standard cube at 0.5 m
  const double scale = r.object.mesh.diameter() / (kCubeEdge * std::sqrt(3.0));
  const double distance = 0.5 * scale;
  r.camera = default_camera(w, h);
  r.frames = c.frames;
  r.seed = c.seed;
  r.trajectory = default_trajectory(c.frames, distance);
  r.variant = make_variant(c.variant, Vec3(0.0, 0.0, distance), 0.12 * scale, c.frames,
                           c.noise_sigma, 0.07 * scale);
  if (c.backgrounds.empty()) {
    r.backgrounds.push_back(make_background(w, h, c.seed));
  } else {
    for (const auto& b : c.backgrounds) {
      RgbImage img = read_png_rgb(b);
      if (img.width() != w || img.height() != h)
        throw Error(ErrorCode::InvalidArgument, b + ": background must be " + c.resolution);
      r.backgrounds.push_back(std::move(img));
    }
  }
  generate_sequence(r, c.out);
  out << "wrote " << c.frames << " frames (" << c.variant << ", " << w << "x" << h << ") to "
      << c.out << "\n";
  return kExitOk;
}

int cmd_track(const TrackConfig& c, std::ostream& out) {
  if (c.protocol != "rbot" && c.protocol != "auc")
    throw Error(ErrorCode::InvalidArgument, "--protocol must be rbot or auc");
  const Sequence seq = load_sequence(c.seq);
  std::vector<TriangleMesh> meshes;
  if (!c.meshes.empty()) {
    for (const auto& m : c.meshes) {
      require_file(m);
      meshes.push_back(load_obj(m));
    }
  } else {
    meshes = seq.meshes();
  }
  if (meshes.size() != seq.object_count())
    throw Error(ErrorCode::InvalidArgument, "need one mesh per object (" +
                                                std::to_string(seq.object_count()) + ")");
  TrackerSettings settings;
  if (!c.settings.empty()) settings = load_settings(c.settings);
  if (c.seed) settings.seed = *c.seed;

  std::vector<MeshPair> pairs;
  for (const auto& m : meshes) pairs.push_back(MeshPair::from_full(m));
  Tracker tracker(std::move(pairs), seq.camera(), settings);

  FrameObserver observer;
  if (!c.overlay.empty()) {
    fs::create_directories(c.overlay);
    observer = [&](std::size_t f, const RgbImage& image, const std::vector<RigidTransform>& poses) {
      char name[32];
      std::snprintf(name, sizeof name, "%06zu.png", f);
      write_png(fs::path(c.overlay) / name, draw_overlay(image, meshes, poses, seq.camera()));
    };
  }
  const auto reports = c.protocol == "rbot"
                           ? rbot_protocol(tracker, seq, Thresholds{}, meshes, observer)
                           : auc_protocol(tracker, seq, meshes, Thresholds{}, observer);
  fs::create_directories(c.out);
  write_report_json(fs::path(c.out) / "report.json", reports);
  write_report_csv(fs::path(c.out) / "report.csv", reports);
  out << std::fixed << std::setprecision(2);
  for (const auto& r : reports) {
    out << "object " << r.object << ": success_rate " << r.success_rate << "% resets "
        << r.resets << " auc_score " << r.auc_score << "\n";
  }
  return kExitOk;
}

int cmd_check_jacobian(const JacobianConfig& c, std::ostream& out) {
  TriangleMesh mesh = make_icosphere(0.05, 2);
  if (!c.mesh.empty()) {
    require_file(c.mesh);
    mesh = load_obj(c.mesh);
  }
  JacobianCheckOptions o;
  o.seed = c.seed;
  o.scenes = c.scenes;
  o.flip_sign = c.inject_sign_flip;
  const auto r = check_jacobian(mesh, o);
  out << std::scientific << std::setprecision(3) << "pixels " << r.pixels << " max "
      << r.max_relative << " median " << r.median_relative << " p99 " << r.p99_relative << "\n";
  const bool ok = r.pixels > 0 && r.median_relative < 1e-3;
  out << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitMetricFailure;
}

bool input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::TrackingDiverged:
    case ErrorCode::SingularSystem:
    case ErrorCode::EmptyAccumulation:
      return false;
    default:
      return true;
  }
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-based 6DOF pose tracking toolkit", "regtrack"};
  app.require_subcommand(1);

  SynthConfig synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic sequence");
  s->add_option("--out", synth.out, "Output sequence directory")->required();
  s->add_option("--mesh", synth.mesh, "OBJ model (default: built-in cube)");
  s->add_option("--background", synth.backgrounds, "Background PNG(s), cycled over frames");
  s->add_option("--frames", synth.frames, "Number of frames")->capture_default_str();
  s->add_option("--resolution", synth.resolution, "WxH")->capture_default_str();
  s->add_option("--variant", synth.variant, "regular, dynlight, noisy or occlusion")
      ->check(CLI::IsMember({"regular", "dynlight", "noisy", "occlusion"}))
      ->capture_default_str();
  s->add_option("--noise-sigma", synth.noise_sigma, "Noise of the noisy/occlusion variants")
      ->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  TrackConfig track;
  auto* t = app.add_subcommand("track", "Track a sequence and evaluate it");
  t->add_option("--seq", track.seq, "Sequence directory")->required();
  t->add_option("--mesh", track.meshes, "OBJ model per object (default: from the sequence)");
  t->add_option("--out", track.out, "Report directory")->required();
  t->add_option("--protocol", track.protocol, "rbot or auc")
      ->check(CLI::IsMember({"rbot", "auc"}))
      ->capture_default_str();
  t->add_option("--settings", track.settings, "key = value settings file");
  t->add_option("--overlay", track.overlay, "Write contour overlays here");
  t->add_option("--seed", track.seed, "Random seed (overrides the settings file)");

  JacobianConfig jac;
  auto* j = app.add_subcommand("check-jacobian", "Compare analytic and numeric Jacobians");
  j->add_option("--mesh", jac.mesh, "OBJ model (default: built-in sphere)");
  j->add_option("--seed", jac.seed, "Random seed")->capture_default_str();
  j->add_option("--scenes", jac.scenes, "Number of random scenes")->capture_default_str();
  j->add_flag("--inject-sign-flip", jac.inject_sign_flip)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*s) return cmd_synth(synth, out);
    if (*t) return cmd_track(track, out);
    return cmd_check_jacobian(jac, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return input_error(e.code()) ? kExitInputError : kExitMetricFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage{"regtrack"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace regtrack

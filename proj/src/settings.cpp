#include "regtrack/settings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "regtrack/error.hpp"

namespace regtrack {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, key + ": not a number: '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorCode::InvalidArgument, key + ": not an integer: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw Error(ErrorCode::InvalidArgument, key + ": not a boolean: '" + v + "'");
}

}  // namespace

void TrackerSettings::validate() const {
  optimization.validate();
  if (!(histogram_radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  if (!(alpha_f >= 0.0 && alpha_f <= 1.0) || !(alpha_b >= 0.0 && alpha_b <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "learning rates must lie in [0, 1]");
  if (!(center_lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative lambda");
  if (max_centers == 0) throw Error(ErrorCode::InvalidArgument, "max_centers must be positive");
}

double TrackerSettings::radius_for(const CameraIntrinsics& k) const {
  return histogram_radius * std::sqrt(double(k.width) * double(k.height) / (640.0 * 512.0));
}

void apply_setting(TrackerSettings& s, const std::string& key, const std::string& value) {
  OptimizationSettings& o = s.optimization;
  if (key == "heaviside_pitch") o.heaviside_pitch = parse_double(key, value);
  else if (key == "band") o.band = static_cast<int>(parse_int(key, value));
  else if (key == "iterations") {
    o.pyramid_iterations.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
      o.pyramid_iterations.push_back(static_cast<int>(parse_int(key, trim(item))));
  } else if (key == "min_roi_area") o.min_roi_area = parse_double(key, value);
  else if (key == "z_near") o.frustum.z_near = parse_double(key, value);
  else if (key == "z_far") o.frustum.z_far = parse_double(key, value);
  else if (key == "occlusion_handling") o.occlusion_handling = parse_bool(key, value);
  else if (key == "backside_terms") o.backside_terms = parse_bool(key, value);
  else if (key == "contour_offset") o.contour_offset = parse_double(key, value);
  else if (key == "normalize_posteriors") o.normalize_posteriors = parse_bool(key, value);
  else if (key == "damping") o.damping_factor = parse_double(key, value);
  else if (key == "divergence_ratio") o.divergence_ratio = parse_double(key, value);
  else if (key == "histogram_radius") s.histogram_radius = parse_double(key, value);
  else if (key == "alpha_f") s.alpha_f = parse_double(key, value);
  else if (key == "alpha_b") s.alpha_b = parse_double(key, value);
  else if (key == "center_lambda") s.center_lambda = parse_double(key, value);
  else if (key == "max_centers") {
    const long long n = parse_int(key, value);
    if (n <= 0) throw Error(ErrorCode::InvalidArgument, "max_centers must be positive");
    s.max_centers = static_cast<std::size_t>(n);
  } else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else throw Error(ErrorCode::InvalidArgument, "unknown setting '" + key + "'");
}

TrackerSettings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open settings file " + path.string());
  TrackerSettings s;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ":" + std::to_string(number) + ": expected key = value");
    apply_setting(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  s.validate();
  return s;
}

std::string format_settings(const TrackerSettings& s) {
  const OptimizationSettings& o = s.optimization;
  std::ostringstream out;
  out.precision(17);
  out << "heaviside_pitch = " << o.heaviside_pitch << "\nband = " << o.band << "\niterations = ";
  for (std::size_t i = 0; i < o.pyramid_iterations.size(); ++i)
    out << (i ? "," : "") << o.pyramid_iterations[i];
  out << "\nmin_roi_area = " << o.min_roi_area << "\nz_near = " << o.frustum.z_near
      << "\nz_far = " << o.frustum.z_far << "\nocclusion_handling = " << o.occlusion_handling
      << "\nbackside_terms = " << o.backside_terms << "\ncontour_offset = " << o.contour_offset
      << "\nnormalize_posteriors = " << o.normalize_posteriors << "\ndamping = " << o.damping_factor
      << "\ndivergence_ratio = " << o.divergence_ratio
      << "\nhistogram_radius = " << s.histogram_radius << "\nalpha_f = " << s.alpha_f
      << "\nalpha_b = " << s.alpha_b << "\ncenter_lambda = " << s.center_lambda
      << "\nmax_centers = " << s.max_centers << "\nseed = " << s.seed << "\n";
  return out.str();
}

}  // namespace regtrack

#include "regtrack/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "regtrack/error.hpp"

namespace regtrack {

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int n = static_cast<int>(vertices_.size());
  for (const auto& tri : triangles_) {
    for (int idx : tri) {
      if (idx < 0 || idx >= n)
        throw Error(ErrorCode::DegenerateMesh,
                    "triangle index " + std::to_string(idx) + " out of range");
    }
  }
  for (const auto& v : vertices_) {
    if (!v.allFinite()) throw Error(ErrorCode::DegenerateMesh, "non-finite vertex");
  }
  diameter_ = mesh_diameter(vertices_);
}

std::pair<Vec3, Vec3> TriangleMesh::bounds() const {
  if (vertices_.empty()) return {Vec3::Zero(), Vec3::Zero()};
  Vec3 lo = vertices_.front();
  Vec3 hi = vertices_.front();
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

std::array<Vec3, 8> TriangleMesh::bounding_box_corners() const {
  const auto [lo, hi] = bounds();
  std::array<Vec3, 8> corners;
  for (int i = 0; i < 8; ++i) {
    corners[static_cast<std::size_t>(i)] =
        Vec3((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  return corners;
}

double mesh_diameter(const std::vector<Vec3>& vertices) {
  const std::size_t n = vertices.size();
  if (n < 2) return 0.0;
  Vec3 centroid = Vec3::Zero();
  for (const auto& v : vertices) centroid += v;
  centroid /= static_cast<double>(n);

  // Visit vertices by decreasing distance to the centroid; a pair (i, j) can be no
  // longer than r_i + r_j, which allows exact early termination.
  std::vector<std::pair<double, std::size_t>> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = {(vertices[i] - centroid).norm(), i};
  std::sort(order.begin(), order.end(), std::greater<>());

  double best_sq = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double ra = order[a].first;
    const double bound = ra + order[0].first;
    if (bound * bound < best_sq) break;
    const Vec3& va = vertices[order[a].second];
    for (std::size_t b = 0; b < a; ++b) {
      const double rb = order[b].first;
      if ((ra + rb) * (ra + rb) < best_sq) break;
      best_sq = std::max(best_sq, (va - vertices[order[b].second]).squaredNorm());
    }
  }
  return std::sqrt(best_sq);
}

MeshPair MeshPair::from_full(TriangleMesh full, int max_vertices) {
  TriangleMesh reduced = decimate_mesh(full, max_vertices);
  return {std::move(full), std::move(reduced)};
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open mesh " + path.string());
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::MeshFormat,
                path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) fail("expected three vertex coordinates");
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        try {
          std::size_t used = 0;
          const int v = std::stoi(head, &used);
          if (used != head.size()) fail("bad face index '" + tok + "'");
          idx.push_back(v);
        } catch (const std::logic_error&) {
          fail("bad face index '" + tok + "'");
        }
      }
      if (idx.size() != 3) fail("only triangular faces are supported");
      Triangle tri{};
      for (std::size_t i = 0; i < 3; ++i) {
        if (idx[i] < 1) fail("face indices are 1-based");
        tri[i] = idx[i] - 1;
      }
      triangles.push_back(tri);
    }
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles())
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriangleMesh decimate_mesh(const TriangleMesh& full, int max_vertices) {
  if (full.empty()) throw Error(ErrorCode::DegenerateMesh, "cannot decimate an empty mesh");
  if (max_vertices < 4) throw Error(ErrorCode::InvalidArgument, "max_vertices must be >= 4");
  if (static_cast<int>(full.vertex_count()) <= max_vertices) return full;

  const auto& verts = full.vertices();
  const auto& tris = full.triangles();
  std::vector<double> cumulative;
  cumulative.reserve(tris.size());
  double total = 0.0;
  for (const auto& t : tris) {
    total += 0.5 * (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]).norm();
    cumulative.push_back(total);
  }

  // Candidate pool: the original vertices when the surface has no area, otherwise
  // uniform samples over the surface.
  std::vector<Vec3> pool;
  if (total <= 0.0) {
    pool = verts;
  } else {
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const std::size_t samples = static_cast<std::size_t>(max_vertices) * 8;
    pool.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
      const double pick = uni(rng) * total;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
      const auto& t = tris[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                                  tris.size() - 1)];
      double u = uni(rng);
      double v = uni(rng);
      if (u + v > 1.0) {
        u = 1.0 - u;
        v = 1.0 - v;
      }
      pool.push_back(verts[t[0]] + u * (verts[t[1]] - verts[t[0]]) + v * (verts[t[2]] - verts[t[0]]));
    }
  }

  // Farthest-point selection seeded at the first candidate.
  const std::size_t n = pool.size();
  const std::size_t keep = std::min<std::size_t>(n, static_cast<std::size_t>(max_vertices));
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<Vec3> selected;
  selected.reserve(keep);
  std::size_t current = 0;
  for (std::size_t k = 0; k < keep; ++k) {
    selected.push_back(pool[current]);
    std::size_t next = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (pool[i] - pool[current]).squaredNorm());
      if (dist[i] > far) {
        far = dist[i];
        next = i;
      }
    }
    current = next;
  }
  return TriangleMesh(std::move(selected), {});
}

TriangleMesh make_cube(double size, int subdivisions) {
  if (subdivisions < 1) throw Error(ErrorCode::InvalidArgument, "subdivisions must be >= 1");
  const double h = 0.5 * size;
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  // Each face: normal n, in-plane axes (u, v) with u x v = n so triangles face outward.
  const std::array<std::array<Vec3, 3>, 6> faces{{
      {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()},
      {-Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY()},
      {Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX()},
      {-Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitZ()},
      {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()},
      {-Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX()},
  }};
  const int n = subdivisions;
  for (const auto& [normal, u, v] : faces) {
    const int base = static_cast<int>(vertices.size());
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        const double a = -h + size * i / n;
        const double b = -h + size * j / n;
        vertices.push_back(h * normal + a * u + b * v);
      }
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const int v00 = base + j * (n + 1) + i;
        const int v10 = v00 + 1;
        const int v01 = v00 + (n + 1);
        const int v11 = v01 + 1;
        triangles.push_back({v00, v10, v11});
        triangles.push_back({v00, v11, v01});
      }
    }
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, p, 0}, {1, p, 0},  {-1, -p, 0}, {1, -p, 0},
                      {0, -1, p}, {0, 1, p},  {0, -1, -p}, {0, 1, -p},
                      {p, 0, -1}, {p, 0, 1},  {-p, 0, -1}, {-p, 0, 1}};
  for (auto& x : v) x.normalize();
  std::vector<Triangle> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                          {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                          {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                          {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoints;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int a = mid(t[0], t[1]);
      const int b = mid(t[1], t[2]);
      const int c = mid(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& x : v) x *= radius;
  return TriangleMesh(std::move(v), std::move(f));
}

}  // namespace regtrack

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "regtrack/error.hpp"
#include "regtrack/mesh.hpp"

using namespace regtrack;

namespace {

TriangleMesh tetrahedron() {
  return TriangleMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                      {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}});
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "regtrack_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("diameter equals the brute-force maximum distance") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  std::vector<Vec3> v;
  for (int i = 0; i < 300; ++i) v.emplace_back(g(rng), 2 * g(rng), 0.5 * g(rng));
  double best = 0;
  for (const auto& a : v)
    for (const auto& b : v) best = std::max(best, (a - b).norm());
  CHECK(mesh_diameter(v) == best);
  CHECK(tetrahedron().diameter() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("mesh validation") {
  CHECK_THROWS_AS(TriangleMesh({{0, 0, 0}}, {{0, 1, 2}}), Error);
  CHECK_THROWS_AS(TriangleMesh({{0, 0, std::nan("")}}, {}), Error);
}

TEST_CASE("decimation keeps small meshes") {
  const TriangleMesh m = make_icosphere(1.0, 1);
  REQUIRE(m.vertex_count() < 5000);
  const TriangleMesh d = decimate_mesh(m, 5000);
  CHECK(d.vertices() == m.vertices());
  const TriangleMesh t = decimate_mesh(tetrahedron(), 4);
  CHECK(t.vertex_count() == 4);
}

TEST_CASE("decimation of a dense sphere spreads the samples") {
  const TriangleMesh sphere = make_icosphere(1.0, 6);  // 40962 vertices
  REQUIRE(sphere.vertex_count() > 20000);
  const TriangleMesh d = decimate_mesh(sphere, 5000);
  CHECK(d.vertex_count() <= 5000);
  CHECK(d.vertex_count() > 4000);
  // every sphere vertex has a kept sample nearby
  double gap = 0;
  for (std::size_t i = 0; i < sphere.vertex_count(); i += 7) {
    double nearest = 1e9;
    for (const Vec3& q : d.vertices()) nearest = std::min(nearest, (sphere.vertices()[i] - q).norm());
    gap = std::max(gap, nearest);
  }
  CHECK(gap < 0.2);
}

TEST_CASE("decimation errors") {
  CHECK_THROWS_AS(decimate_mesh(TriangleMesh({}, {}), 100), Error);
  try {
    decimate_mesh(TriangleMesh({}, {}), 100);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateMesh);
  }
}

TEST_CASE("mesh pair caps the reduced mesh") {
  const MeshPair p = MeshPair::from_full(make_icosphere(1.0, 6));
  CHECK(p.reduced.vertex_count() <= 5000);
  CHECK(p.full.vertex_count() > 20000);
}

TEST_CASE("cube faces wind outwards") {
  const TriangleMesh c = make_cube(2.0, 3);
  for (const auto& t : c.triangles()) {
    const auto& v = c.vertices();
    const Vec3 n = (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]);
    const Vec3 centroid = (v[t[0]] + v[t[1]] + v[t[2]]) / 3.0;
    CHECK(n.dot(centroid) > 0);
  }
  const auto [lo, hi] = c.bounds();
  CHECK((hi - lo - Vec3(2, 2, 2)).norm() < 1e-12);
}

TEST_CASE("OBJ round trip") {
  const TriangleMesh c = make_cube(0.1, 2);
  const auto path = temp_file("cube.obj");
  save_obj(path, c);
  const TriangleMesh back = load_obj(path);
  CHECK(back.triangles() == c.triangles());
  REQUIRE(back.vertex_count() == c.vertex_count());
  for (std::size_t i = 0; i < c.vertex_count(); ++i)
    CHECK((back.vertices()[i] - c.vertices()[i]).norm() < 1e-15);
}

TEST_CASE("OBJ face forms and errors") {
  const auto path = temp_file("forms.obj");
  {
    std::ofstream out(path);
    out << "# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 3\n";
  }
  CHECK(load_obj(path).triangles().size() == 1);
  {
    std::ofstream out(path);
    out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n";
  }
  CHECK_THROWS_AS(load_obj(path), Error);
  CHECK_THROWS_AS(load_obj(temp_file("missing.obj")), Error);
}

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "regtrack/geometry.hpp"

namespace regtrack {

using Triangle = std::array<int, 3>;

/// Triangle mesh in model coordinates (meters).
class TriangleMesh {
 public:
  TriangleMesh() = default;
  /// Validates indices and computes the diameter. DegenerateMesh on bad indices.
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  /// Largest distance between two vertices.
  double diameter() const noexcept { return diameter_; }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  bool empty() const noexcept { return vertices_.empty(); }

  /// Axis-aligned bounding box corners (min, max).
  std::pair<Vec3, Vec3> bounds() const;
  /// The eight corners of the bounding box.
  std::array<Vec3, 8> bounding_box_corners() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  double diameter_ = 0.0;
};

/// Full mesh for rendering plus a reduced, evenly sampled vertex set that anchors
/// the local appearance histograms.
struct MeshPair {
  TriangleMesh full;
  TriangleMesh reduced;

  static constexpr int kMaxReducedVertices = 5000;
  static MeshPair from_full(TriangleMesh full, int max_vertices = kMaxReducedVertices);
};

/// Exact maximum pairwise distance.
double mesh_diameter(const std::vector<Vec3>& vertices);

/// Reads `v x y z` and `f i j k` lines (1-based, `i/t/n` forms accepted); all other
/// lines are ignored. MeshFormat on malformed or non-triangle faces.
TriangleMesh load_obj(const std::filesystem::path& path);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Reduces a mesh to at most `max_vertices` points spread evenly over its surface:
/// area-weighted surface sampling followed by farthest-point selection. Meshes
/// already under budget are returned unchanged. The result carries no triangles.
TriangleMesh decimate_mesh(const TriangleMesh& full, int max_vertices);

/// Axis-aligned cube of edge length `size` centered at the origin. Every face is a
/// separate `subdivisions` x `subdivisions` grid so faces can carry their own colors.
TriangleMesh make_cube(double size, int subdivisions = 1);

/// Sphere from a subdivided icosahedron, outward-facing triangles.
TriangleMesh make_icosphere(double radius, int subdivisions);

}  // namespace regtrack

#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace relief {

/// Everything downstream works in normalized scene units: the coarse mesh is
/// rescaled and centered to fit this box before any sampling or training.
constexpr double kSceneBoxHalf = 1.0;

/// Indexed triangle mesh. Faces reference vertices; load-time cleanup drops
/// degenerate (zero-area) triangles and validates indices.
struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return faces.empty(); }

    Eigen::Vector3d face_normal(int f) const;  // unit, zero for degenerate
    double face_area(int f) const;
    double total_area() const;
    void bounds(Eigen::Vector3d& lo, Eigen::Vector3d& hi) const;
};

/// Wavefront OBJ, ASCII 'v'/'f' records, 1-based indices; polygon faces are
/// fan-triangulated on load, normals/UVs/materials ignored.
TriMesh load_obj(const std::string& path);
void save_obj(const std::string& path, const TriMesh& mesh);

struct NormalizeTransform {
    double scale = 1.0;             // applied after centering
    Eigen::Vector3d center{0, 0, 0};  // subtracted first
};

/// Centers the mesh and scales it uniformly so the longest bbox side spans
/// the side-2 scene cube. Returns the applied transform.
NormalizeTransform normalize_to_scene_box(TriMesh& mesh);

/// Icosphere of the given radius; subdivisions >= 0 (0 is the icosahedron).
TriMesh make_icosphere(int subdivisions, double radius = 1.0);

}  // namespace relief

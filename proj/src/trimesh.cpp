#include "relief/trimesh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "relief/errors.hpp"

namespace relief {

Eigen::Vector3d TriMesh::face_normal(int f) const {
    const auto& t = faces[f];
    const Eigen::Vector3d n =
        (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    const double len = n.norm();
    return len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
}

double TriMesh::face_area(int f) const {
    const auto& t = faces[f];
    return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

double TriMesh::total_area() const {
    double a = 0.0;
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) a += face_area(f);
    return a;
}

void TriMesh::bounds(Eigen::Vector3d& lo, Eigen::Vector3d& hi) const {
    lo.setConstant(std::numeric_limits<double>::infinity());
    hi.setConstant(-std::numeric_limits<double>::infinity());
    for (const auto& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
}

namespace {

int resolve_index(long idx, size_t n_vertices, const std::string& path) {
    long r = idx > 0 ? idx - 1 : static_cast<long>(n_vertices) + idx;
    if (r < 0 || r >= static_cast<long>(n_vertices))
        throw IoError("obj: face index out of range in " + path);
    return static_cast<int>(r);
}

void drop_degenerate_faces(TriMesh& mesh) {
    Eigen::Vector3d lo, hi;
    if (mesh.vertices.empty()) return;
    mesh.bounds(lo, hi);
    const double diag = (hi - lo).norm();
    const double min_area = 1e-14 * std::max(diag * diag, 1e-30);
    std::vector<std::array<int, 3>> kept;
    kept.reserve(mesh.faces.size());
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
        const auto& t = mesh.faces[f];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
        if (mesh.face_area(f) <= min_area) continue;
        kept.push_back(t);
    }
    mesh.faces = std::move(kept);
}

}  // namespace

TriMesh load_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open mesh: " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(f, line)) {
        if (line.size() < 2) continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Eigen::Vector3d v;
            ss >> v.x() >> v.y() >> v.z();
            if (ss.fail()) throw IoError("obj: malformed vertex in " + path);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string item;
            while (ss >> item) {
                // "i", "i/j", "i//k", "i/j/k" -- only the position index matters
                const long idx = std::strtol(item.c_str(), nullptr, 10);
                if (idx == 0) throw IoError("obj: malformed face in " + path);
                poly.push_back(resolve_index(idx, mesh.vertices.size(), path));
            }
            if (poly.size() < 3) throw IoError("obj: face with fewer than 3 vertices in " + path);
            for (size_t k = 2; k < poly.size(); ++k)
                mesh.faces.push_back({poly[0], poly[static_cast<int>(k) - 1], poly[static_cast<int>(k)]});
        }
    }
    drop_degenerate_faces(mesh);
    return mesh;
}

void save_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write mesh: " + path);
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        f << buf;
    }
    for (const auto& t : mesh.faces) f << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (!f) throw IoError("short write on mesh: " + path);
}

NormalizeTransform normalize_to_scene_box(TriMesh& mesh) {
    if (mesh.vertices.empty()) throw std::invalid_argument("normalize: empty mesh");
    Eigen::Vector3d lo, hi;
    mesh.bounds(lo, hi);
    NormalizeTransform t;
    t.center = 0.5 * (lo + hi);
    const double extent = (hi - lo).maxCoeff();
    t.scale = extent > 0.0 ? 2.0 * kSceneBoxHalf / extent : 1.0;
    for (auto& v : mesh.vertices) v = (v - t.center) * t.scale;
    return t;
}

TriMesh make_icosphere(int subdivisions, double radius) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                  {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                  {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : m.vertices) v.normalize();
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const Eigen::Vector3d v = (m.vertices[a] + m.vertices[b]).normalized();
            m.vertices.push_back(v);
            const int idx = static_cast<int>(m.vertices.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.faces.size() * 4);
        for (const auto& t : m.faces) {
            const int ab = mid(t[0], t[1]);
            const int bc = mid(t[1], t[2]);
            const int ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.faces = std::move(next);
    }
    for (auto& v : m.vertices) v *= radius;
    return m;
}

}  // namespace relief

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace relief {

struct Ray {
    Eigen::Vector3d origin{0, 0, 0};
    Eigen::Vector3d dir{0, 0, 1};  // unit
    int row = 0;
    int col = 0;
};

/// Pinhole camera. `rotation` maps camera coordinates to world coordinates;
/// the camera looks along its +z axis. Integer pixel indices are treated as
/// pixel centers, so the principal point (cx, cy) is itself a pixel
/// coordinate.
struct Camera {
    Eigen::Vector3d position{0, 0, 0};
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    double focal = 128.0;  // pixels
    int width = 128;
    int height = 128;
    Eigen::Vector2d principal{64.0, 64.0};  // (cx, cy)

    void validate() const;  // orthonormality within 1e-9, focal > 0
    Eigen::Vector3d forward() const { return rotation.col(2); }
    Ray pixel_ray(int row, int col) const;

    /// Camera at `position` looking at `target` with +y-ish up vector.
    static Camera look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target, double focal,
                          int width, int height);
};

std::vector<Ray> generate_rays(const Camera& cam, const std::vector<std::pair<int, int>>& pixels);
std::vector<Ray> generate_all_rays(const Camera& cam);

}  // namespace relief

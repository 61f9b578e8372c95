#include "relief/camera.hpp"

#include <stdexcept>

namespace relief {

void Camera::validate() const {
    if (focal <= 0.0) throw std::invalid_argument("camera: focal must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera: bad image size");
    const Eigen::Matrix3d e = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    if (e.cwiseAbs().maxCoeff() > 1e-9) throw std::invalid_argument("camera: rotation not orthonormal");
}

Ray Camera::pixel_ray(int row, int col) const {
    Ray r;
    r.origin = position;
    const Eigen::Vector3d d_cam((col - principal.x()) / focal, (row - principal.y()) / focal, 1.0);
    r.dir = (rotation * d_cam).normalized();
    r.row = row;
    r.col = col;
    return r;
}

Camera Camera::look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target, double focal,
                       int width, int height) {
    Camera c;
    c.position = position;
    c.focal = focal;
    c.width = width;
    c.height = height;
    c.principal = {width / 2.0, height / 2.0};
    const Eigen::Vector3d fwd = (target - position).normalized();
    Eigen::Vector3d up(0, 1, 0);
    if (std::abs(fwd.dot(up)) > 0.99) up = Eigen::Vector3d(1, 0, 0);
    const Eigen::Vector3d right = up.cross(fwd).normalized();
    const Eigen::Vector3d down = fwd.cross(right).normalized();  // +y grows with image row
    c.rotation.col(0) = right;
    c.rotation.col(1) = down;
    c.rotation.col(2) = fwd;
    return c;
}

std::vector<Ray> generate_rays(const Camera& cam, const std::vector<std::pair<int, int>>& pixels) {
    cam.validate();
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    for (const auto& [row, col] : pixels) {
        if (row < 0 || row >= cam.height || col < 0 || col >= cam.width)
            throw std::invalid_argument("generate_rays: pixel out of bounds");
        rays.push_back(cam.pixel_ray(row, col));
    }
    return rays;
}

std::vector<Ray> generate_all_rays(const Camera& cam) {
    cam.validate();
    std::vector<Ray> rays;
    rays.reserve(static_cast<size_t>(cam.width) * cam.height);
    for (int r = 0; r < cam.height; ++r)
        for (int c = 0; c < cam.width; ++c) rays.push_back(cam.pixel_ray(r, c));
    return rays;
}

}  // namespace relief

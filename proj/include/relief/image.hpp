#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace relief {

/// Row-major float image, values nominally in [0,1] for color.
struct ImageRGB {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // 3 per pixel

    ImageRGB() = default;
    ImageRGB(int h, int w, const Eigen::Vector3d& fill = {0, 0, 0});
    double* pixel(int r, int c) { return data.data() + 3 * (static_cast<size_t>(r) * width + c); }
    const double* pixel(int r, int c) const { return data.data() + 3 * (static_cast<size_t>(r) * width + c); }
    Eigen::Vector3d at(int r, int c) const { return Eigen::Map<const Eigen::Vector3d>(pixel(r, c)); }
    void set(int r, int c, const Eigen::Vector3d& v) { Eigen::Map<Eigen::Vector3d>(pixel(r, c)) = v; }
};

struct ImageGray {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    ImageGray() = default;
    ImageGray(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}
    double& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
};

// 8-bit PNG; color values are clamped to [0,1] on write and mapped back to
// [0,1] on read.
void write_png(const std::string& path, const ImageRGB& img);
ImageRGB read_png(const std::string& path);

// Single-channel mask PNG: nonzero = foreground (stored 0/255, read as 0/1).
void write_mask_png(const std::string& path, const ImageGray& mask);
ImageGray read_mask_png(const std::string& path);

// Portable float map, little-endian, bottom-to-top rows ("PF" color / "Pf" gray).
void write_pfm(const std::string& path, const ImageGray& img);
void write_pfm(const std::string& path, const ImageRGB& img);
ImageGray read_pfm_gray(const std::string& path);
ImageRGB read_pfm_rgb(const std::string& path);

}  // namespace relief

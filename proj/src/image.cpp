#include "relief/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "relief/errors.hpp"

namespace relief {

ImageRGB::ImageRGB(int h, int w, const Eigen::Vector3d& fill)
    : height(h), width(w), data(static_cast<size_t>(h) * w * 3) {
    for (size_t i = 0; i < data.size(); i += 3) {
        data[i] = fill.x();
        data[i + 1] = fill.y();
        data[i + 2] = fill.z();
    }
}

namespace {

uint8_t to_byte(double v) {
    const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<uint8_t>(c * 255.0 + 0.5);
}

struct PngWriter {
    FILE* f = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (f) std::fclose(f);
    }
};

struct PngReader {
    FILE* f = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (f) std::fclose(f);
    }
};

void write_png_bytes(const std::string& path, const std::vector<uint8_t>& bytes, int h, int w, int channels) {
    PngWriter ctx;
    ctx.f = std::fopen(path.c_str(), "wb");
    if (!ctx.f) throw IoError("cannot write image: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info || setjmp(png_jmpbuf(ctx.png))) throw IoError("png write failure: " + path);
    png_init_io(ctx.png, ctx.f);
    png_set_IHDR(ctx.png, ctx.info, w, h, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    for (int r = 0; r < h; ++r)
        png_write_row(ctx.png, const_cast<png_bytep>(bytes.data() + static_cast<size_t>(r) * w * channels));
    png_write_end(ctx.png, nullptr);
}

std::vector<uint8_t> read_png_bytes(const std::string& path, int& h, int& w, int& channels) {
    PngReader ctx;
    ctx.f = std::fopen(path.c_str(), "rb");
    if (!ctx.f) throw IoError("cannot read image: " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info || setjmp(png_jmpbuf(ctx.png))) throw IoError("png read failure: " + path);
    png_init_io(ctx.png, ctx.f);
    png_read_info(ctx.png, ctx.info);

    png_set_expand(ctx.png);
    png_set_strip_16(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    channels = static_cast<int>(png_get_channels(ctx.png, ctx.info));
    if (channels != 1 && channels != 3) throw IoError("unsupported png channel count in " + path);

    std::vector<uint8_t> bytes(static_cast<size_t>(h) * w * channels);
    for (int r = 0; r < h; ++r) png_read_row(ctx.png, bytes.data() + static_cast<size_t>(r) * w * channels, nullptr);
    return bytes;
}

void write_pfm_impl(const std::string& path, const double* data, int h, int w, int channels) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write pfm: " + path);
    f << (channels == 3 ? "PF" : "Pf") << '\n' << w << ' ' << h << '\n' << "-1.0" << '\n';
    // bottom-to-top scanlines per the format
    std::vector<float> row(static_cast<size_t>(w) * channels);
    for (int r = h - 1; r >= 0; --r) {
        const double* src = data + static_cast<size_t>(r) * w * channels;
        for (size_t i = 0; i < row.size(); ++i) row[i] = static_cast<float>(src[i]);
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw IoError("short write on pfm: " + path);
}

void read_pfm_impl(const std::string& path, std::vector<double>& data, int& h, int& w, int expect_channels) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read pfm: " + path);
    std::string tag;
    double scale = 0.0;
    f >> tag >> w >> h >> scale;
    f.get();  // single whitespace after the header
    const int channels = tag == "PF" ? 3 : (tag == "Pf" ? 1 : 0);
    if (channels != expect_channels) throw IoError("unexpected pfm type in " + path);
    if (scale >= 0.0) throw IoError("big-endian pfm not supported: " + path);
    data.resize(static_cast<size_t>(h) * w * channels);
    std::vector<float> row(static_cast<size_t>(w) * channels);
    for (int r = h - 1; r >= 0; --r) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!f) throw IoError("truncated pfm: " + path);
        double* dst = data.data() + static_cast<size_t>(r) * w * channels;
        for (size_t i = 0; i < row.size(); ++i) dst[i] = row[i];
    }
}

}  // namespace

void write_png(const std::string& path, const ImageRGB& img) {
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) bytes[i] = to_byte(img.data[i]);
    write_png_bytes(path, bytes, img.height, img.width, 3);
}

ImageRGB read_png(const std::string& path) {
    int h, w, channels;
    const auto bytes = read_png_bytes(path, h, w, channels);
    ImageRGB img(h, w);
    for (size_t p = 0; p < static_cast<size_t>(h) * w; ++p) {
        if (channels == 3)
            for (int k = 0; k < 3; ++k) img.data[3 * p + k] = bytes[3 * p + k] / 255.0;
        else
            for (int k = 0; k < 3; ++k) img.data[3 * p + k] = bytes[p] / 255.0;
    }
    return img;
}

void write_mask_png(const std::string& path, const ImageGray& mask) {
    std::vector<uint8_t> bytes(mask.data.size());
    for (size_t i = 0; i < mask.data.size(); ++i) bytes[i] = mask.data[i] != 0.0 ? 255 : 0;
    write_png_bytes(path, bytes, mask.height, mask.width, 1);
}

ImageGray read_mask_png(const std::string& path) {
    int h, w, channels;
    const auto bytes = read_png_bytes(path, h, w, channels);
    ImageGray mask(h, w);
    for (size_t p = 0; p < static_cast<size_t>(h) * w; ++p)
        mask.data[p] = bytes[p * channels] != 0 ? 1.0 : 0.0;
    return mask;
}

void write_pfm(const std::string& path, const ImageGray& img) {
    write_pfm_impl(path, img.data.data(), img.height, img.width, 1);
}

void write_pfm(const std::string& path, const ImageRGB& img) {
    write_pfm_impl(path, img.data.data(), img.height, img.width, 3);
}

ImageGray read_pfm_gray(const std::string& path) {
    ImageGray img;
    read_pfm_impl(path, img.data, img.height, img.width, 1);
    return img;
}

ImageRGB read_pfm_rgb(const std::string& path) {
    ImageRGB img;
    read_pfm_impl(path, img.data, img.height, img.width, 3);
    return img;
}

}  // namespace relief

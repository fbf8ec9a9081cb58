#pragma once

#include <string>
#include <vector>

namespace aufuzz {

/// 8-bit grayscale frame promoted to double precision (values 0..255).
/// Pixels are stored row-major; (x, y) indexing with y down.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pix;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), pix(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return pix[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pix[static_cast<std::size_t>(y) * width + x]; }

    bool contains(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0;
    }
};

/// Pixel access with symmetric (edge-repeating) reflection outside the frame.
double pixel_reflect(const Image& img, int x, int y);

/// Bilinear sample at subpixel coordinates; coordinates are clamped to the
/// valid interpolation rectangle.
double sample_bilinear(const Image& img, double x, double y);

/// Reads a binary P5 portable graymap (8-bit, maxval <= 255). Throws
/// std::runtime_error on malformed input.
Image read_pgm(const std::string& path);

/// Writes a binary P5 graymap; values are clamped to [0, 255] and rounded.
void write_pgm(const Image& img, const std::string& path);

} // namespace aufuzz

#include "aufuzz/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace aufuzz {

namespace {

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

// Skips whitespace and '#' comment lines in a PNM header.
int next_header_int(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw std::runtime_error("pgm: truncated header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw std::runtime_error("pgm: malformed header");
    return value;
}

} // namespace

double pixel_reflect(const Image& img, int x, int y) {
    return img.at(reflect_index(x, img.width), reflect_index(y, img.height));
}

double sample_bilinear(const Image& img, double x, double y) {
    x = std::clamp(x, 0.0, img.width - 1.0);
    y = std::clamp(y, 0.0, img.height - 1.0);
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    if (x0 >= img.width - 1) x0 = img.width - 2 >= 0 ? img.width - 2 : 0;
    if (y0 >= img.height - 1) y0 = img.height - 2 >= 0 ? img.height - 2 : 0;
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double a = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
    const double b = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
    return a * (1.0 - fy) + b * fy;
}

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("pgm: not a binary P5 file: " + path);
    const int w = next_header_int(in);
    const int h = next_header_int(in);
    const int maxval = next_header_int(in);
    if (w <= 0 || h <= 0) throw std::runtime_error("pgm: bad dimensions in " + path);
    if (maxval <= 0 || maxval > 255) throw std::runtime_error("pgm: only 8-bit maxval supported: " + path);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw std::runtime_error("pgm: truncated pixel data in " + path);
    Image img(w, h);
    for (std::size_t i = 0; i < raw.size(); ++i) img.pix[i] = raw[i];
    return img;
}

void write_pgm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.pix.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::clamp(img.pix[i], 0.0, 255.0);
        raw[i] = static_cast<unsigned char>(std::lround(v));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("pgm: short write to " + path);
}

} // namespace aufuzz

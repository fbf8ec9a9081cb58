#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aufuzz/gabor.hpp"

#include <cmath>

using namespace aufuzz;
using namespace aufuzz::gabor;

namespace {

Image grating(int w, int h, double wavelength, double theta, double amp = 100.0,
              double offset = 128.0) {
    Image img(w, h);
    const double k = 2.0 * M_PI / wavelength;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = offset + amp * std::cos(k * (x * std::cos(theta) + y * std::sin(theta)));
    return img;
}

double kernel_l1(const GaborKernel& k) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < k.real.size(); ++i) l1 += std::hypot(k.real[i], k.imag[i]);
    return l1;
}

} // namespace

TEST_CASE("make_bank: 4 scales x 4 orientations is 16 kernels") {
    const GaborBank bank = make_bank(4, 4, 15);
    CHECK(bank.size() == 16);
}

TEST_CASE("make_bank: single-kernel bank sits at angle zero") {
    const GaborBank bank = make_bank(1, 1, 11);
    REQUIRE(bank.size() == 1);
    CHECK(bank.kernels[0].orientation == doctest::Approx(0.0));
}

TEST_CASE("make_bank: every kernel is DC free") {
    const GaborBank bank = make_bank(4, 4, 17);
    for (const GaborKernel& k : bank.kernels) {
        double real_sum = 0.0;
        for (double v : k.real) real_sum += v;
        CHECK(std::abs(real_sum) <= 1e-10 * kernel_l1(k));
    }
}

TEST_CASE("make_bank: invalid shapes are rejected") {
    CHECK_THROWS_AS(make_bank(4, 4, 16), std::invalid_argument);  // even
    CHECK_THROWS_AS(make_bank(0, 4, 15), std::invalid_argument);
    CHECK_THROWS_AS(make_bank(4, 0, 15), std::invalid_argument);
    CHECK_THROWS_AS(make_bank(1, 1, 1), std::invalid_argument);  // < 3
}

TEST_CASE("convolve_frame: constant frames give a near-zero descriptor") {
    const GaborBank bank = make_bank(2, 4, 9);
    const Image frame(32, 32, 200.0);
    const Eigen::VectorXd d = convolve_frame(frame, bank, 8);
    CHECK(d.cwiseAbs().maxCoeff() <= 1e-8 * 200.0);
}

TEST_CASE("convolve_frame: impulse response equals the kernel magnitude at center") {
    const GaborBank bank = make_bank(2, 2, 9);
    const int step = 4;
    Image frame(32, 32, 0.0);
    const int cx = 2 * step + step / 2;  // a grid sample position
    const int cy = 3 * step + step / 2;
    frame.at(cx, cy) = 1.0;

    const Eigen::VectorXd d = convolve_frame(frame, bank, step);
    const int nx = 32 / step, ny = 32 / step;
    for (int k = 0; k < bank.size(); ++k) {
        const GaborKernel& kernel = bank.kernels[static_cast<std::size_t>(k)];
        const std::size_t center = kernel.real.size() / 2;
        const double expected = std::hypot(kernel.real[center], kernel.imag[center]);
        const double got = d[k * nx * ny + 3 * nx + 2];
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("convolve_frame: grating excites its own orientation the most") {
    const GaborBank bank = make_bank(4, 4, 15);
    const int per_kernel = (64 / 8) * (64 / 8);
    for (int scale = 0; scale < 4; ++scale) {
        for (int orient = 0; orient < 4; ++orient) {
            const GaborKernel& target = bank.kernels[static_cast<std::size_t>(scale * 4 + orient)];
            const Image img = grating(64, 64, target.wavelength, target.orientation);
            const Eigen::VectorXd d = convolve_frame(img, bank, 8);
            const auto mean_mag = [&](int k) { return d.segment(k * per_kernel, per_kernel).mean(); };
            const double own = mean_mag(scale * 4 + orient);
            for (int other = 0; other < 4; ++other) {
                if (other == orient) continue;
                CHECK(own > mean_mag(scale * 4 + other));
            }
        }
    }
}

TEST_CASE("convolve_frame: descriptor ignores constant offsets and scales linearly") {
    const GaborBank bank = make_bank(2, 3, 11);
    const Image base = grating(48, 48, 8.0, 0.6, 40.0, 120.0);
    const Eigen::VectorXd d0 = convolve_frame(base, bank, 8);

    Image shifted = base;
    for (double& p : shifted.pix) p += 25.0;
    const Eigen::VectorXd d1 = convolve_frame(shifted, bank, 8);
    CHECK((d1 - d0).norm() <= 1e-8 * d0.norm());

    Image scaled(48, 48);
    for (std::size_t i = 0; i < base.pix.size(); ++i) scaled.pix[i] = 3.0 * base.pix[i];
    const Eigen::VectorXd d3 = convolve_frame(scaled, bank, 8);
    CHECK((d3 - 3.0 * d0).norm() <= 1e-8 * d3.norm());
}

TEST_CASE("convolve_frame: frames smaller than the kernel are rejected") {
    const GaborBank bank = make_bank(1, 1, 15);
    CHECK_THROWS_AS(convolve_frame(Image(8, 8, 0.0), bank, 4), std::invalid_argument);
}

TEST_CASE("sequence_appearance_features: single frame equals convolve_frame") {
    const GaborBank bank = make_bank(2, 2, 9);
    const Image frame = grating(32, 32, 6.0, 1.1);
    const FeatureMatrix fm = sequence_appearance_features({frame}, bank, 8);
    REQUIRE(fm.values.cols() == 1);
    CHECK((fm.values.col(0) - convolve_frame(frame, bank, 8)).norm() == doctest::Approx(0.0));
}

TEST_CASE("sequence_appearance_features: identical frames give identical columns") {
    const GaborBank bank = make_bank(2, 2, 9);
    const Image frame = grating(32, 32, 10.0, 0.3);
    const FeatureMatrix fm = sequence_appearance_features(std::vector<Image>(5, frame), bank, 8);
    REQUIRE(fm.values.cols() == 5);
    for (int j = 1; j < 5; ++j)
        CHECK((fm.values.col(j) - fm.values.col(0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("sequence_appearance_features: columns equal the per-frame oracle") {
    const GaborBank bank = make_bank(2, 2, 9);
    std::vector<Image> frames = {grating(32, 32, 6.0, 0.0), grating(32, 32, 8.0, 0.8),
                                 grating(32, 32, 12.0, 1.9)};
    const FeatureMatrix fm = sequence_appearance_features(frames, bank, 8);
    for (int j = 0; j < 3; ++j) {
        const Eigen::VectorXd expect = convolve_frame(frames[static_cast<std::size_t>(j)], bank, 8);
        CHECK((fm.values.col(j) - expect).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("sequence_appearance_features: inconsistent frame sizes are rejected") {
    const GaborBank bank = make_bank(1, 1, 9);
    CHECK_THROWS_AS(sequence_appearance_features({Image(32, 32, 1.0), Image(32, 16, 1.0)}, bank, 8),
                    std::invalid_argument);
}

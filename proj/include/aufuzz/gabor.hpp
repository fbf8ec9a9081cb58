#pragma once

#include "aufuzz/image.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace aufuzz::gabor {

enum class FeatureSource { appearance, geometric };

/// Per-sequence feature matrix: one column per frame (appearance) or per
/// displacement step (geometric).
struct FeatureMatrix {
    Eigen::MatrixXd values;
    FeatureSource source = FeatureSource::appearance;
};

struct GaborKernel {
    int size = 0;  // odd
    std::vector<double> real;
    std::vector<double> imag;
    double wavelength = 0.0;
    double orientation = 0.0;
};

struct BankParams {
    int scales = 4;
    int orientations = 4;
    int kernel_size = 21;
    double wavelength0 = 4.0;          // pixels/cycle at the finest scale
    double wavelength_ratio = 1.4142135623730951;
    double sigma_ratio = 0.56;         // Gaussian sigma per wavelength
};

/// DC-compensated complex exponentials under a Gaussian envelope; p kernels,
/// p = scales * orientations, orientation angles v*pi/orientations.
struct GaborBank {
    std::vector<GaborKernel> kernels;
    BankParams params;

    int size() const { return static_cast<int>(kernels.size()); }
};

GaborBank make_bank(const BankParams& params);
GaborBank make_bank(int scales, int orientations, int kernel_size);

/// Complex response magnitude per kernel on a regular grid with stride
/// grid_step (positions grid_step/2, 3*grid_step/2, ...), concatenated
/// kernel-major. Borders use symmetric reflection.
Eigen::VectorXd convolve_frame(const Image& frame, const GaborBank& bank, int grid_step);

/// Magnitude response of one kernel at one pixel (reflective border).
double kernel_response_at(const Image& frame, const GaborKernel& kernel, int cx, int cy);

FeatureMatrix sequence_appearance_features(const std::vector<Image>& frames,
                                           const GaborBank& bank, int grid_step);

} // namespace aufuzz::gabor

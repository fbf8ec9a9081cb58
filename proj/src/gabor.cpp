#include "aufuzz/gabor.hpp"

#include <cmath>
#include <stdexcept>

namespace aufuzz::gabor {

namespace {

GaborKernel make_kernel(int size, double wavelength, double orientation, double sigma_ratio) {
    GaborKernel k;
    k.size = size;
    k.wavelength = wavelength;
    k.orientation = orientation;
    k.real.resize(static_cast<std::size_t>(size) * size);
    k.imag.resize(static_cast<std::size_t>(size) * size);

    const double sigma = sigma_ratio * wavelength;
    const double freq = 2.0 * M_PI / wavelength;
    const double cos_t = std::cos(orientation);
    const double sin_t = std::sin(orientation);
    const int half = size / 2;

    std::vector<double> env(k.real.size());
    double env_sum = 0.0;
    double carrier_sum = 0.0;
    std::size_t idx = 0;
    for (int y = -half; y <= half; ++y) {
        for (int x = -half; x <= half; ++x, ++idx) {
            const double xr = x * cos_t + y * sin_t;
            const double e = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
            env[idx] = e;
            k.real[idx] = e * std::cos(freq * xr);
            k.imag[idx] = e * std::sin(freq * xr);
            env_sum += e;
            carrier_sum += k.real[idx];
        }
    }
    // Remove the DC response of the even part; the odd part integrates to
    // zero by symmetry of the sampling grid.
    const double dc = carrier_sum / env_sum;
    for (std::size_t i = 0; i < k.real.size(); ++i) k.real[i] -= dc * env[i];
    return k;
}

} // namespace

GaborBank make_bank(const BankParams& params) {
    if (params.scales < 1 || params.orientations < 1)
        throw std::invalid_argument("make_bank: scales and orientations must be >= 1");
    if (params.kernel_size < 3 || params.kernel_size % 2 == 0)
        throw std::invalid_argument("make_bank: kernel_size must be odd and >= 3");

    GaborBank bank;
    bank.params = params;
    bank.kernels.reserve(static_cast<std::size_t>(params.scales) * params.orientations);
    double wavelength = params.wavelength0;
    for (int u = 0; u < params.scales; ++u) {
        for (int v = 0; v < params.orientations; ++v) {
            const double theta = v * M_PI / params.orientations;
            bank.kernels.push_back(
                make_kernel(params.kernel_size, wavelength, theta, params.sigma_ratio));
        }
        wavelength *= params.wavelength_ratio;
    }
    return bank;
}

GaborBank make_bank(int scales, int orientations, int kernel_size) {
    BankParams p;
    p.scales = scales;
    p.orientations = orientations;
    p.kernel_size = kernel_size;
    return make_bank(p);
}

double kernel_response_at(const Image& frame, const GaborKernel& kernel, int cx, int cy) {
    const int half = kernel.size / 2;
    double re = 0.0;
    double im = 0.0;
    std::size_t idx = 0;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx, ++idx) {
            const double p = pixel_reflect(frame, cx + dx, cy + dy);
            re += p * kernel.real[idx];
            im += p * kernel.imag[idx];
        }
    }
    return std::hypot(re, im);
}

Eigen::VectorXd convolve_frame(const Image& frame, const GaborBank& bank, int grid_step) {
    if (bank.kernels.empty()) throw std::invalid_argument("convolve_frame: empty bank");
    if (grid_step < 1) throw std::invalid_argument("convolve_frame: grid_step must be >= 1");
    if (frame.width < bank.params.kernel_size || frame.height < bank.params.kernel_size)
        throw std::invalid_argument("convolve_frame: frame smaller than kernel");

    const int nx = frame.width / grid_step;
    const int ny = frame.height / grid_step;
    if (nx < 1 || ny < 1) throw std::invalid_argument("convolve_frame: grid_step larger than frame");

    Eigen::VectorXd descriptor(static_cast<Eigen::Index>(bank.size()) * nx * ny);
    Eigen::Index out = 0;
    for (const GaborKernel& kernel : bank.kernels) {
        for (int gy = 0; gy < ny; ++gy) {
            const int cy = gy * grid_step + grid_step / 2;
            for (int gx = 0; gx < nx; ++gx) {
                const int cx = gx * grid_step + grid_step / 2;
                descriptor[out++] = kernel_response_at(frame, kernel, cx, cy);
            }
        }
    }
    return descriptor;
}

FeatureMatrix sequence_appearance_features(const std::vector<Image>& frames,
                                           const GaborBank& bank, int grid_step) {
    if (frames.empty()) throw std::invalid_argument("sequence_appearance_features: no frames");
    for (const Image& f : frames)
        if (f.width != frames[0].width || f.height != frames[0].height)
            throw std::invalid_argument("sequence_appearance_features: inconsistent frame sizes");

    FeatureMatrix fm;
    fm.source = FeatureSource::appearance;
    for (std::size_t j = 0; j < frames.size(); ++j) {
        const Eigen::VectorXd d = convolve_frame(frames[j], bank, grid_step);
        if (j == 0) fm.values.resize(d.size(), static_cast<Eigen::Index>(frames.size()));
        fm.values.col(static_cast<Eigen::Index>(j)) = d;
    }
    return fm;
}

} // namespace aufuzz::gabor

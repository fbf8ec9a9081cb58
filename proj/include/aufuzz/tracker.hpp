#pragma once

#include "aufuzz/gabor.hpp"
#include "aufuzz/image.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace aufuzz::track {

inline constexpr int kGridPoints = 113;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// The 113-point facial landmark grid plus the index subsets used for
/// upper-face and lower-face action units.
struct PointGrid {
    std::vector<Point> points;  // exactly kGridPoints
    std::vector<int> subset_upper;
    std::vector<int> subset_lower;

    static PointGrid from_points(std::vector<Point> pts);
};

struct TrackedSequence {
    std::vector<PointGrid> grids;               // grids[0] is the initialized first frame
    std::vector<std::vector<bool>> lost_flags;  // per frame, per point
};

struct LkParams {
    int levels = 3;
    int window = 15;      // odd
    int max_iters = 20;
    double eps = 0.01;    // pixels
    double min_eig_rel = 1e-4;  // of window gradient energy
};

struct TrackStep {
    std::vector<Point> displacement;
    std::vector<bool> lost;
};

std::vector<Image> build_pyramid(const Image& frame, int levels);

TrackStep track_points(const Image& prev, const Image& next, const std::vector<Point>& points,
                       const LkParams& params);

/// Re-places lost points with the least-squares affine transform fitted from
/// the non-lost points' motion between consecutive frames. Throws when fewer
/// than 3 reliable points remain in an affected frame.
TrackedSequence repair_lost_points(const TrackedSequence& tracked);

/// Tracks grid points frame to frame, repairing losses as it goes.
TrackedSequence track_sequence(const std::vector<Image>& frames, const PointGrid& first,
                               const LkParams& params);

/// Column j-1 holds (x - x0, y - y0) interleaved per subset point at frame j.
gabor::FeatureMatrix displacement_features(const TrackedSequence& tracked,
                                           const std::vector<int>& subset);

/// Ratio of accumulated landmark displacement of the truncated sequence to
/// the full sequence, clamped to [0, 1].
double intensity_target(const PointGrid& produced_last, const PointGrid& first,
                        const PointGrid& original_last, const std::vector<int>& subset);

/// Landmark files: one "index x y" triple per line.
std::vector<Point> read_landmarks(const std::string& path, int expected_count = kGridPoints);
void write_landmarks(const std::vector<Point>& points, const std::string& path);

} // namespace aufuzz::track

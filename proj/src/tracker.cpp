#include "aufuzz/tracker.hpp"

#include "aufuzz/textio.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aufuzz::track {

namespace {

// [1/4 1/2 1/4] separable low-pass, then 2x subsampling.
Image downsample(const Image& src) {
    const int w = (src.width + 1) / 2;
    const int h = (src.height + 1) / 2;
    Image dst(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int sx = 2 * x;
            const int sy = 2 * y;
            double acc = 0.25 * src.at(sx, sy);
            acc += 0.125 * (pixel_reflect(src, sx - 1, sy) + pixel_reflect(src, sx + 1, sy) +
                            pixel_reflect(src, sx, sy - 1) + pixel_reflect(src, sx, sy + 1));
            acc += 0.0625 * (pixel_reflect(src, sx - 1, sy - 1) + pixel_reflect(src, sx + 1, sy - 1) +
                             pixel_reflect(src, sx - 1, sy + 1) + pixel_reflect(src, sx + 1, sy + 1));
            dst.at(x, y) = acc;
        }
    }
    return dst;
}

struct LevelTrack {
    Point flow;
    bool lost = false;
};

// Single-level iterative LK around one point; `guess` is the displacement
// carried in from the coarser level.
LevelTrack lk_at_level(const Image& prev, const Image& next, Point p, Point guess,
                       const LkParams& params) {
    const int half = params.window / 2;
    const int n = params.window;
    LevelTrack out;
    out.flow = guess;

    std::vector<double> ix(static_cast<std::size_t>(n) * n);
    std::vector<double> iy(ix.size());
    std::vector<double> iv(ix.size());

    double gxx = 0.0, gxy = 0.0, gyy = 0.0;
    std::size_t idx = 0;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx, ++idx) {
            const double x = p.x + dx;
            const double y = p.y + dy;
            iv[idx] = sample_bilinear(prev, x, y);
            ix[idx] = 0.5 * (sample_bilinear(prev, x + 1, y) - sample_bilinear(prev, x - 1, y));
            iy[idx] = 0.5 * (sample_bilinear(prev, x, y + 1) - sample_bilinear(prev, x, y - 1));
            gxx += ix[idx] * ix[idx];
            gxy += ix[idx] * iy[idx];
            gyy += iy[idx] * iy[idx];
        }
    }

    const double trace = gxx + gyy;
    const double det = gxx * gyy - gxy * gxy;
    const double min_eig = 0.5 * (trace - std::sqrt(std::max(0.0, trace * trace - 4.0 * det)));
    if (trace <= 0.0 || min_eig < params.min_eig_rel * trace) {
        out.lost = true;
        return out;
    }

    for (int iter = 0; iter < params.max_iters; ++iter) {
        double bx = 0.0, by = 0.0;
        idx = 0;
        for (int dy = -half; dy <= half; ++dy) {
            for (int dx = -half; dx <= half; ++dx, ++idx) {
                const double d =
                    iv[idx] - sample_bilinear(next, p.x + dx + out.flow.x, p.y + dy + out.flow.y);
                bx += d * ix[idx];
                by += d * iy[idx];
            }
        }
        const double ux = (gyy * bx - gxy * by) / det;
        const double uy = (gxx * by - gxy * bx) / det;
        out.flow.x += ux;
        out.flow.y += uy;
        if (std::hypot(ux, uy) < params.eps) break;
    }
    return out;
}

// Least-squares affine [a b tx; c d ty] mapping src points onto dst points.
Eigen::Matrix<double, 2, 3> fit_affine(const std::vector<Point>& src,
                                       const std::vector<Point>& dst) {
    const Eigen::Index n = static_cast<Eigen::Index>(src.size());
    Eigen::MatrixXd a(2 * n, 6);
    Eigen::VectorXd b(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a.row(2 * i) << src[i].x, src[i].y, 1.0, 0.0, 0.0, 0.0;
        a.row(2 * i + 1) << 0.0, 0.0, 0.0, src[i].x, src[i].y, 1.0;
        b[2 * i] = dst[i].x;
        b[2 * i + 1] = dst[i].y;
    }
    // Tiny ridge keeps near-collinear grids solvable.
    const Eigen::MatrixXd ata =
        a.transpose() * a + 1e-9 * Eigen::MatrixXd::Identity(6, 6);
    const Eigen::VectorXd sol = ata.ldlt().solve(a.transpose() * b);
    Eigen::Matrix<double, 2, 3> m;
    m << sol[0], sol[1], sol[2], sol[3], sol[4], sol[5];
    return m;
}

Point apply_affine(const Eigen::Matrix<double, 2, 3>& m, Point p) {
    return {m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2), m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)};
}

} // namespace

PointGrid PointGrid::from_points(std::vector<Point> pts) {
    if (static_cast<int>(pts.size()) != kGridPoints)
        throw std::invalid_argument("PointGrid requires exactly 113 points");
    PointGrid g;
    g.points = std::move(pts);
    return g;
}

std::vector<Image> build_pyramid(const Image& frame, int levels) {
    if (levels < 1) throw std::invalid_argument("build_pyramid: levels must be >= 1");
    std::vector<Image> pyr;
    pyr.reserve(static_cast<std::size_t>(levels));
    pyr.push_back(frame);
    for (int k = 1; k < levels; ++k) pyr.push_back(downsample(pyr.back()));
    if (pyr.back().width < 16 || pyr.back().height < 16)
        throw std::invalid_argument("build_pyramid: too many levels for image size");
    return pyr;
}

TrackStep track_points(const Image& prev, const Image& next, const std::vector<Point>& points,
                       const LkParams& params) {
    if (params.window < 3 || params.window % 2 == 0)
        throw std::invalid_argument("track_points: window must be odd and >= 3");
    const std::vector<Image> prev_pyr = build_pyramid(prev, params.levels);
    const std::vector<Image> next_pyr = build_pyramid(next, params.levels);

    TrackStep step;
    step.displacement.resize(points.size());
    step.lost.resize(points.size(), false);

    for (std::size_t i = 0; i < points.size(); ++i) {
        Point flow{0.0, 0.0};
        bool lost = false;
        for (int level = params.levels - 1; level >= 0; --level) {
            const double scale = std::pow(2.0, level);
            const Point p{points[i].x / scale, points[i].y / scale};
            const LevelTrack lt = lk_at_level(prev_pyr[level], next_pyr[level], p, flow, params);
            if (lt.lost && level == 0) {
                lost = true;
                break;
            }
            flow = lt.lost ? flow : lt.flow;
            if (level > 0) {
                flow.x *= 2.0;
                flow.y *= 2.0;
            }
        }
        const Point target{points[i].x + flow.x, points[i].y + flow.y};
        if (!next.contains(target.x, target.y)) lost = true;
        step.displacement[i] = lost ? Point{0.0, 0.0} : flow;
        step.lost[i] = lost;
    }
    return step;
}

namespace {

// Re-places frame j's lost points from the affine fitted on reliable motion
// between frames j-1 and j. Flags stay as the historical loss record.
void repair_frame(std::vector<PointGrid>& grids, const std::vector<bool>& flags, std::size_t j) {
    std::vector<Point> src, dst;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (!flags[i]) {
            src.push_back(grids[j - 1].points[i]);
            dst.push_back(grids[j].points[i]);
        }
    }
    if (src.size() < 3)
        throw std::runtime_error("repair_lost_points: fewer than 3 reliable points in frame " +
                                 std::to_string(j));
    const auto affine = fit_affine(src, dst);
    for (std::size_t i = 0; i < flags.size(); ++i)
        if (flags[i]) grids[j].points[i] = apply_affine(affine, grids[j - 1].points[i]);
}

} // namespace

TrackedSequence repair_lost_points(const TrackedSequence& tracked) {
    TrackedSequence out = tracked;
    for (std::size_t j = 1; j < out.grids.size(); ++j) {
        bool any_lost = false;
        for (bool f : out.lost_flags[j]) any_lost = any_lost || f;
        if (any_lost) repair_frame(out.grids, out.lost_flags[j], j);
    }
    return out;
}

TrackedSequence track_sequence(const std::vector<Image>& frames, const PointGrid& first,
                               const LkParams& params) {
    if (frames.empty()) throw std::invalid_argument("track_sequence: no frames");
    TrackedSequence seq;
    seq.grids.push_back(first);
    seq.lost_flags.emplace_back(first.points.size(), false);

    for (std::size_t j = 1; j < frames.size(); ++j) {
        const PointGrid& prev_grid = seq.grids.back();
        const TrackStep step = track_points(frames[j - 1], frames[j], prev_grid.points, params);
        PointGrid next_grid = prev_grid;
        bool any_lost = false;
        for (std::size_t i = 0; i < prev_grid.points.size(); ++i) {
            next_grid.points[i].x = prev_grid.points[i].x + step.displacement[i].x;
            next_grid.points[i].y = prev_grid.points[i].y + step.displacement[i].y;
            any_lost = any_lost || step.lost[i];
        }
        seq.grids.push_back(std::move(next_grid));
        seq.lost_flags.push_back(step.lost);
        if (any_lost) repair_frame(seq.grids, seq.lost_flags[j], j);
    }
    return seq;
}

gabor::FeatureMatrix displacement_features(const TrackedSequence& tracked,
                                           const std::vector<int>& subset) {
    if (tracked.grids.size() < 2)
        throw std::invalid_argument("displacement_features: need at least 2 frames");
    if (subset.empty()) throw std::invalid_argument("displacement_features: empty subset");
    const std::size_t t = tracked.grids.size();
    const int n_points = static_cast<int>(tracked.grids[0].points.size());
    for (int idx : subset)
        if (idx < 0 || idx >= n_points)
            throw std::invalid_argument("displacement_features: subset index out of range");

    gabor::FeatureMatrix fm;
    fm.source = gabor::FeatureSource::geometric;
    fm.values.resize(2 * static_cast<Eigen::Index>(subset.size()), static_cast<Eigen::Index>(t - 1));
    for (std::size_t j = 1; j < t; ++j) {
        Eigen::Index row = 0;
        for (int idx : subset) {
            fm.values(row++, static_cast<Eigen::Index>(j - 1)) =
                tracked.grids[j].points[idx].x - tracked.grids[0].points[idx].x;
            fm.values(row++, static_cast<Eigen::Index>(j - 1)) =
                tracked.grids[j].points[idx].y - tracked.grids[0].points[idx].y;
        }
    }
    return fm;
}

double intensity_target(const PointGrid& produced_last, const PointGrid& first,
                        const PointGrid& original_last, const std::vector<int>& subset) {
    if (subset.empty()) throw std::invalid_argument("intensity_target: empty subset");
    double num = 0.0;
    double den = 0.0;
    for (int i : subset) {
        num += std::hypot(produced_last.points[i].x - first.points[i].x,
                          produced_last.points[i].y - first.points[i].y);
        den += std::hypot(original_last.points[i].x - first.points[i].x,
                          original_last.points[i].y - first.points[i].y);
    }
    if (den <= 0.0)
        throw std::runtime_error("intensity_target: zero displacement in the original sequence");
    const double t = num / den;
    return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
}

std::vector<Point> read_landmarks(const std::string& path, int expected_count) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("landmarks: cannot open " + path);
    std::vector<Point> pts(static_cast<std::size_t>(expected_count));
    std::vector<bool> seen(static_cast<std::size_t>(expected_count), false);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int idx = 0;
        std::string xs, ys;
        if (!(ls >> idx >> xs >> ys)) throw std::runtime_error("landmarks: malformed line in " + path);
        if (idx < 0 || idx >= expected_count)
            throw std::runtime_error("landmarks: index out of range in " + path);
        pts[static_cast<std::size_t>(idx)] = {parse_double(xs), parse_double(ys)};
        seen[static_cast<std::size_t>(idx)] = true;
    }
    for (bool s : seen)
        if (!s) throw std::runtime_error("landmarks: missing point indices in " + path);
    return pts;
}

void write_landmarks(const std::vector<Point>& points, const std::string& path) {
    std::ostringstream out;
    for (std::size_t i = 0; i < points.size(); ++i)
        out << i << " " << format_double(points[i].x) << " " << format_double(points[i].y) << "\n";
    atomic_write_file(path, out.str());
}

} // namespace aufuzz::track

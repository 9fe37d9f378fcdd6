#pragma once

// Stroke geometry: corner splitting, endpoint-constrained least-squares
// cubic Bezier fitting, and conversion of strokes to drawable primitives.

#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "sketchvlm/annotation.hpp"

namespace sketchvlm {

/// Pixel position, origin at the top-left of the base image.
struct PixelPoint {
  double x = 0;
  double y = 0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

inline PixelPoint operator+(PixelPoint a, PixelPoint b) { return {a.x + b.x, a.y + b.y}; }
inline PixelPoint operator-(PixelPoint a, PixelPoint b) { return {a.x - b.x, a.y - b.y}; }
inline PixelPoint operator*(double s, PixelPoint p) { return {s * p.x, s * p.y}; }
double distance(PixelPoint a, PixelPoint b);

struct CubicBezier {
  PixelPoint p0, p1, p2, p3;

  PixelPoint eval(double t) const;
  friend bool operator==(const CubicBezier&, const CubicBezier&) = default;
};

/// Cubic Bernstein basis value B_k(t), k in 0..3.
double bernstein3(int k, double t);

struct Dot {
  PixelPoint center;
  double radius = 4;
};
struct Line {
  PixelPoint a, b;
};
struct CubicChain {
  std::vector<CubicBezier> segments;
};
/// Fallback when a window's least-squares system has no solution.
struct Polyline {
  std::vector<PixelPoint> points;
};

using PathPrimitive = std::variant<Dot, Line, CubicChain, Polyline>;

PixelPoint primitive_start(const PathPrimitive& prim);
PixelPoint primitive_end(const PathPrimitive& prim);

struct SampleRun {
  std::vector<PixelPoint> points;
  std::vector<double> ts;
};

/// Two adjacent samples closer than this (in the caller's units) whose t
/// values differ by at most kCornerMaxDt mark a corner.
inline constexpr double kCornerEpsilon = 1e-6;
inline constexpr double kCornerMaxDt = 0.1;

/// Splits a sample sequence at doubled corner points. Each corner point ends
/// one run and starts the next; each run's t values are rescaled to [0, 1].
std::vector<SampleRun> split_corners(std::span<const PixelPoint> points,
                                     std::span<const double> ts,
                                     double epsilon = kCornerEpsilon);

class DegenerateSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fits a cubic through points[0] and points.back() whose inner control
/// points minimise the squared distance between B(ts[j]) and points[j].
///
/// When the interior samples do not pin both inner control points (a single
/// interior sample, or all interior samples at one t), the minimiser closest
/// to the chord-thirds placement is returned. Throws DegenerateSystem when no
/// interior sample constrains the curve at all.
CubicBezier fit_cubic(std::span<const PixelPoint> points, std::span<const double> ts);

/// Sum of squared distances between the curve at ts and the samples.
double residual_sum_squares(const CubicBezier& curve, std::span<const PixelPoint> points,
                            std::span<const double> ts);

inline constexpr std::size_t kMaxSamplesPerWindow = 8;

/// Fits one run of >= 3 samples as a C0 cubic chain. Runs longer than
/// kMaxSamplesPerWindow, or turning through more than a quarter turn, are
/// split into windows that share their end samples.
PathPrimitive fit_run(const SampleRun& run);

/// Default dot radius: 4 px per 1000 px of image width.
double default_dot_radius(int image_width);

/// Maps a stroke to primitives in image pixel space. Out-of-frame refs are
/// clamped onto the frame boundary.
std::vector<PathPrimitive> stroke_to_primitives(const Stroke& stroke,
                                                const CoordinateFrame& frame,
                                                int image_width, int image_height);

/// Dense polyline approximation, used for rasterising and for metrics.
std::vector<PixelPoint> flatten(const PathPrimitive& prim, int samples_per_cubic = 32);

}  // namespace sketchvlm

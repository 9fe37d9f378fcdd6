#pragma once

// Shared fixtures and brute-force reference implementations for the tests
// and the acceptance runner.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sketchvlm/annotation.hpp"
#include "sketchvlm/geometry.hpp"
#include "sketchvlm/metrics.hpp"
#include "sketchvlm/random.hpp"
#include "sketchvlm/tasks.hpp"

namespace sketchvlm::testing {

/// The five-stroke ball-drop answer used throughout the suite, exactly as a
/// model emitted it (no <answer> wrapper).
extern const char* const kBallDropReply;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "sketchvlm");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random invariant-satisfying annotation set. t values are multiples of
/// 0.01 so the 2-decimal XML form is lossless.
AnnotationSet random_annotation(Rng& rng, const CoordinateFrame& frame);

// Reference implementations, written straight from the metric definitions.

OrderingResult oracle_ordering(const std::vector<PixelPoint>& gt, const std::vector<PixelSegment>& pred);

/// Maximum matching by exhaustive search over box subsets (bitmask DP).
int oracle_marker_matches(const std::vector<PixelRect>& boxes, const std::vector<Marker>& markers);

/// AP at IoU 0.5 per class by PR-curve enumeration:
/// sum over recall levels i/n of the best precision reaching that recall.
std::optional<double> oracle_ap50(const ClassBoxes& preds, const ClassBoxes& gts,
                                  std::optional<SizeBucket> bucket = std::nullopt);

/// Whether the anchor's pixel lies within distance r of the polygon's
/// pixel-centre region, by scanning every pixel.
bool oracle_dilation_hit(const std::vector<PixelPoint>& polygon, int width, int height, PixelPoint anchor,
                         double r);

/// Weighted kappa with w_ij = 1 - (i-j)^2/(k-1)^2 from an explicit
/// confusion matrix.
double oracle_weighted_kappa(const std::vector<std::vector<double>>& confusion);

/// Walks a maze path from `start`; returns the end cell, or nullopt when a
/// step crosses a wall or leaves the grid.
std::optional<MazeCell> walk_maze(const MazeGT& maze, const std::vector<Direction>& path);

/// Mismatches between each metric and its oracle over random fixtures of at
/// most 8 elements.
struct OracleSweep {
  int fixtures = 0;
  int ordering = 0;
  int marker = 0;
  int ap = 0;
  int dilation = 0;
  int dilation_checks = 0;

  int mismatches() const { return ordering + marker + ap + dilation; }
};

OracleSweep run_metric_oracles(std::uint64_t seed, int fixtures);

/// Random simple polygon (star-shaped around a centre) with non-integer
/// vertices.
std::vector<PixelPoint> random_polygon(Rng& rng, int width, int height);

}  // namespace sketchvlm::testing

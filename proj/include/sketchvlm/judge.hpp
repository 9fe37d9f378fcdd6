#pragma once

// Model-as-judge protocols (annotation quality, annotation/answer alignment)
// and rater agreement statistics.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sketchvlm/gateway.hpp"
#include "sketchvlm/raster.hpp"

namespace sketchvlm {

enum class Rubric { BallPhysics, MazeNav };
std::string to_string(Rubric rubric);
Rubric rubric_from_string(const std::string& name);

class ScoreParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JudgeVerdict {
  std::string reasoning;
  std::optional<int> score;                   // quality, 1..5
  std::optional<std::string> inferred_answer; // alignment
  std::string raw;
  int attempts = 1;

  nlohmann::json to_json() const;
};

struct QualityParse {
  std::optional<int> score;
  std::string reasoning;
  std::string error;  // set when score is empty
};

/// Reads the last "Quality Score: N" line. Scores outside 1..5 are errors.
QualityParse parse_quality_score(std::string_view text);

/// Reads the last "Answer: X" line.
std::optional<std::string> parse_alignment_answer(std::string_view text, std::string* reasoning = nullptr);

/// Rubric text; MazeNav needs the proposed path.
std::string rubric_prompt(Rubric rubric, const std::optional<std::string>& proposed_path = std::nullopt);

/// Sends the rubric with the original and annotated images. One retry with
/// a format reminder on an unparseable reply, then ScoreParseFailure.
JudgeVerdict judge_quality(Gateway& gateway, const ProviderConfig& provider, const RasterImage& original,
                           const RasterImage& annotated, Rubric rubric,
                           const std::optional<std::string>& proposed_path = std::nullopt);

/// Asks the judge to infer the answer from the annotated image alone.
JudgeVerdict judge_alignment(Gateway& gateway, const ProviderConfig& provider, const RasterImage& annotated,
                             const std::string& question);

/// Fraction of pairs whose normalized answers agree.
double align_rate(const std::vector<std::string>& inferred, const std::vector<std::string>& model_answers);

struct AgreementStats {
  std::optional<double> kappa_quadratic;  // unset when chance agreement is total
  std::optional<double> pearson;          // unset when either side has zero variance
  std::size_t n = 0;
};

inline constexpr int kRatingLevels = 5;

/// Quadratically weighted Cohen's kappa on 1..k ratings.
std::optional<double> quadratic_kappa(const std::vector<int>& a, const std::vector<int>& b,
                                      int levels = kRatingLevels);
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Throws std::invalid_argument unless both vectors have the same length
/// >= 2 and ratings lie in 1..5.
AgreementStats agreement_stats(const std::vector<int>& a, const std::vector<int>& b);

struct MeanStd {
  double mean = 0;
  double std = 0;  // population
  std::size_t count = 0;
};
MeanStd mean_std(const std::vector<double>& values);

}  // namespace sketchvlm

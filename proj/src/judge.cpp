#include "sketchvlm/judge.hpp"

#include <cctype>
#include <charconv>
#include <regex>

#include <fmt/format.h>

#include "sketchvlm/metrics.hpp"
#include "sketchvlm/prompts.hpp"

namespace sketchvlm {

namespace {

const char* kQualityFormat = "Quality Score: {integer from 1 - 5}";
const char* kAnswerFormat = "Answer: {single answer}";

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct LastLine {
  std::string value;
  std::size_t line_start = 0;
};

// Last line matching `re`; group 1 is the value.
std::optional<LastLine> last_match(std::string_view text, const std::regex& re) {
  std::optional<LastLine> found;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line(text.substr(pos, end - pos));
    std::smatch m;
    if (std::regex_search(line, m, re)) found = LastLine{m[1].str(), pos};
    pos = end + 1;
  }
  return found;
}

std::vector<ChatMessage> with_reminder(std::vector<ChatMessage> messages, const std::string& reply,
                                       const char* format_line) {
  ChatMessage assistant;
  assistant.role = Role::Assistant;
  assistant.parts.push_back(TextPart{reply});
  messages.push_back(std::move(assistant));
  messages.push_back(ChatMessage::user(
      {TextPart{fill_template(prompt_asset("judge_format_reminder.txt"), {{"format_line", format_line}})}}));
  return messages;
}

std::shared_ptr<const RasterImage> share(const RasterImage& img) { return std::make_shared<const RasterImage>(img); }

}  // namespace

std::string to_string(Rubric rubric) { return rubric == Rubric::BallPhysics ? "ball_physics" : "maze_nav"; }

Rubric rubric_from_string(const std::string& name) {
  if (name == "ball_physics") return Rubric::BallPhysics;
  if (name == "maze_nav") return Rubric::MazeNav;
  throw std::invalid_argument("unknown rubric: " + name);
}

nlohmann::json JudgeVerdict::to_json() const {
  nlohmann::json j;
  j["reasoning"] = reasoning;
  j["score"] = score ? nlohmann::json(*score) : nlohmann::json(nullptr);
  j["inferred_answer"] = inferred_answer ? nlohmann::json(*inferred_answer) : nlohmann::json(nullptr);
  j["raw"] = raw;
  j["attempts"] = attempts;
  return j;
}

QualityParse parse_quality_score(std::string_view text) {
  static const std::regex re(R"(quality\s+score\s*:?\s*\**\s*(-?\d+))", std::regex::icase);
  QualityParse out;
  auto m = last_match(text, re);
  if (!m) {
    out.error = "no 'Quality Score: N' line";
    return out;
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(m->value.data(), m->value.data() + m->value.size(), value);
  if (ec != std::errc() || value < 1 || value > 5) {
    out.error = fmt::format("quality score {} outside 1..5", m->value);
    return out;
  }
  out.score = value;
  out.reasoning = trim(text.substr(0, m->line_start));
  return out;
}

std::optional<std::string> parse_alignment_answer(std::string_view text, std::string* reasoning) {
  static const std::regex re(R"(^\s*\**\s*answer\s*\**\s*:\s*\**\s*(.*?)\s*\**\s*$)", std::regex::icase);
  auto m = last_match(text, re);
  if (!m || trim(m->value).empty()) return std::nullopt;
  if (reasoning) *reasoning = trim(text.substr(0, m->line_start));
  return trim(m->value);
}

std::string rubric_prompt(Rubric rubric, const std::optional<std::string>& proposed_path) {
  if (rubric == Rubric::BallPhysics) return fill_template(prompt_asset("rubric_ball_physics.txt"), {});
  if (!proposed_path) throw std::invalid_argument("maze rubric needs the proposed path");
  return fill_template(prompt_asset("rubric_maze_nav.txt"), {{"INSERT_ORIGINAL_PROMPT_PATH", *proposed_path}});
}

JudgeVerdict judge_quality(Gateway& gateway, const ProviderConfig& provider, const RasterImage& original,
                           const RasterImage& annotated, Rubric rubric,
                           const std::optional<std::string>& proposed_path) {
  std::vector<ChatMessage> messages{ChatMessage::user(
      {TextPart{rubric_prompt(rubric, proposed_path)}, ImagePart{share(original)}, ImagePart{share(annotated)}})};
  JudgeVerdict v;
  v.raw = gateway.complete(messages, provider);
  auto parsed = parse_quality_score(v.raw);
  if (!parsed.score) {
    v.attempts = 2;
    v.raw = gateway.complete(with_reminder(messages, v.raw, kQualityFormat), provider);
    parsed = parse_quality_score(v.raw);
    if (!parsed.score) throw ScoreParseFailure(parsed.error);
  }
  v.score = parsed.score;
  v.reasoning = parsed.reasoning;
  return v;
}

JudgeVerdict judge_alignment(Gateway& gateway, const ProviderConfig& provider, const RasterImage& annotated,
                             const std::string& question) {
  std::vector<ChatMessage> messages{ChatMessage::user(
      {TextPart{fill_template(prompt_asset("judge_alignment.txt"), {{"question", question}})},
       ImagePart{share(annotated)}})};
  JudgeVerdict v;
  v.raw = gateway.complete(messages, provider);
  auto answer = parse_alignment_answer(v.raw, &v.reasoning);
  if (!answer) {
    v.attempts = 2;
    v.raw = gateway.complete(with_reminder(messages, v.raw, kAnswerFormat), provider);
    answer = parse_alignment_answer(v.raw, &v.reasoning);
    if (!answer) throw ScoreParseFailure("no 'Answer: X' line");
  }
  v.inferred_answer = answer;
  return v;
}

double align_rate(const std::vector<std::string>& inferred, const std::vector<std::string>& model_answers) {
  if (inferred.size() != model_answers.size()) throw std::invalid_argument("align_rate: length mismatch");
  if (inferred.empty()) return 0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < inferred.size(); ++i)
    if (normalize_answer(inferred[i]) == normalize_answer(model_answers[i])) ++same;
  return static_cast<double>(same) / static_cast<double>(inferred.size());
}

}  // namespace sketchvlm

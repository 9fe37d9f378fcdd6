#include "sketchvlm/prompts.hpp"

#include <cctype>
#include <stdexcept>

#include <fmt/format.h>

#include "util.hpp"

namespace sketchvlm {
namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}  // namespace detail

void PromptConfig::check() const {
  frame.check();
  if (grid_enabled && frame.mode != FrameMode::GridCells) {
    throw std::invalid_argument("the coordinate grid needs a GridCells frame");
  }
}

const std::string& prompt_asset(std::string_view name) {
  const auto& assets = detail::embedded_prompts();
  const auto it = assets.find(std::string(name));
  if (it == assets.end()) {
    throw std::out_of_range(fmt::format("unknown prompt asset '{}'", name));
  }
  return it->second;
}

std::vector<std::string> prompt_asset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::embedded_prompts()) names.push_back(name);
  return names;
}

std::string prompt_asset_sha256(std::string_view name) {
  return sha256_hex(prompt_asset(name));
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace

std::string fill_template(std::string_view tmpl,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view key = tmpl.substr(i + 1, close - i - 1);
        if (is_identifier(key)) {
          const auto it = values.find(std::string(key));
          if (it == values.end()) {
            throw std::invalid_argument(fmt::format("template placeholder {{{}}} has no value", key));
          }
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string build_system_prompt(const PromptConfig& cfg) {
  cfg.check();
  const bool top_left = cfg.frame.origin == Origin::TopLeft;
  const int res_x = cfg.frame.max_col();
  const int res_y = cfg.frame.max_row();
  const std::map<std::string, std::string> values = {
      {"res_x", std::to_string(res_x)},
      {"res_y", std::to_string(res_y)},
      {"origin_corner", top_left ? "top left" : "bottom left"},
      {"example_bottom_left", top_left ? fmt::format("x0y{}", res_y) : "x0y0"},
      {"example_right_of_bottom_left", top_left ? fmt::format("x1y{}", res_y) : "x1y0"},
  };
  return fill_template(prompt_asset("system_base.txt"), values) + "\n" +
         prompt_asset("sketch_methods.txt");
}

std::string build_task_prompt(const TaskPrompt& task) {
  return std::visit(
      [](const auto& t) -> std::string {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, CountingTask>) {
          if (t.object.empty()) throw std::invalid_argument("counting task needs an object");
          return fill_template(prompt_asset("counting.txt"), {{"object", t.object}});
        } else if constexpr (std::is_same_v<T, LabelingTask>) {
          if (t.labels_hint.empty()) {
            throw std::invalid_argument("labeling task needs at least one part name");
          }
          return fill_template(prompt_asset("generic_label.txt"),
                               {{"concept", t.concept_name},
                                {"labels_hint", fmt::format("{}", fmt::join(t.labels_hint, ", "))}});
        } else {
          return fill_template(prompt_asset("free_question.txt"), {{"question", t.text}});
        }
      },
      task);
}

StepwiseGuards stepwise_guards() {
  return {prompt_asset("guard_one_stroke.txt"), prompt_asset("guard_final_answer.txt")};
}

nlohmann::json prompt_config_to_json(const PromptConfig& cfg) {
  nlohmann::json frame;
  frame["mode"] = cfg.frame.mode == FrameMode::GridCells ? "grid" : "normalized";
  frame["res_x"] = cfg.frame.res_x;
  frame["res_y"] = cfg.frame.res_y;
  frame["scale"] = cfg.frame.scale;
  frame["origin"] = cfg.frame.origin == Origin::TopLeft ? "top_left" : "bottom_left";
  return {{"grid", cfg.grid_enabled},
          {"mode", cfg.mode == SessionMode::SingleTurn ? "single" : "stepwise"},
          {"sketch", cfg.sketch_enabled},
          {"text_history", cfg.include_text_history},
          {"frame", frame}};
}

PromptConfig prompt_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("prompt config must be an object");
  PromptConfig cfg;
  try {
    if (j.contains("frame")) {
      const auto& f = j.at("frame");
      const std::string mode = f.value("mode", "grid");
      const std::string origin = f.value("origin", mode == "grid" ? "bottom_left" : "top_left");
      if (origin != "top_left" && origin != "bottom_left") throw std::invalid_argument("bad origin: " + origin);
      const Origin o = origin == "top_left" ? Origin::TopLeft : Origin::BottomLeft;
      if (mode == "grid") cfg.frame = CoordinateFrame::grid(f.value("res_x", 50), f.value("res_y", 50), o);
      else if (mode == "normalized") cfg.frame = CoordinateFrame::normalized(f.value("scale", 1000), o);
      else throw std::invalid_argument("bad frame mode: " + mode);
    }
    cfg.grid_enabled = j.value("grid", cfg.frame.mode == FrameMode::GridCells);
    const std::string mode = j.value("mode", "single");
    if (mode == "single") cfg.mode = SessionMode::SingleTurn;
    else if (mode == "stepwise") cfg.mode = SessionMode::Stepwise;
    else throw std::invalid_argument("bad session mode: " + mode);
    cfg.sketch_enabled = j.value("sketch", true);
    cfg.include_text_history = j.value("text_history", true);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad prompt config: ") + e.what());
  }
  cfg.frame.check();
  cfg.check();
  return cfg;
}

}  // namespace sketchvlm

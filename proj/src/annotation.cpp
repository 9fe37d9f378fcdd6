#include "sketchvlm/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "sketchvlm/color.hpp"

namespace sketchvlm {

CoordinateFrame CoordinateFrame::grid(int res_x, int res_y, Origin origin) {
  CoordinateFrame f;
  f.mode = FrameMode::GridCells;
  f.res_x = res_x;
  f.res_y = res_y;
  f.origin = origin;
  f.check();
  return f;
}

CoordinateFrame CoordinateFrame::normalized(int scale, Origin origin) {
  CoordinateFrame f;
  f.mode = FrameMode::Normalized;
  f.scale = scale;
  f.origin = origin;
  f.check();
  return f;
}

void CoordinateFrame::check() const {
  if (res_x < 1 || res_y < 1 || scale < 1) {
    throw std::invalid_argument(fmt::format(
        "coordinate frame needs res_x, res_y, scale >= 1 (got {}, {}, {})",
        res_x, res_y, scale));
  }
}

ParseError::ParseError(ParseErrorKind kind, std::string detail,
                       std::size_t offset)
    : std::runtime_error([&] {
        switch (kind) {
          case ParseErrorKind::NoAnswerBlock:
            return std::string("no <answer> block in model output");
          case ParseErrorKind::CountMismatch:
            return fmt::format("stroke '{}': points and t_values differ in length",
                               detail);
          case ParseErrorKind::BadToken:
            return fmt::format("unparseable token at offset {}: {}", offset,
                               detail);
          case ParseErrorKind::BadJson:
            return fmt::format("malformed annotation JSON: {}", detail);
        }
        return std::string("parse error");
      }()),
      kind_(kind),
      detail_(std::move(detail)),
      offset_(offset) {}

std::string grid_token(const GridRef& ref) {
  return fmt::format("x{}y{}", ref.col, ref.row);
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view strip_quotes(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') &&
      s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '&') {
      static constexpr std::pair<std::string_view, char> kEntities[] = {
          {"&lt;", '<'}, {"&gt;", '>'}, {"&amp;", '&'},
          {"&quot;", '"'}, {"&apos;", '\''}};
      bool matched = false;
      for (const auto& [entity, ch] : kEntities) {
        if (s.substr(i, entity.size()) == entity) {
          out += ch;
          i += entity.size() - 1;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out += s[i];
  }
  return out;
}

std::string encode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Tag {
  std::size_t begin = std::string_view::npos;  // offset of '<'
  std::size_t end = 0;                         // offset one past '>'
  std::string name;
  std::string_view attrs;
  bool closing = false;
  bool found() const { return begin != std::string_view::npos; }
};

// Reads the tag starting at text[pos] == '<'. Whitespace is allowed after
// '<', around '/', and before '>'.
std::optional<Tag> read_tag(std::string_view text, std::size_t pos) {
  if (pos >= text.size() || text[pos] != '<') return std::nullopt;
  Tag tag;
  tag.begin = pos;
  std::size_t i = pos + 1;
  while (i < text.size() && is_space(text[i])) ++i;
  if (i < text.size() && text[i] == '/') {
    tag.closing = true;
    ++i;
    while (i < text.size() && is_space(text[i])) ++i;
  }
  const std::size_t name_begin = i;
  while (i < text.size() &&
         (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
    ++i;
  }
  if (i == name_begin) return std::nullopt;
  tag.name.assign(text.substr(name_begin, i - name_begin));
  std::transform(tag.name.begin(), tag.name.end(), tag.name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const std::size_t attrs_begin = i;
  char quote = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      break;
    } else if (c == '<') {
      return std::nullopt;
    }
    ++i;
  }
  if (i >= text.size()) return std::nullopt;
  tag.attrs = trim(text.substr(attrs_begin, i - attrs_begin));
  tag.end = i + 1;
  return tag;
}

Tag find_tag(std::string_view text, std::string_view name, bool closing,
             std::size_t from, std::size_t to = std::string_view::npos) {
  to = std::min(to, text.size());
  for (std::size_t i = text.find('<', from); i < to; i = text.find('<', i + 1)) {
    auto tag = read_tag(text, i);
    if (tag && tag->closing == closing && tag->name == name && tag->end <= to) {
      return *tag;
    }
  }
  return Tag{};
}

struct Element {
  Tag open;
  std::size_t content_begin = 0;
  std::size_t content_end = 0;
  std::size_t end = 0;
};

std::optional<Element> find_element(std::string_view text, std::string_view name,
                                    std::size_t from, std::size_t to) {
  const Tag open = find_tag(text, name, false, from, to);
  if (!open.found()) return std::nullopt;
  const Tag close = find_tag(text, name, true, open.end, to);
  if (!close.found()) {
    throw ParseError(ParseErrorKind::BadToken,
                     fmt::format("<{}> is never closed", name), open.begin);
  }
  return Element{open, open.end, close.begin, close.end};
}

std::optional<std::string> attribute(std::string_view attrs, std::string_view key) {
  std::size_t i = 0;
  while (i < attrs.size()) {
    while (i < attrs.size() && is_space(attrs[i])) ++i;
    const std::size_t name_begin = i;
    while (i < attrs.size() && attrs[i] != '=' && !is_space(attrs[i])) ++i;
    const std::string_view name = attrs.substr(name_begin, i - name_begin);
    while (i < attrs.size() && is_space(attrs[i])) ++i;
    if (i >= attrs.size() || attrs[i] != '=') return std::nullopt;
    ++i;
    while (i < attrs.size() && is_space(attrs[i])) ++i;
    if (i >= attrs.size()) return std::nullopt;
    std::string_view value;
    if (attrs[i] == '"' || attrs[i] == '\'') {
      const char q = attrs[i];
      const std::size_t end = attrs.find(q, i + 1);
      if (end == std::string_view::npos) return std::nullopt;
      value = attrs.substr(i + 1, end - i - 1);
      i = end + 1;
    } else {
      const std::size_t begin = i;
      while (i < attrs.size() && !is_space(attrs[i])) ++i;
      value = attrs.substr(begin, i - begin);
    }
    if (name == key) return std::string(value);
  }
  return std::nullopt;
}

bool parse_int(std::string_view s, int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::optional<GridRef> parse_grid_token(std::string_view token) {
  token = strip_quotes(token);
  if (token.size() < 4 || token.front() != 'x') return std::nullopt;
  const std::size_t y = token.find('y');
  if (y == std::string_view::npos) return std::nullopt;
  GridRef ref;
  if (!parse_int(token.substr(1, y - 1), ref.col)) return std::nullopt;
  if (!parse_int(token.substr(y + 1), ref.row)) return std::nullopt;
  return ref;
}

// Splits on commas, reporting each piece with its offset in `base`.
template <typename Fn>
void for_each_csv(std::string_view text, std::size_t base, Fn&& fn) {
  if (trim(text).empty()) return;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const std::string_view piece =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                           : comma - start);
    fn(piece, base + start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
}

std::string element_text(std::string_view text, const Element& e) {
  return decode_entities(trim(text.substr(e.content_begin, e.content_end - e.content_begin)));
}

TextStyle parse_style(std::string_view text, std::string_view attrs,
                      const std::optional<Element>& style_el, std::size_t offset) {
  TextStyle style;
  std::optional<std::string> size = attribute(attrs, "size");
  std::optional<std::string> color = attribute(attrs, "color");
  if (style_el) {
    const std::size_t a = style_el->content_begin, b = style_el->content_end;
    if (!size) {
      if (auto fs = find_element(text, "font_size", a, b)) size = element_text(text, *fs);
    }
    if (!color) {
      if (auto c = find_element(text, "color", a, b)) color = element_text(text, *c);
    }
  }
  if (size) {
    std::string_view s = trim(*size);
    if (s.size() > 2 && s.substr(s.size() - 2) == "px") {
      style.unit = SizeUnit::Pixels;
      s = trim(s.substr(0, s.size() - 2));
    }
    if (!parse_double(s, style.size)) {
      throw ParseError(ParseErrorKind::BadToken, fmt::format("text size '{}'", *size),
                       offset);
    }
  }
  if (color) style.color = std::string(strip_quotes(*color));
  return style;
}

Stroke parse_stroke(std::string_view text, int index, std::size_t a, std::size_t b) {
  Stroke stroke;
  if (auto id = find_element(text, "id", a, b)) {
    stroke.id = element_text(text, *id);
  }
  if (stroke.id.empty()) stroke.id = fmt::format("s{}", index);

  if (auto pts = find_element(text, "points", a, b)) {
    const std::string_view body =
        text.substr(pts->content_begin, pts->content_end - pts->content_begin);
    for_each_csv(body, pts->content_begin, [&](std::string_view piece, std::size_t at) {
      auto ref = parse_grid_token(piece);
      if (!ref) {
        throw ParseError(ParseErrorKind::BadToken,
                         fmt::format("point '{}'", trim(piece)), at);
      }
      stroke.points.push_back(*ref);
    });
  }
  if (auto ts = find_element(text, "t_values", a, b)) {
    const std::string_view body =
        text.substr(ts->content_begin, ts->content_end - ts->content_begin);
    for_each_csv(body, ts->content_begin, [&](std::string_view piece, std::size_t at) {
      double t = 0;
      if (!parse_double(trim(piece), t)) {
        throw ParseError(ParseErrorKind::BadToken,
                         fmt::format("t value '{}'", trim(piece)), at);
      }
      stroke.t_values.push_back(t);
    });
  }
  if (auto txt = find_element(text, "text", a, b)) {
    StrokeText payload;
    payload.content = decode_entities(
        strip_quotes(text.substr(txt->content_begin, txt->content_end - txt->content_begin)));
    payload.style = parse_style(text, txt->open.attrs, find_element(text, "style", a, b),
                                txt->open.begin);
    stroke.text = std::move(payload);
  }
  if (stroke.points.size() != stroke.t_values.size()) {
    throw ParseError(ParseErrorKind::CountMismatch, stroke.id);
  }
  normalize_t_values(stroke);
  return stroke;
}

// Stroke element names are "s" followed by digits.
std::optional<int> stroke_index(const std::string& name) {
  if (name.size() < 2 || name[0] != 's') return std::nullopt;
  int n = 0;
  if (!parse_int(std::string_view(name).substr(1), n)) return std::nullopt;
  return n;
}

std::string format_size(const TextStyle& style) {
  std::string s;
  if (style.size == std::floor(style.size) && std::abs(style.size) < 1e15) {
    s = fmt::format("{:.1f}", style.size);
  } else {
    s = fmt::format("{}", style.size);
  }
  if (style.unit == SizeUnit::Pixels) s += "px";
  return s;
}

}  // namespace

std::string repair_model_output(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  // Drop markdown fence lines (``` or ```xml etc).
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    if (trim(line).substr(0, 3) != "```") {
      out.append(line);
      if (nl < text.size()) out += '\n';
    }
    pos = nl + 1;
  }
  // Drop XML comments.
  for (std::size_t c = out.find("<!--"); c != std::string::npos; c = out.find("<!--", c)) {
    const std::size_t end = out.find("-->", c + 4);
    out.erase(c, end == std::string::npos ? std::string::npos : end + 3 - c);
  }
  return out;
}

void normalize_t_values(Stroke& stroke) {
  auto& t = stroke.t_values;
  const std::size_t n = std::min(t.size(), stroke.points.size());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (stroke.points[i] == stroke.points[i + 1] && t[i] > t[i + 1] &&
        t[i] - t[i + 1] <= 0.1 + 1e-12) {
      std::swap(t[i], t[i + 1]);
    }
  }
  if (t.size() >= 2) {
    const double lo = t.front();
    const double hi = t.back();
    if ((lo != 0.0 || hi != 1.0) && hi > lo) {
      for (double& v : t) v = (v - lo) / (hi - lo);
      t.front() = 0.0;
      t.back() = 1.0;
    }
  }
}

AnnotationSet parse_annotation(std::string_view raw) {
  const std::string repaired = repair_model_output(raw);
  const std::string_view text = repaired;

  std::size_t body_begin = 0;
  std::size_t body_end = text.size();
  const Tag answer_open = find_tag(text, "answer", false, 0);
  if (answer_open.found()) {
    body_begin = answer_open.end;
    const Tag answer_close = find_tag(text, "answer", true, body_begin);
    if (answer_close.found()) body_end = answer_close.begin;
  } else {
    // Bare stroke listings (no wrapper) are accepted when they contain a
    // stroke container or at least one <sN> element.
    bool has_strokes = find_tag(text, "strokes", false, 0).found();
    for (std::size_t i = text.find('<'); !has_strokes && i != std::string_view::npos;
         i = text.find('<', i + 1)) {
      auto tag = read_tag(text, i);
      has_strokes = tag && !tag->closing && stroke_index(tag->name).has_value();
    }
    if (!has_strokes) throw ParseError(ParseErrorKind::NoAnswerBlock, "");
  }

  AnnotationSet set;
  if (auto concept_el = find_element(text, "concept", body_begin, body_end)) {
    set.concept_name = element_text(text, *concept_el);
  }

  struct Found {
    int index;
    std::size_t order;
    Stroke stroke;
  };
  std::vector<Found> found;
  std::size_t last_stroke_end = body_begin;
  for (std::size_t i = text.find('<', body_begin); i < body_end;
       i = text.find('<', i + 1)) {
    auto tag = read_tag(text, i);
    if (!tag || tag->closing) continue;
    const auto index = stroke_index(tag->name);
    if (!index) continue;
    const Tag close = find_tag(text, tag->name, true, tag->end, body_end);
    if (!close.found()) {
      throw ParseError(ParseErrorKind::BadToken,
                       fmt::format("<{}> is never closed", tag->name), tag->begin);
    }
    found.push_back({*index, found.size(), parse_stroke(text, *index, tag->end, close.begin)});
    last_stroke_end = close.end;
    i = close.end - 1;
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const Found& a, const Found& b) { return a.index < b.index; });
  for (auto& f : found) set.strokes.push_back(std::move(f.stroke));

  const Tag fa = find_tag(text, "final_answer", false, body_begin);
  if (fa.found()) {
    const Tag fa_close = find_tag(text, "final_answer", true, fa.end);
    const std::size_t content_end = fa_close.found() ? fa_close.begin : text.size();
    set.final_answer = decode_entities(trim(text.substr(fa.end, content_end - fa.end)));
    set.early_final_answer = !found.empty() && fa.begin < last_stroke_end;
  }
  return set;
}

nlohmann::json annotation_to_json(const AnnotationSet& set) {
  nlohmann::json doc;
  doc["concept"] = set.concept_name ? nlohmann::json(*set.concept_name) : nlohmann::json();
  doc["strokes"] = nlohmann::json::array();
  for (const auto& s : set.strokes) {
    nlohmann::json js;
    js["id"] = s.id;
    js["points"] = nlohmann::json::array();
    for (const auto& p : s.points) js["points"].push_back({{"x", p.col}, {"y", p.row}});
    js["t"] = s.t_values;
    if (s.text) {
      js["text"] = {{"content", s.text->content},
                    {"size", s.text->style.size},
                    {"unit", s.text->style.unit == SizeUnit::Pixels ? "px" : "cells"},
                    {"color", s.text->style.color}};
    }
    doc["strokes"].push_back(std::move(js));
  }
  doc["final_answer"] =
      set.final_answer ? nlohmann::json(*set.final_answer) : nlohmann::json();
  return doc;
}

AnnotationSet annotation_from_json(const nlohmann::json& doc) {
  try {
    AnnotationSet set;
    if (doc.contains("concept") && !doc["concept"].is_null()) {
      set.concept_name = doc["concept"].get<std::string>();
    }
    if (doc.contains("final_answer") && !doc["final_answer"].is_null()) {
      set.final_answer = doc["final_answer"].get<std::string>();
    }
    for (const auto& js : doc.at("strokes")) {
      Stroke s;
      s.id = js.at("id").get<std::string>();
      for (const auto& p : js.at("points")) {
        s.points.push_back({p.at("x").get<int>(), p.at("y").get<int>()});
      }
      s.t_values = js.at("t").get<std::vector<double>>();
      if (js.contains("text") && !js["text"].is_null()) {
        const auto& jt = js["text"];
        StrokeText text;
        text.content = jt.at("content").get<std::string>();
        text.style.size = jt.value("size", 1.0);
        const std::string unit = jt.value("unit", "cells");
        if (unit != "cells" && unit != "px") {
          throw ParseError(ParseErrorKind::BadJson, "unknown text unit " + unit);
        }
        text.style.unit = unit == "px" ? SizeUnit::Pixels : SizeUnit::CellMultiplier;
        text.style.color = jt.value("color", "black");
        s.text = std::move(text);
      }
      if (s.points.size() != s.t_values.size()) {
        throw ParseError(ParseErrorKind::CountMismatch, s.id);
      }
      normalize_t_values(s);
      set.strokes.push_back(std::move(s));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseErrorKind::BadJson, e.what());
  }
}

AnnotationSet parse_annotation_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseErrorKind::BadJson, e.what());
  }
  return annotation_from_json(doc);
}

std::string serialize_annotation(const AnnotationSet& set, Dialect dialect) {
  if (dialect == Dialect::Json) return annotation_to_json(set).dump(2) + "\n";

  std::string out = "<answer>\n";
  if (set.concept_name) {
    out += fmt::format("<concept>{}</concept>\n", encode_entities(*set.concept_name));
  }
  out += "<strokes>\n";
  for (std::size_t i = 0; i < set.strokes.size(); ++i) {
    const Stroke& s = set.strokes[i];
    out += fmt::format("<s{}>\n  <points>", i + 1);
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      if (k) out += ',';
      out += '\'' + grid_token(s.points[k]) + '\'';
    }
    out += "</points>\n  <t_values>";
    for (std::size_t k = 0; k < s.t_values.size(); ++k) {
      if (k) out += ',';
      out += fmt::format("{:.2f}", s.t_values[k]);
    }
    out += "</t_values>\n";
    if (s.text) {
      out += fmt::format("  <text size=\"{}\" color=\"{}\">'{}'</text>\n",
                         format_size(s.text->style), s.text->style.color,
                         encode_entities(s.text->content));
    }
    out += fmt::format("  <id>{}</id>\n</s{}>\n", encode_entities(s.id), i + 1);
  }
  out += "</strokes>\n";
  if (set.final_answer) {
    out += fmt::format("<final_answer>{}</final_answer>\n",
                       encode_entities(*set.final_answer));
  }
  out += "</answer>\n";
  return out;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::OutOfRange: return "OutOfRange";
    case ViolationKind::TOutOfUnit: return "TOutOfUnit";
    case ViolationKind::TDecreasing: return "TDecreasing";
    case ViolationKind::TEndpoints: return "TEndpoints";
    case ViolationKind::CountMismatch: return "CountMismatch";
    case ViolationKind::EmptyStroke: return "EmptyStroke";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::MultiPointText: return "MultiPointText";
    case ViolationKind::BadTextStyle: return "BadTextStyle";
    case ViolationKind::EarlyFinalAnswer: return "EarlyFinalAnswer";
  }
  return "Unknown";
}

std::vector<Violation> validate(const AnnotationSet& set, const CoordinateFrame& frame) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const Stroke& s : set.strokes) {
    if (!seen.insert(s.id).second) {
      out.push_back({ViolationKind::DuplicateId, s.id,
                     fmt::format("duplicate stroke id \"{}\"", s.id)});
    }
    if (s.points.empty()) {
      out.push_back({ViolationKind::EmptyStroke, s.id, "stroke has no points"});
    }
    if (s.points.size() != s.t_values.size()) {
      out.push_back({ViolationKind::CountMismatch, s.id,
                     fmt::format("{} points vs {} t_values", s.points.size(),
                                 s.t_values.size())});
    }
    for (const GridRef& p : s.points) {
      if (p.col < 0 || p.col > frame.max_col()) {
        out.push_back({ViolationKind::OutOfRange, s.id, fmt::format("col={}", p.col)});
      }
      if (p.row < 0 || p.row > frame.max_row()) {
        out.push_back({ViolationKind::OutOfRange, s.id, fmt::format("row={}", p.row)});
      }
    }
    const auto& t = s.t_values;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(t[i] >= 0.0 && t[i] <= 1.0)) {
        out.push_back({ViolationKind::TOutOfUnit, s.id, fmt::format("t[{}]={}", i, t[i])});
      }
      if (i > 0 && t[i] < t[i - 1]) {
        out.push_back({ViolationKind::TDecreasing, s.id,
                       fmt::format("t[{}]={} < t[{}]={}", i, t[i], i - 1, t[i - 1])});
      }
    }
    if (t.size() >= 2 && (t.front() != 0.0 || t.back() != 1.0)) {
      out.push_back({ViolationKind::TEndpoints, s.id, "t_values must run from 0 to 1"});
    }
    if (s.text) {
      if (s.points.size() != 1) {
        out.push_back({ViolationKind::MultiPointText, s.id,
                       fmt::format("text stroke has {} points", s.points.size())});
      }
      if (!(s.text->style.size > 0) || !parse_color(s.text->style.color)) {
        out.push_back({ViolationKind::BadTextStyle, s.id,
                       fmt::format("size {} color '{}'", s.text->style.size,
                                   s.text->style.color)});
      }
    }
  }
  if (set.early_final_answer) {
    out.push_back({ViolationKind::EarlyFinalAnswer, "",
                   "<final_answer> appears before the last stroke"});
  }
  return out;
}

}  // namespace sketchvlm

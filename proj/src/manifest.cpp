#include <set>

#include <fmt/format.h>

#include "sketchvlm/tasks.hpp"
#include "util.hpp"

namespace sketchvlm {

using nlohmann::json;

namespace {

json point_json(PixelPoint p) { return json::array({p.x, p.y}); }
PixelPoint point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json points_json(const std::vector<PixelPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(point_json(p));
  return a;
}
std::vector<PixelPoint> points_from(const json& j) {
  std::vector<PixelPoint> out;
  for (const auto& e : j) out.push_back(point_from(e));
  return out;
}

json rect_json(const PixelRect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }
PixelRect rect_from(const json& j) {
  PixelRect r{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
  if (r.x0 > r.x1 || r.y0 > r.y1) throw SchemaError("box corners out of order");
  return r;
}
json rects_json(const std::vector<PixelRect>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back(rect_json(r));
  return a;
}
std::vector<PixelRect> rects_from(const json& j) {
  std::vector<PixelRect> out;
  for (const auto& e : j) out.push_back(rect_from(e));
  return out;
}

json cell_json(MazeCell c) { return json::array({c.row, c.col}); }
MazeCell cell_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

json truth_to_json(const GroundTruth& truth) {
  return std::visit(
      [](const auto& t) -> json {
        using T = std::decay_t<decltype(t)>;
        json j = json::object();
        if constexpr (std::is_same_v<T, DotsGT>) {
          j["points"] = points_json(t.points);
          j["labels"] = t.labels;
          j["label_anchors"] = points_json(t.label_anchors);
          j["dot_radius"] = t.dot_radius;
          if (!t.contour.empty()) j["contour"] = points_json(t.contour);
        } else if constexpr (std::is_same_v<T, MazeGT>) {
          j["rows"] = t.rows;
          j["cols"] = t.cols;
          j["walls"] = t.walls;
          j["start"] = cell_json(t.start);
          j["end"] = cell_json(t.end);
          json path = json::array();
          for (auto d : t.path) path.push_back(to_string(d));
          j["path"] = path;
          j["valid"] = t.valid;
        } else if constexpr (std::is_same_v<T, BallGT>) {
          json scene;
          scene["width"] = t.scene.width;
          scene["height"] = t.scene.height;
          scene["ball_start"] = point_json(t.scene.ball_start);
          scene["ball_radius"] = t.scene.ball_radius;
          json platforms = json::array();
          for (const auto& s : t.scene.platforms) platforms.push_back(json::array({s.a.x, s.a.y, s.b.x, s.b.y}));
          scene["platforms"] = platforms;
          scene["containers"] = rects_json({t.scene.containers.begin(), t.scene.containers.end()});
          j["scene"] = scene;
          j["trajectory"] = points_json(t.trajectory);
          j["container"] = t.container;
        } else if constexpr (std::is_same_v<T, CountGT>) {
          j["object"] = t.object;
          j["boxes"] = rects_json(t.boxes);
        } else if constexpr (std::is_same_v<T, ShapesGT>) {
          json classes = json::object();
          for (const auto& [name, boxes] : t.boxes) classes[name] = rects_json(boxes);
          j["classes"] = classes;
        } else if constexpr (std::is_same_v<T, LabelGT>) {
          j["concept"] = t.concept_name;
          json parts = json::object();
          for (const auto& [name, poly] : t.parts) parts[name] = points_json(poly);
          j["parts"] = parts;
        }
        return j;
      },
      truth);
}

GroundTruth truth_from_json(TaskKind kind, const json& j) {
  switch (kind) {
    case TaskKind::ConnectDots: {
      DotsGT t;
      t.points = points_from(j.at("points"));
      t.labels = j.at("labels").get<std::vector<int>>();
      t.label_anchors = points_from(j.value("label_anchors", json::array()));
      t.dot_radius = j.value("dot_radius", 6.0);
      if (j.contains("contour")) t.contour = points_from(j.at("contour"));
      if (t.labels.size() != t.points.size()) throw SchemaError("dots: labels and points differ in length");
      return t;
    }
    case TaskKind::Maze: {
      MazeGT t;
      t.rows = j.at("rows").get<int>();
      t.cols = j.at("cols").get<int>();
      t.walls = j.at("walls").get<std::vector<std::uint8_t>>();
      t.start = cell_from(j.at("start"));
      t.end = cell_from(j.at("end"));
      for (const auto& d : j.at("path")) t.path.push_back(direction_from_string(d.get<std::string>()));
      t.valid = j.at("valid").get<bool>();
      if (t.walls.size() != static_cast<std::size_t>(t.rows * t.cols)) throw SchemaError("maze: wall count");
      return t;
    }
    case TaskKind::BallDrop: {
      BallGT t;
      const auto& s = j.at("scene");
      t.scene.width = s.at("width").get<int>();
      t.scene.height = s.at("height").get<int>();
      t.scene.ball_start = point_from(s.at("ball_start"));
      t.scene.ball_radius = s.at("ball_radius").get<double>();
      for (const auto& p : s.at("platforms"))
        t.scene.platforms.push_back({{p.at(0).get<double>(), p.at(1).get<double>()},
                                     {p.at(2).get<double>(), p.at(3).get<double>()}});
      auto boxes = rects_from(s.at("containers"));
      if (boxes.size() != 4) throw SchemaError("ball drop: need exactly 4 containers");
      std::copy(boxes.begin(), boxes.end(), t.scene.containers.begin());
      t.trajectory = points_from(j.at("trajectory"));
      t.container = j.at("container").get<int>();
      return t;
    }
    case TaskKind::Counting: return CountGT{j.at("object").get<std::string>(), rects_from(j.at("boxes"))};
    case TaskKind::Shapes: {
      ShapesGT t;
      for (const auto& [name, boxes] : j.at("classes").items()) t.boxes[name] = rects_from(boxes);
      return t;
    }
    case TaskKind::PartLabel: {
      LabelGT t;
      t.concept_name = j.at("concept").get<std::string>();
      for (const auto& [name, poly] : j.at("parts").items()) {
        t.parts[name] = points_from(poly);
        if (t.parts[name].size() < 3) throw SchemaError("part polygon needs 3 vertices: " + name);
      }
      return t;
    }
    case TaskKind::FreeVQA: return AnswerGT{};
  }
  throw SchemaError("unknown task kind");
}

json instance_to_json(const TaskInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["kind"] = to_string(inst.kind);
  j["image"] = inst.image;
  j["width"] = inst.width;
  j["height"] = inst.height;
  j["question"] = inst.question;
  if (inst.answer) j["answer"] = *inst.answer;
  j["truth"] = truth_to_json(inst.truth);
  return j;
}

TaskInstance instance_from_json(const json& j) {
  try {
    TaskInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.kind = task_kind_from_string(j.at("kind").get<std::string>());
    inst.image = j.at("image").get<std::string>();
    inst.width = j.at("width").get<int>();
    inst.height = j.at("height").get<int>();
    inst.question = j.value("question", "");
    if (j.contains("answer") && !j.at("answer").is_null()) inst.answer = j.at("answer").get<std::string>();
    inst.truth = truth_from_json(inst.kind, j.value("truth", json::object()));
    inst.check();
    return inst;
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("bad instance: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
}

std::vector<TaskInstance> load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFile("manifest not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.at("schema_version").is_number_integer())
    throw SchemaError(path.string() + ": missing schema_version");
  const int version = doc.at("schema_version").get<int>();
  if (version != kManifestSchemaVersion)
    throw SchemaError(fmt::format("{}: unsupported schema_version {}", path.string(), version));
  if (!doc.contains("instances") || !doc.at("instances").is_array())
    throw SchemaError(path.string() + ": missing instances array");

  const auto dir = path.parent_path();
  std::vector<TaskInstance> out;
  std::set<std::string> ids;
  for (const auto& j : doc.at("instances")) {
    auto inst = instance_from_json(j);
    if (!ids.insert(inst.id).second) throw SchemaError("duplicate instance id: " + inst.id);
    if (!std::filesystem::exists(dir / inst.image))
      throw MissingFile(fmt::format("{}: image not found: {}", inst.id, (dir / inst.image).string()));
    out.push_back(std::move(inst));
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const std::vector<TaskInstance>& instances) {
  json doc;
  doc["schema_version"] = kManifestSchemaVersion;
  json list = json::array();
  for (const auto& inst : instances) list.push_back(instance_to_json(inst));
  doc["instances"] = list;
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace sketchvlm

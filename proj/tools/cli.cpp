#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sketchvlm/coords.hpp"
#include "sketchvlm/gateway.hpp"
#include "sketchvlm/judge.hpp"
#include "sketchvlm/metrics.hpp"
#include "sketchvlm/overlay.hpp"
#include "sketchvlm/random.hpp"
#include "sketchvlm/service.hpp"
#include "sketchvlm/session.hpp"
#include "sketchvlm/tasks.hpp"

namespace sketchvlm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Frame and prompt options shared by run and render.
struct FrameFlags {
  bool grid = true;
  bool no_grid = false;
  std::string frame;  // empty: grid unless --no-grid
  int res_x = 50;
  int res_y = 50;
  int scale = 1000;
  std::string origin;

  void add(CLI::App& app) {
    app.add_flag("--grid", grid, "Append coordinate rulers (default)");
    app.add_flag("--no-grid", no_grid, "No rulers; implies a normalized frame");
    app.add_option("--frame", frame, "grid | normalized")->check(CLI::IsMember({"grid", "normalized"}));
    app.add_option("--res-x", res_x, "Grid columns")->check(CLI::PositiveNumber);
    app.add_option("--res-y", res_y, "Grid rows")->check(CLI::PositiveNumber);
    app.add_option("--scale", scale, "Normalized frame scale")->check(CLI::PositiveNumber);
    app.add_option("--origin", origin, "top_left | bottom_left")->check(CLI::IsMember({"top_left", "bottom_left"}));
  }

  PromptConfig config() const {
    PromptConfig cfg;
    const std::string mode = frame.empty() ? (no_grid ? "normalized" : "grid") : frame;
    cfg.grid_enabled = !no_grid;
    if (mode == "grid") {
      cfg.frame = CoordinateFrame::grid(res_x, res_y, origin == "top_left" ? Origin::TopLeft : Origin::BottomLeft);
    } else {
      cfg.frame = CoordinateFrame::normalized(scale, origin == "bottom_left" ? Origin::BottomLeft : Origin::TopLeft);
      cfg.grid_enabled = false;
    }
    try {
      cfg.check();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return cfg;
  }
};

std::map<std::string, ProviderConfig> load_providers(const std::string& providers_file,
                                                     const std::string& mock_script) {
  std::map<std::string, ProviderConfig> out;
  if (!providers_file.empty()) {
    try {
      for (auto& p : load_provider_configs(providers_file)) out[p.name] = p;
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}: {}", providers_file, e.what()));
    }
  }
  if (!mock_script.empty()) {
    json replies;
    try {
      replies = json::parse(slurp(mock_script));
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: {}", mock_script, e.what()));
    }
    out["mock"] = mock_provider(replies.get<std::vector<std::string>>());
  }
  return out;
}

// forge ---------------------------------------------------------------------

std::vector<std::vector<PixelPoint>> builtin_contour(int which) {
  std::vector<PixelPoint> c;
  switch (which % 4) {
    case 0:
      for (int i = 0; i < 360; ++i) {
        const double a = 2 * std::numbers::pi * i / 360;
        c.push_back({std::cos(a), std::sin(a)});
      }
      break;
    case 1:
      c = {{0, 0}, {2, 0}, {2, 1}, {0, 1}};
      break;
    case 2:
      for (int i = 0; i < 10; ++i) {
        const double a = std::numbers::pi / 2 + std::numbers::pi * i / 5;
        const double r = i % 2 == 0 ? 1.0 : 0.45;
        c.push_back({r * std::cos(a), -r * std::sin(a)});
      }
      break;
    default:
      for (int i = 0; i < 240; ++i) {
        const double t = 2 * std::numbers::pi * i / 240;
        const double s = std::sin(t);
        c.push_back({16 * s * s * s,
                     -(13 * std::cos(t) - 5 * std::cos(2 * t) - 2 * std::cos(3 * t) - std::cos(4 * t))});
      }
  }
  return {c};
}

int cmd_forge(const std::string& kind, int count, std::uint64_t seed, const fs::path& out_dir,
              const std::string& contours_file, std::ostream& out) {
  std::vector<TaskInstance> instances;
  std::vector<std::pair<std::string, RasterImage>> images;
  auto add = [&](TaskInstance inst, bool with_image = true) {
    if (with_image) images.emplace_back(inst.image, render_task_image(inst));
    inst.image = "images/" + inst.image;
    instances.push_back(std::move(inst));
  };

  if (kind == "dots") {
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
      const int n = static_cast<int>(rng.integer(4, 35));
      auto inst = gen_random_dots(n, derive_seed(seed, static_cast<std::uint64_t>(i)));
      inst.id = fmt::format("dots-{:04d}", i);
      inst.image = inst.id + ".png";
      add(std::move(inst));
    }
  } else if (kind == "outline") {
    std::vector<std::vector<PixelPoint>> custom;
    if (!contours_file.empty()) {
      const json doc = json::parse(slurp(contours_file));
      for (const auto& poly : doc) {
        std::vector<PixelPoint> c;
        for (const auto& p : poly) c.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        custom.push_back(std::move(c));
      }
    }
    for (int i = 0; i < count; ++i) {
      auto contours = custom.empty() ? builtin_contour(i) : custom;
      auto inst = gen_outline_dots(contours, derive_seed(seed, static_cast<std::uint64_t>(i)));
      inst.id = fmt::format("outline-{:04d}", i);
      inst.image = inst.id + ".png";
      add(std::move(inst));
    }
  } else if (kind == "maze") {
    for (int i = 0; i < count; ++i) {
      auto pair = gen_maze(derive_seed(seed, static_cast<std::uint64_t>(i)));
      const std::string image = fmt::format("maze-{:04d}.png", i);
      pair.valid.id = fmt::format("maze-{:04d}-valid", i);
      pair.invalid.id = fmt::format("maze-{:04d}-invalid", i);
      pair.valid.image = pair.invalid.image = image;
      add(std::move(pair.valid));
      add(std::move(pair.invalid), false);
    }
  } else if (kind == "balldrop") {
    for (auto& inst : gen_ball_drop_batch(count, seed)) add(std::move(inst));
  } else {
    throw ConfigError("unknown forge kind " + kind);
  }

  fs::create_directories(out_dir / "images");
  for (const auto& [name, img] : images) write_png(img, out_dir / "images" / name);
  save_manifest(out_dir / "manifest.json", instances);
  out << fmt::format("wrote {} instances to {}\n", instances.size(), (out_dir / "manifest.json").string());
  return kExitOk;
}

// run -----------------------------------------------------------------------

struct RunFlags {
  std::string manifest;
  std::string out;
  std::string provider = "oracle";
  std::string providers_file;
  std::string mock_script;
  bool single = false;
  bool multi = false;
  int max_turns = 40;
  int jobs = 4;
  bool resume = false;
  int max_instances = 0;
  std::uint64_t seed = 0;
  FrameFlags frame;
};

json read_json_file(const fs::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  if (f.single && f.multi) throw ConfigError("--single and --multi are exclusive");
  PromptConfig cfg = f.frame.config();
  cfg.mode = f.multi ? SessionMode::Stepwise : SessionMode::SingleTurn;

  const fs::path manifest_path = fs::absolute(f.manifest);
  const auto instances = load_manifest(manifest_path);
  const bool oracle = f.provider == "oracle";
  std::map<std::string, ProviderConfig> providers;
  if (!oracle) {
    providers = load_providers(f.providers_file, f.mock_script);
    if (!providers.count(f.provider)) throw ConfigError("unknown provider " + f.provider);
  }

  const fs::path run_dir = f.out;
  fs::create_directories(run_dir / "instances");
  json config = {{"provider", f.provider},
                 {"prompt", prompt_config_to_json(cfg)},
                 {"manifest", manifest_path.string()},
                 {"max_turns", f.max_turns},
                 {"seed", f.seed}};
  const std::string hash = config_hash(config);
  const json run_json = {{"tool_version", tool_version()},
                         {"run_id", hash.substr(0, 12)},
                         {"config", config},
                         {"config_hash", hash},
                         {"instances", instances.size()}};
  if (f.resume && fs::exists(run_dir / "run.json")) {
    const auto previous = read_json_file(run_dir / "run.json");
    if (previous.value("config_hash", "") != hash) throw ConfigError("--resume with a different configuration");
  }
  spit(run_dir / "run.json", run_json.dump(2) + "\n");

  Gateway gateway(GatewayOptions{8, run_dir / "audit.ndjson"});
  std::atomic<std::size_t> next{0};
  std::atomic<int> ok{0}, failed{0}, skipped{0}, started{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= instances.size()) return;
      const auto& inst = instances[i];
      const fs::path dir = run_dir / "instances" / inst.id;
      if (f.resume && fs::exists(dir / "result.json")) {
        const auto prev = read_json_file(dir / "result.json");
        if (prev.value("status", "") == "ok") {
          ++skipped;
          ++ok;
          continue;
        }
      }
      if (f.max_instances > 0 && started++ >= f.max_instances) return;
      fs::remove_all(dir);
      fs::create_directories(dir);
      json result = {{"id", inst.id}};
      try {
        RasterImage base = read_png(manifest_path.parent_path() / inst.image);
        if (base.width() != inst.width || base.height() != inst.height)
          throw std::runtime_error("image size differs from the manifest");
        ProviderConfig provider =
            oracle ? mock_provider(scripted_responses(reference_annotation(inst, cfg.frame), cfg.mode), "oracle")
                   : providers.at(f.provider);
        SessionOptions so;
        so.max_turns = f.max_turns;
        so.event_log = dir / "transcript.ndjson";
        Session session(inst.id, base, cfg, inst.task_prompt(), provider, gateway, so);
        RunResult r = cfg.mode == SessionMode::SingleTurn ? session.run_single_turn() : session.run_multi_turn();
        AnnotationSet set = r.annotations;
        set.final_answer = r.final_answer;
        spit(dir / "anno.json", serialize_annotation(set, Dialect::Json));
        const auto overlay = session.overlay();
        spit(dir / "overlay.svg", to_svg(overlay));
        write_png(composite(base, overlay), dir / "composite.png");
        result["status"] = "ok";
        result["turns"] = session.turns().size();
        result["final_answer"] = r.final_answer ? json(*r.final_answer) : json(nullptr);
        ++ok;
      } catch (const std::exception& e) {
        result["status"] = "failed";
        result["error"] = e.what();
        ++failed;
        std::lock_guard lock(log_mutex);
        err << fmt::format("{}: {}\n", inst.id, e.what());
      }
      spit(dir / "result.json", result.dump(2) + "\n");
    }
  };

  const int jobs = std::max(1, f.jobs);
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  out << fmt::format("{} ok ({} resumed), {} failed of {}\n", ok.load(), skipped.load(), failed.load(),
                     instances.size());
  if (!instances.empty() && ok == 0 && failed > 0) return kExitPartial;
  return kExitOk;
}

// eval ----------------------------------------------------------------------

int cmd_eval(const fs::path& run_dir, const std::string& manifest_override, const fs::path& out_dir,
             std::ostream& out) {
  const json run = read_json_file(run_dir / "run.json");
  if (!run.contains("config") || !run.contains("config_hash")) throw ConfigError("run.json is incomplete");
  const std::string manifest =
      manifest_override.empty() ? run.at("config").at("manifest").get<std::string>() : manifest_override;
  PromptConfig cfg;
  try {
    cfg = prompt_config_from_json(run.at("config").at("prompt"));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const auto instances = load_manifest(manifest);

  std::vector<InstanceScore> scores;
  for (const auto& inst : instances) {
    const fs::path dir = run_dir / "instances" / inst.id;
    std::optional<AnnotationSet> set;
    if (fs::exists(dir / "result.json") && read_json_file(dir / "result.json").value("status", "") == "ok")
      set = parse_annotation_json(slurp(dir / "anno.json"));
    scores.push_back(score_instance(inst, set, cfg.frame));
  }
  auto report = build_report(run.value("run_id", ""), run.at("config_hash").get<std::string>(), std::move(scores));
  const fs::path dest = out_dir.empty() ? run_dir : out_dir;
  spit(dest / "report.csv", report_csv(report));
  spit(dest / "report.json", report_json(report).dump(2) + "\n");
  for (const auto& a : report.aggregates)
    out << fmt::format("{:<24} {:>10.4f} ± {:.4f} (n={})\n", a.metric, a.value, a.dispersion, a.count);
  return kExitOk;
}

// judge ---------------------------------------------------------------------

int cmd_judge(const fs::path& run_dir, const std::string& rubric_name, const std::string& provider_name,
              const std::string& providers_file, const std::string& mock_script, std::ostream& out,
              std::ostream& err) {
  const json run = read_json_file(run_dir / "run.json");
  const fs::path manifest = run.at("config").at("manifest").get<std::string>();
  const auto instances = load_manifest(manifest);
  const auto providers = load_providers(providers_file, mock_script);
  if (!providers.count(provider_name)) throw ConfigError("unknown provider " + provider_name);
  const bool alignment = rubric_name == "alignment";
  const Rubric rubric = alignment ? Rubric::BallPhysics : rubric_from_string(rubric_name);

  Gateway gateway(GatewayOptions{8, run_dir / "judge_audit.ndjson"});
  const fs::path log = run_dir / fmt::format("verdicts_{}.ndjson", rubric_name);
  fs::remove(log);
  int judged = 0, failed = 0;
  std::vector<std::string> inferred, stated;
  for (const auto& inst : instances) {
    const fs::path dir = run_dir / "instances" / inst.id;
    if (!fs::exists(dir / "composite.png")) continue;
    if (!alignment && rubric == Rubric::BallPhysics && inst.kind != TaskKind::BallDrop) continue;
    if (!alignment && rubric == Rubric::MazeNav && inst.kind != TaskKind::Maze) continue;
    json rec = {{"id", inst.id}, {"rubric", rubric_name}};
    try {
      const auto annotated = read_png(dir / "composite.png");
      JudgeVerdict v;
      if (alignment) {
        v = judge_alignment(gateway, providers.at(provider_name), annotated, inst.question);
        const auto result = read_json_file(dir / "result.json");
        const std::string model_answer =
            result.contains("final_answer") && !result["final_answer"].is_null() ? result["final_answer"].get<std::string>() : "";
        inferred.push_back(v.inferred_answer.value_or(""));
        stated.push_back(model_answer);
      } else {
        std::optional<std::string> path;
        if (const auto* maze = std::get_if<MazeGT>(&inst.truth)) {
          std::vector<std::string> words;
          for (auto d : maze->path) words.push_back(to_string(d));
          path = fmt::format("{}", fmt::join(words, ", "));
        }
        const auto original = read_png(manifest.parent_path() / inst.image);
        v = judge_quality(gateway, providers.at(provider_name), original, annotated, rubric, path);
      }
      rec["verdict"] = v.to_json();
      ++judged;
    } catch (const std::exception& e) {
      rec["error"] = e.what();
      ++failed;
      err << fmt::format("{}: {}\n", inst.id, e.what());
    }
    std::ofstream(log, std::ios::app) << rec.dump() << "\n";
  }
  out << fmt::format("judged {}, failed {}\n", judged, failed);
  if (alignment && !inferred.empty()) out << fmt::format("align_rate {:.4f}\n", align_rate(inferred, stated));
  return judged == 0 && failed > 0 ? kExitPartial : kExitOk;
}

// agree ---------------------------------------------------------------------

std::vector<int> read_ratings(const fs::path& path) {
  const std::string text = slurp(path);
  std::vector<int> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      return json::parse(text).get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: not an integer rating: {}", path.string(), tok));
    }
  }
  return out;
}

int cmd_agree(const fs::path& a_path, const fs::path& b_path, std::ostream& out) {
  const auto a = read_ratings(a_path), b = read_ratings(b_path);
  AgreementStats s;
  try {
    s = agreement_stats(a, b);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  json j = {{"n", s.n},
            {"kappa_quadratic", s.kappa_quadratic ? json(*s.kappa_quadratic) : json(nullptr)},
            {"pearson", s.pearson ? json(*s.pearson) : json(nullptr)},
            {"tool_version", tool_version()}};
  out << j.dump(2) << "\n";
  return kExitOk;
}

// render --------------------------------------------------------------------

int cmd_render(const fs::path& anno, const fs::path& image_path, const FrameFlags& ff, const std::string& svg_out,
               const std::string& png_out, bool best_effort, std::ostream& out) {
  const std::string text = slurp(anno);
  AnnotationSet set;
  try {
    const auto first = text.find_first_not_of(" \t\r\n");
    set = first != std::string::npos && text[first] == '{' ? parse_annotation_json(text) : parse_annotation(text);
  } catch (const ParseError& e) {
    throw ConfigError(fmt::format("{}: {}", anno.string(), e.what()));
  }
  const RasterImage base = read_png(image_path);
  OverlayOptions opts;
  opts.strict = !best_effort;
  opts.background_href = image_path.filename().string();
  OverlayDocument doc;
  try {
    doc = render_overlay(set, ff.config().frame, base.width(), base.height(), opts);
  } catch (const RenderRejected& e) {
    for (const auto& v : e.violations()) out << fmt::format("{}: {}\n", v.stroke_id, v.description);
    throw ConfigError("annotation rejected; rerun with --best-effort to draw anyway");
  }
  if (!svg_out.empty()) spit(svg_out, to_svg(doc));
  if (!png_out.empty()) write_png(composite(base, doc), png_out);
  out << fmt::format("{} layers\n", doc.layers.size());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sketch-based visual reasoning toolkit", "sketchvlm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  std::string forge_kind, forge_out, contours;
  int forge_count = 10;
  std::uint64_t forge_seed = 0;
  auto* forge = app.add_subcommand("forge", "Generate a synthetic benchmark");
  forge->add_option("kind", forge_kind, "dots | outline | maze | balldrop")
      ->required()
      ->check(CLI::IsMember({"dots", "outline", "maze", "balldrop"}));
  forge->add_option("--count", forge_count, "Instances (maze: valid/invalid pairs)")->check(CLI::PositiveNumber);
  forge->add_option("--seed", forge_seed, "Master seed");
  forge->add_option("-o,--out", forge_out, "Output directory")->required();
  forge->add_option("--contours", contours, "JSON polylines for outline dots");

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "Annotate every manifest instance");
  run_cmd->add_option("--manifest", rf.manifest)->required();
  run_cmd->add_option("-o,--out", rf.out)->required();
  run_cmd->add_option("--provider", rf.provider, "Provider name; 'oracle' draws ground truth");
  run_cmd->add_option("--providers", rf.providers_file, "Provider config JSON");
  run_cmd->add_option("--mock-script", rf.mock_script, "JSON array of replies for provider 'mock'");
  run_cmd->add_flag("--single", rf.single, "One call per instance (default)");
  run_cmd->add_flag("--multi", rf.multi, "One stroke per turn");
  run_cmd->add_option("--max-turns", rf.max_turns)->check(CLI::PositiveNumber);
  run_cmd->add_option("--jobs", rf.jobs)->check(CLI::PositiveNumber);
  run_cmd->add_flag("--resume", rf.resume, "Skip instances that already finished");
  run_cmd->add_option("--max-instances", rf.max_instances, "Stop after starting this many instances");
  run_cmd->add_option("--seed", rf.seed, "Recorded in run.json");
  rf.frame.add(*run_cmd);

  std::string eval_run, eval_manifest, eval_out;
  auto* eval = app.add_subcommand("eval", "Score a run");
  eval->add_option("run", eval_run)->required();
  eval->add_option("--manifest", eval_manifest);
  eval->add_option("-o,--out", eval_out);

  std::string judge_run, rubric, judge_provider = "mock", judge_providers, judge_script;
  auto* judge = app.add_subcommand("judge", "Judge a run's annotations");
  judge->add_option("run", judge_run)->required();
  judge->add_option("--rubric", rubric)->required()->check(CLI::IsMember({"ball_physics", "maze_nav", "alignment"}));
  judge->add_option("--provider", judge_provider);
  judge->add_option("--providers", judge_providers);
  judge->add_option("--mock-script", judge_script);

  std::string agree_a, agree_b;
  auto* agree = app.add_subcommand("agree", "Agreement between two rating files");
  agree->add_option("a", agree_a)->required();
  agree->add_option("b", agree_b)->required();

  std::string render_anno, render_image, render_svg, render_png;
  bool best_effort = false;
  FrameFlags render_frame;
  auto* render = app.add_subcommand("render", "Render an annotation over an image");
  render->add_option("anno", render_anno, "Annotation (.json or model text)")->required();
  render->add_option("image", render_image, "Base PNG")->required();
  render->add_option("--svg", render_svg);
  render->add_option("--png", render_png);
  render->add_flag("--best-effort", best_effort, "Draw strokes that fail validation");
  render_frame.add(*render);

  std::string serve_data = "studio-data", serve_host = "127.0.0.1", serve_static, serve_providers, serve_script;
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--data", serve_data);
  serve->add_option("--host", serve_host);
  serve->add_option("--port", serve_port);
  serve->add_option("--static", serve_static);
  serve->add_option("--providers", serve_providers);
  serve->add_option("--mock-script", serve_script);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*forge) return cmd_forge(forge_kind, forge_count, forge_seed, forge_out, contours, out);
    if (*run_cmd) return cmd_run(rf, out, err);
    if (*eval) return cmd_eval(eval_run, eval_manifest, eval_out, out);
    if (*judge) return cmd_judge(judge_run, rubric, judge_provider, judge_providers, judge_script, out, err);
    if (*agree) return cmd_agree(agree_a, agree_b, out);
    if (*render) return cmd_render(render_anno, render_image, render_frame, render_svg, render_png, best_effort, out);
    if (*serve) {
      ServiceOptions so;
      so.data_dir = serve_data;
      so.providers = load_providers(serve_providers, serve_script);
      if (!serve_static.empty()) so.static_dir = serve_static;
      Gateway gateway;
      AnnotationService service(so, gateway);
      out << fmt::format("serving on http://{}:{}\n", serve_host, serve_port) << std::flush;
      service.listen(serve_host, serve_port);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingFile& e) {
    err << "missing file: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace sketchvlm::cli

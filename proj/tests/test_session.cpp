#include <doctest.h>

#include <fstream>

#include "sketchvlm/session.hpp"
#include "support.hpp"

using namespace sketchvlm;

namespace {

std::string stroke_reply(const std::string& id, int x, int y) {
  return "<answer><strokes><s1><points>'x" + std::to_string(x) + "y" + std::to_string(y) + "','x" +
         std::to_string(x + 5) + "y" + std::to_string(y + 5) + "'</points><t_values>0.00,1.00</t_values><id>" + id +
         "</id></s1></strokes></answer>";
}

PromptConfig config(SessionMode mode, bool grid = true) {
  PromptConfig cfg;
  cfg.mode = mode;
  if (!grid) {
    cfg.frame = CoordinateFrame::normalized(1000);
    cfg.grid_enabled = false;
  }
  return cfg;
}

RasterImage base_image(int w = 200, int h = 160, std::uint8_t shade = 230) {
  RasterImage img(w, h, {shade, shade, shade, 255});
  for (int x = 0; x < w; ++x) img.set(x, h / 2, {0, 0, 0, 255});
  return img;
}

std::vector<std::string> texts(const ChatMessage& m) {
  std::vector<std::string> out;
  for (const auto& p : m.parts)
    if (const auto* t = std::get_if<TextPart>(&p)) out.push_back(t->text);
  return out;
}

const RasterImage& sent_image(const std::vector<ChatMessage>& request) {
  for (const auto& m : request)
    for (const auto& p : m.parts)
      if (const auto* i = std::get_if<ImagePart>(&p)) return *i->image;
  throw std::logic_error("no image in request");
}

}  // namespace

TEST_CASE("single turn with the ball-drop reply") {
  Gateway gw;
  auto provider = mock_provider(std::vector<std::string>{testing::kBallDropReply});
  Session s("s", RasterImage(1000, 1000), config(SessionMode::SingleTurn, false),
            FreeQuestion{"Which bucket will the ball fall into?"}, provider, gw);
  const auto result = s.run_single_turn();
  CHECK(result.annotations.strokes.size() == 5);
  CHECK(result.final_answer == "3");
  CHECK(s.turns().size() == 1);
  CHECK(s.status() == SessionStatus::Done);

  const auto req = provider.mock->requests().at(0);
  REQUIRE(req.size() == 2);
  CHECK(req[0].role == Role::System);
  CHECK(req[1].image_count() == 1);
  CHECK(sent_image(req).width() == 1000);  // normalized frame: no rulers
  CHECK(req[1].text().find("Which bucket") != std::string::npos);
}

TEST_CASE("single turn with an empty answer") {
  Gateway gw;
  Session s("s", base_image(), config(SessionMode::SingleTurn), FreeQuestion{"q"},
            mock_provider(std::vector<std::string>{"<answer></answer>"}), gw);
  const auto r = s.run_single_turn();
  CHECK(r.annotations.strokes.empty());
  CHECK_FALSE(r.final_answer);
  CHECK(s.status() == SessionStatus::Done);
  CHECK(s.turns().back().delta.strokes.empty());
}

TEST_CASE("single turn prose is a parse failure with the text kept") {
  Gateway gw;
  Session s("s", base_image(), config(SessionMode::SingleTurn), FreeQuestion{"q"},
            mock_provider(std::vector<std::string>{"It is probably bucket 2."}), gw);
  try {
    s.run_single_turn();
    FAIL("expected ParseFailure");
  } catch (const SessionError& e) {
    CHECK(e.kind() == SessionErrorKind::ParseFailure);
  }
  CHECK(s.status() == SessionStatus::Failed);
  REQUIRE(s.turns().size() == 1);
  CHECK(s.turns()[0].response == "It is probably bucket 2.");
}

TEST_CASE("grid runs send the ruler-augmented image") {
  Gateway gw;
  auto provider = mock_provider(std::vector<std::string>{"<answer></answer>"});
  const auto base = base_image();
  Session s("s", base, config(SessionMode::SingleTurn), FreeQuestion{"q"}, provider, gw);
  s.run_single_turn();
  CHECK(sent_image(provider.mock->requests().at(0)) == grid_augment(base, CoordinateFrame::grid(50, 50)));
}

TEST_CASE("stepwise walk-through") {
  Gateway gw;
  auto provider = mock_provider(std::vector<std::string>{stroke_reply("a", 5, 5), stroke_reply("b", 20, 20),
                                                         "<answer></answer>", "<final_answer>2</final_answer>"});
  const auto base = base_image();
  const auto cfg = config(SessionMode::Stepwise);
  Session s("s", base, cfg, FreeQuestion{"How many?"}, provider, gw);
  const auto r = s.run_multi_turn();
  CHECK(r.annotations.strokes.size() == 2);
  CHECK(r.final_answer == "2");
  CHECK(s.turns().size() == 4);
  CHECK(s.status() == SessionStatus::Done);
  CHECK(s.turns()[3].final_turn);
  CHECK(s.turns()[3].final_answer == "2");
  for (int i = 0; i < 3; ++i) CHECK_FALSE(s.turns()[static_cast<std::size_t>(i)].final_answer);

  const auto reqs = provider.mock->requests();
  const auto guards = stepwise_guards();
  // Turn 1: system prompt, one-stroke guard, task prompt, plain image.
  CHECK(reqs[0][0].role == Role::System);
  auto t1 = texts(reqs[0][1]);
  REQUIRE(t1.size() == 2);
  CHECK(t1[0] == guards.one_stroke_guard);
  CHECK(t1[1].find("How many?") != std::string::npos);
  // Turn 2 adds the serialized history of stroke a.
  auto t2 = texts(reqs[1][1]);
  REQUIRE(t2.size() == 3);
  CHECK(t2[2].find("<id>a</id>") != std::string::npos);
  CHECK(s.turns()[1].sent_text_history.find("<id>a</id>") != std::string::npos);
  // Final turn uses the final-answer guard.
  CHECK(texts(reqs[3][1])[0] == guards.final_answer_guard);

  // Accumulation and feedback fidelity, rebuilt independently.
  AnnotationSet prefix;
  OverlayOptions lax;
  lax.strict = false;
  for (std::size_t k = 0; k < reqs.size(); ++k) {
    const RasterImage expected =
        grid_augment(prefix.strokes.empty() ? base : composite(base, render_overlay(prefix, cfg.frame, 200, 160, lax)),
                     cfg.frame);
    CHECK(sent_image(reqs[k]) == expected);
    CHECK(*s.turns()[k].sent_image == expected);
    for (const auto& st : s.turns()[k].delta.strokes) prefix.strokes.push_back(st);
  }
  CHECK(prefix.strokes == s.annotations().strokes);
}

TEST_CASE("stepwise keeps only the first of several strokes") {
  Gateway gw;
  const std::string two =
      "<answer><strokes><s1><points>'x1y1'</points><t_values>0.00</t_values><id>one</id></s1>"
      "<s2><points>'x2y2'</points><t_values>0.00</t_values><id>two</id></s2></strokes></answer>";
  Session s("s", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"},
            mock_provider(std::vector<std::string>{two, "<answer></answer>", "<final_answer>x</final_answer>"}), gw);
  s.run_multi_turn();
  REQUIRE(s.turns()[0].delta.strokes.size() == 1);
  CHECK(s.turns()[0].delta.strokes[0].id == "one");
  CHECK(s.turns()[0].notes.at(0).find("guard violation") == 0);
}

TEST_CASE("turn limit forces the final turn") {
  Gateway gw;
  auto provider = mock_provider(std::vector<std::string>{stroke_reply("a", 1, 1), "<final_answer>4</final_answer>"});
  Session s("s", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"}, provider, gw);
  const auto r = s.run_multi_turn(1);
  CHECK(s.turns().size() == 2);
  CHECK(r.final_answer == "4");
  CHECK(s.turn_limit_exceeded());
  const auto& notes = s.turns().back().notes;
  CHECK(std::find(notes.begin(), notes.end(), "TurnLimitExceeded") != notes.end());
  CHECK(provider.mock->calls() <= 2);
}

TEST_CASE("step preconditions and growth") {
  Gateway gw;
  Session s("s", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"},
            mock_provider(std::vector<std::string>{stroke_reply("a", 1, 1), "<answer></answer>", "<final_answer>1</final_answer>"}),
            gw);
  s.step();
  CHECK(s.turns().size() == 1);
  CHECK(s.status() == SessionStatus::Open);
  s.step();
  CHECK(s.status() == SessionStatus::AwaitingFinal);
  s.step();
  CHECK(s.status() == SessionStatus::Done);
  try {
    s.step();
    FAIL("expected a precondition error");
  } catch (const SessionError& e) {
    CHECK(e.kind() == SessionErrorKind::Precondition);
  }
}

TEST_CASE("a new screenshot starts a fresh stroke layer") {
  Gateway gw;
  auto provider = mock_provider(std::vector<std::string>{stroke_reply("a", 5, 5), stroke_reply("b", 10, 10)});
  Session s("s", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"}, provider, gw);
  s.step();
  const auto screenshot = base_image(200, 160, 90);
  const auto& rec = s.step("now this page", screenshot);
  CHECK(rec.image_reset);
  CHECK(*rec.sent_image == grid_augment(screenshot, CoordinateFrame::grid(50, 50)));
  CHECK(rec.sent_text_history.empty());
  REQUIRE(s.annotations().strokes.size() == 1);
  CHECK(s.annotations().strokes[0].id == "b");
  CHECK(s.turns().size() == 2);
  CHECK(s.base_image() == screenshot);
  CHECK(texts(provider.mock->requests()[1][1]).back() == "now this page");
}

TEST_CASE("gateway failure leaves the session resumable") {
  Gateway gw;
  auto provider = mock_provider(std::vector<MockResponse>{MockResponse::fail(GatewayErrorKind::Server),
                                                          {stroke_reply("a", 1, 1), std::nullopt}});
  Session s("s", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"}, provider, gw);
  try {
    s.step(std::nullopt, base_image(200, 160, 10));
    FAIL("expected a gateway error");
  } catch (const SessionError& e) {
    CHECK(e.kind() == SessionErrorKind::Gateway);
  }
  CHECK(s.turns().empty());
  CHECK(s.status() == SessionStatus::Open);
  CHECK(s.base_image() == base_image());
  s.step();
  CHECK(s.turns().size() == 1);
}

TEST_CASE("duplicate ids across turns are renamed") {
  Gateway gw;
  Session s("s", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"},
            mock_provider(std::vector<std::string>{stroke_reply("a", 1, 1), stroke_reply("a", 2, 2)}), gw);
  s.step();
  s.step();
  CHECK(s.annotations().strokes[1].id == "a_2");
}

TEST_CASE("sketching disabled: the reply is the answer") {
  Gateway gw;
  auto cfg = config(SessionMode::SingleTurn);
  cfg.sketch_enabled = false;
  auto provider = mock_provider(std::vector<std::string>{"Bucket 2"});
  Session s("s", base_image(), cfg, FreeQuestion{"q"}, provider, gw);
  CHECK(s.run_single_turn().final_answer == "Bucket 2");
  CHECK(provider.mock->requests()[0].size() == 1);  // no system prompt
}

TEST_CASE("replay reproduces turn records byte for byte") {
  const std::vector<std::string> script{stroke_reply("a", 3, 3), stroke_reply("b", 30, 9), "<answer></answer>",
                                        "<final_answer>yes</final_answer>"};
  auto run = [&](const std::filesystem::path& log) {
    Gateway gw;
    SessionOptions opts;
    opts.event_log = log;
    Session s("replay", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"}, mock_provider(script), gw,
              opts);
    s.run_multi_turn();
    std::string out;
    for (const auto& t : s.turns()) out += t.to_json().dump() + "\n";
    return out;
  };
  testing::TempDir dir;
  const auto a = run(dir / "a.ndjson");
  const auto b = run(dir / "b.ndjson");
  CHECK(a == b);

  std::ifstream in(dir / "a.ndjson");
  std::string line;
  std::vector<TurnRecord> turns;
  std::string last_status;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("event") == "turn");
    CHECK(j.at("session") == "replay");
    last_status = j.at("status");
    turns.push_back(TurnRecord::from_json(j));
  }
  REQUIRE(turns.size() == 4);
  CHECK(last_status == "done");

  Gateway gw;
  Session restored("replay", base_image(), config(SessionMode::Stepwise), FreeQuestion{"q"},
                   mock_provider(std::vector<std::string>{}), gw);
  restored.restore(turns, session_status_from_string(last_status));
  CHECK(restored.annotations().strokes.size() == 2);
  CHECK(restored.final_answer() == "yes");
  std::string again;
  for (const auto& t : restored.turns()) again += t.to_json().dump() + "\n";
  CHECK(again == a);
}

TEST_CASE("scripted responses reproduce a set") {
  const auto set = parse_annotation(testing::kBallDropReply);
  const auto single = scripted_responses(set, SessionMode::SingleTurn);
  CHECK(single.size() == 1);
  const auto steps = scripted_responses(set, SessionMode::Stepwise);
  CHECK(steps.size() == 7);
  Gateway gw;
  Session s("s", RasterImage(1000, 1000), config(SessionMode::Stepwise, false), FreeQuestion{"q"},
            mock_provider(steps), gw);
  const auto r = s.run_multi_turn();
  CHECK(r.annotations.strokes == set.strokes);
  CHECK(r.final_answer == "3");
}

TEST_CASE("final answer extraction") {
  CHECK(extract_final_answer("blah <FINAL_ANSWER> 7 </final_answer>") == "7");
  CHECK(extract_final_answer("<final_answer>open") == "open");
  CHECK_FALSE(extract_final_answer("nothing"));
}

#include <doctest.h>

#include <algorithm>

#include "sketchvlm/annotation.hpp"
#include "support.hpp"

using namespace sketchvlm;
using sketchvlm::testing::kBallDropReply;

TEST_CASE("ball-drop reply parses to five strokes and answer 3") {
  const auto set = parse_annotation(kBallDropReply);
  REQUIRE(set.strokes.size() == 5);
  const std::vector<std::string> ids{"path_1", "drop_1", "path_2", "path_bounce", "drop_2"};
  for (std::size_t i = 0; i < ids.size(); ++i) CHECK(set.strokes[i].id == ids[i]);
  REQUIRE(set.final_answer);
  CHECK(*set.final_answer == "3");
  CHECK(set.strokes[0].points.size() == 4);
  CHECK(set.strokes[0].points[1] == GridRef{500, 270});
  CHECK(set.strokes[0].t_values == std::vector<double>{0.0, 0.5, 0.5, 1.0});
  CHECK(set.strokes[4].t_values == std::vector<double>{0.0, 0.6, 1.0});
  CHECK_FALSE(set.early_final_answer);
  CHECK(validate(set, CoordinateFrame::normalized(1000)).empty());
}

TEST_CASE("ball-drop reply round-trips through both dialects") {
  const auto set = parse_annotation(kBallDropReply);
  CHECK(parse_annotation(serialize_annotation(set, Dialect::XmlStyle)) == set);
  CHECK(parse_annotation_json(serialize_annotation(set, Dialect::Json)) == set);
}

TEST_CASE("empty answer block") {
  const auto set = parse_annotation("<answer></answer>");
  CHECK(set.strokes.empty());
  CHECK_FALSE(set.final_answer);
}

TEST_CASE("points and t values must have the same length") {
  const char* text = "<answer><strokes><s1><points>'x1y1','x2y2','x3y3','x4y4'</points>"
                     "<t_values>0.00,0.50,1.00</t_values><id>bad</id></s1></strokes></answer>";
  try {
    parse_annotation(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::CountMismatch);
    CHECK(e.detail() == "bad");
  }
}

TEST_CASE("prose without an answer block is rejected") {
  try {
    parse_annotation("I think the ball lands in bucket 2.");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::NoAnswerBlock);
  }
}

TEST_CASE("unreadable point tokens report an offset") {
  const std::string text = "<answer><strokes><s1><points>'x1y1','banana'</points>"
                           "<t_values>0.00,1.00</t_values><id>a</id></s1></strokes></answer>";
  try {
    parse_annotation(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::BadToken);
    CHECK(e.offset() == text.find("'banana'"));
  }
}

TEST_CASE("single dot serializes in the prompt's notation") {
  AnnotationSet set;
  set.strokes.push_back({"dot", {{15, 31}}, {0.0}, std::nullopt});
  const auto text = serialize_annotation(set, Dialect::XmlStyle);
  CHECK(text.find("<points>'x15y31'</points>") != std::string::npos);
  CHECK(text.find("<t_values>0.00</t_values>") != std::string::npos);
}

TEST_CASE("text stroke serializes size and colour attributes") {
  AnnotationSet set;
  set.strokes.push_back({"count_1", {{10, 10}}, {0.0}, StrokeText{"1", {1.6, SizeUnit::CellMultiplier, "#ff0066"}}});
  const auto text = serialize_annotation(set, Dialect::XmlStyle);
  CHECK(text.find(R"(<text size="1.6" color="#ff0066">'1'</text>)") != std::string::npos);
  CHECK(parse_annotation(text) == set);
}

TEST_CASE("validate flags out-of-range points") {
  AnnotationSet set;
  set.strokes.push_back({"a", {{60, 10}}, {0.0}, std::nullopt});
  const auto v = validate(set, CoordinateFrame::grid(50, 50));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::OutOfRange);
  CHECK(v[0].stroke_id == "a");
  CHECK(v[0].description.find("60") != std::string::npos);
}

TEST_CASE("validate flags duplicate ids") {
  AnnotationSet set;
  set.strokes.push_back({"s1", {{1, 1}}, {0.0}, std::nullopt});
  set.strokes.push_back({"s1", {{2, 2}}, {0.0}, std::nullopt});
  const auto v = validate(set, CoordinateFrame::grid(50, 50));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::DuplicateId);
  CHECK(v[0].stroke_id == "s1");
}

TEST_CASE("validate flags multi-point text and bad t values") {
  AnnotationSet set;
  set.strokes.push_back({"t", {{1, 1}, {2, 2}}, {0.0, 1.0}, StrokeText{"x", {}}});
  set.strokes.push_back({"u", {{1, 1}, {2, 2}, {3, 3}}, {0.0, 0.8, 0.3}, std::nullopt});
  const auto v = validate(set, CoordinateFrame::grid(50, 50));
  auto has = [&](ViolationKind k) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
  };
  CHECK(has(ViolationKind::MultiPointText));
  CHECK(has(ViolationKind::TDecreasing));
}

TEST_CASE("final answer before the last stroke is flagged") {
  const auto set = parse_annotation(
      "<answer><strokes><s1><points>'x1y1'</points><t_values>0.00</t_values><id>a</id></s1>"
      "<final_answer>2</final_answer>"
      "<s2><points>'x2y2'</points><t_values>0.00</t_values><id>b</id></s2></strokes></answer>");
  CHECK(set.strokes.size() == 2);
  CHECK(set.final_answer == "2");
  const auto v = validate(set, CoordinateFrame::grid(50, 50));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::EarlyFinalAnswer);
}

TEST_CASE("t values are rescaled and corner pairs made monotone") {
  const auto set = parse_annotation(
      "<answer><strokes><s1><points>'x13y27','x18y37','x18y37','x24y27'</points>"
      "<t_values>0.00,0.55,0.5,1.00</t_values><id>v</id></s1>"
      "<s2><points>'x1y1','x2y2','x3y3'</points><t_values>0.2,0.4,0.6</t_values><id>w</id></s2>"
      "</strokes></answer>");
  CHECK(set.strokes[0].t_values == std::vector<double>{0.0, 0.5, 0.55, 1.0});
  const auto& w = set.strokes[1].t_values;
  CHECK(w[0] == 0.0);
  CHECK(w[1] == doctest::Approx(0.5));
  CHECK(w[2] == 1.0);
}

TEST_CASE("lenient repair: fences, comments, unquoted tokens, style element") {
  const std::string fenced = std::string("```xml\n") +
                             "<answer><strokes><!-- first -->\n<s1>< points >x3y4, x5y6</ points >"
                             "<t_values>0, 1</t_values><id>a</id></s1>"
                             "<s2><points>'x1y1'</points><t_values>0.00</t_values>"
                             "<text>'7'</text><style><font_size>2</font_size><color>red</color></style>"
                             "<id>b</id></s2></strokes></answer>\n```\n";
  const auto set = parse_annotation(fenced);
  REQUIRE(set.strokes.size() == 2);
  CHECK(set.strokes[0].points == std::vector<GridRef>{{3, 4}, {5, 6}});
  REQUIRE(set.strokes[1].text);
  CHECK(set.strokes[1].text->content == "7");
  CHECK(set.strokes[1].text->style.size == 2.0);
  CHECK(set.strokes[1].text->style.color == "red");
}

TEST_CASE("repair leaves clean text alone") {
  const auto clean = serialize_annotation(parse_annotation(kBallDropReply), Dialect::XmlStyle);
  CHECK(repair_model_output(clean) == clean);
  CHECK(repair_model_output(kBallDropReply) == std::string(kBallDropReply));
}

TEST_CASE("strokes are ordered by their index") {
  const auto set = parse_annotation(
      "<answer><strokes><s2><points>'x2y2'</points><t_values>0.00</t_values><id>second</id></s2>"
      "<s1><points>'x1y1'</points><t_values>0.00</t_values><id>first</id></s1></strokes></answer>");
  REQUIRE(set.strokes.size() == 2);
  CHECK(set.strokes[0].id == "first");
  CHECK(set.strokes[1].id == "second");
}

TEST_CASE("concept element and surrounding prose") {
  const auto set = parse_annotation(
      "Sure! Here is my sketch.\n<answer><concept>bicycle</concept><strokes>"
      "<s1><points>'x1y1'</points><t_values>0.00</t_values><text>'wheel'</text><id>label_wheel</id></s1>"
      "</strokes></answer>\nHope that helps.");
  CHECK(set.concept_name == "bicycle");
  REQUIRE(set.strokes.size() == 1);
  CHECK(set.strokes[0].text->content == "wheel");
}

TEST_CASE("json dialect schema") {
  const auto set = parse_annotation(kBallDropReply);
  const auto j = annotation_to_json(set);
  CHECK(j.at("strokes").size() == 5);
  CHECK(j.at("strokes")[0].at("points")[0] == nlohmann::json{{"x", 500}, {"y", 100}});
  CHECK(j.at("strokes")[0].at("t").size() == 4);
  CHECK(j.at("final_answer") == "3");
  CHECK_THROWS_AS(parse_annotation_json("{\"strokes\": 3}"), ParseError);
}

TEST_CASE("property: random sets round-trip in both dialects") {
  Rng rng(2024);
  const auto frame = CoordinateFrame::grid(50, 50);
  for (int i = 0; i < 300; ++i) {
    const auto set = testing::random_annotation(rng, frame);
    const auto xml = serialize_annotation(set, Dialect::XmlStyle);
    const auto parsed = parse_annotation(xml);
    CHECK_MESSAGE(parsed == set, xml);
    CHECK(parse_annotation_json(serialize_annotation(set, Dialect::Json)) == set);
    CHECK(parse_annotation(xml) == parsed);  // deterministic
  }
}

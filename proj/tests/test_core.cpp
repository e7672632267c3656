#include <set>

#include "doctest.h"
#include "gcog/core.hpp"
#include "gcog/errors.hpp"

using namespace gcog;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("shape letters are a bijection") {
  for (int i = 0; i < kShapeCount; ++i) {
    const Shape s(i);
    CHECK(Shape::from_letter(s.letter()) == s);
  }
  CHECK(Shape::from_letter('a').index() == 0);
  CHECK(Shape::from_letter('z').index() == 25);
  CHECK(code_of([] { Shape(26); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { Shape(-1); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { Shape::from_letter('A'); }) == ErrorCode::OutOfRange);
}

TEST_CASE("color table is fixed") {
  const std::array<std::string_view, 10> expected{"red",  "orange", "yellow", "green", "blue",
                                                  "purple", "pink", "brown",  "white", "gray"};
  CHECK(color_names() == expected);
  for (int i = 0; i < kColorCount; ++i) CHECK(Color::from_name(Color(i).name()).index() == i);
  CHECK(code_of([] { Color(10); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { Color::from_name("teal"); }) == ErrorCode::OutOfRange);
}

TEST_CASE("locations use x = column, y = row") {
  const Location l(2, 1);
  CHECK(l.cell() == 12);
  CHECK(l.to_string() == "(2,1)");
  CHECK(Location::from_cell(12) == l);
  CHECK(Location::from_cell(99) == Location(9, 9));
  CHECK(code_of([] { Location(10, 0); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { Location::from_cell(100); }) == ErrorCode::OutOfRange);
}

TEST_CASE("object kinds render as '<color> <shape>'") {
  const ObjectKind red_a{Color::from_name("red"), Shape::from_letter('a')};
  CHECK(red_a.to_string() == "red a");
  CHECK(red_a.index() == 0);
  std::set<int> seen;
  for (int i = 0; i < kObjectKindCount; ++i) {
    CHECK(ObjectKind::from_index(i).index() == i);
    seen.insert(i);
  }
  CHECK(seen.size() == 260);
}

TEST_CASE("answer_to_class examples") {
  CHECK(answer_to_class(Answer::of(false)).index() == 0);
  CHECK(answer_to_class(Answer::of(true)).index() == 1);
  CHECK(answer_to_class(Answer::of(Location(2, 1))).index() == 50);
  CHECK(answer_to_class(Answer::of(Shape::from_letter('a'))).index() == 12);
  CHECK(answer_to_class(Answer::of(Color(0))).index() == 2);
}

TEST_CASE("class_to_answer examples") {
  CHECK(class_to_answer(1) == Answer::of(true));
  CHECK(class_to_answer(11) == Answer::of(Color(9)));
  CHECK(class_to_answer(137) == Answer::of(Location(9, 9)));
  CHECK(code_of([] { class_to_answer(138); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { class_to_answer(-1); }) == ErrorCode::OutOfRange);
}

TEST_CASE("class layout partitions 2 + 10 + 26 + 100") {
  int bools = 0, colors = 0, shapes = 0, locations = 0;
  for (int c = 0; c < kClassCount; ++c) {
    const Answer a = class_to_answer(c);
    CHECK(answer_to_class(a).index() == c);
    switch (a.kind()) {
      case AnswerKind::Bool: ++bools; break;
      case AnswerKind::Color: ++colors; break;
      case AnswerKind::Shape: ++shapes; break;
      case AnswerKind::Location: ++locations; break;
    }
  }
  CHECK(bools == 2);
  CHECK(colors == 10);
  CHECK(shapes == 26);
  CHECK(locations == 100);
}

TEST_CASE("answer text forms") {
  CHECK(Answer::of(true).to_string() == "true");
  CHECK(Answer::of(Color(0)).to_string() == "red");
  CHECK(Answer::of(Shape(0)).to_string() == "a");
  CHECK(Answer::of(Location(2, 1)).to_string() == "(2,1)");
}

TEST_CASE("grid_insert") {
  const SceneObject red_a{{Color(0), Shape(0)}, Location(2, 1)};
  const StimulusGrid one = grid_insert(StimulusGrid{}, red_a);
  CHECK(one.size() == 1);
  CHECK(one.at(Location(2, 1)) == red_a.kind);

  CHECK(code_of([&] { grid_insert(one, SceneObject{{Color(1), Shape(1)}, Location(2, 1)}); }) ==
        ErrorCode::LocationOccupied);
  CHECK(one.size() == 1);

  StimulusGrid full;
  for (int cell = 0; cell < kCellCount; ++cell) {
    const std::size_t before = full.size();
    full = grid_insert(full, SceneObject{ObjectKind::from_index(cell), Location::from_cell(cell)});
    CHECK(full.size() == before + 1);
  }
  CHECK(full.size() == 100);
  CHECK(full.free_cells() == 0);
  CHECK(full.objects().size() == 100);
}

TEST_CASE("grid remove and row-major listing") {
  StimulusGrid g;
  g.insert({{Color(3), Shape(4)}, Location(5, 2)});
  g.insert({{Color(1), Shape(2)}, Location(9, 0)});
  const auto objects = g.objects();
  REQUIRE(objects.size() == 2);
  CHECK(objects[0].location == Location(9, 0));
  CHECK(objects[1].location == Location(5, 2));
  CHECK(g.remove(Location(9, 0)) == ObjectKind{Color(1), Shape(2)});
  CHECK_FALSE(g.remove(Location(9, 0)).has_value());
  CHECK(g.size() == 1);
}

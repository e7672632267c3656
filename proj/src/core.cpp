#include "gcog/core.hpp"

#include "gcog/errors.hpp"

namespace gcog {

namespace {

constexpr std::array<std::string_view, kColorCount> kColorNames = {
    "red", "orange", "yellow", "green", "blue", "purple", "pink", "brown", "white", "gray",
};

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

Shape::Shape(int index) {
  if (index < 0 || index >= kShapeCount) {
    throw Error(ErrorCode::OutOfRange, "shape index " + std::to_string(index));
  }
  index_ = static_cast<std::uint8_t>(index);
}

Shape Shape::from_letter(char letter) {
  if (letter < 'a' || letter > 'z') {
    throw Error(ErrorCode::OutOfRange, std::string("shape letter '") + letter + "'");
  }
  return Shape(letter - 'a');
}

Color::Color(int index) {
  if (index < 0 || index >= kColorCount) {
    throw Error(ErrorCode::OutOfRange, "color index " + std::to_string(index));
  }
  index_ = static_cast<std::uint8_t>(index);
}

Color Color::from_name(std::string_view name) {
  for (int i = 0; i < kColorCount; ++i) {
    if (kColorNames[i] == name) {
      return Color(i);
    }
  }
  throw Error(ErrorCode::OutOfRange, "unknown color '" + std::string(name) + "'");
}

std::string_view Color::name() const { return kColorNames[index_]; }

const std::array<std::string_view, kColorCount>& color_names() { return kColorNames; }

Location::Location(int x, int y) {
  if (x < 0 || x >= kGridSide || y < 0 || y >= kGridSide) {
    throw Error(ErrorCode::OutOfRange,
                "location (" + std::to_string(x) + "," + std::to_string(y) + ")");
  }
  x_ = static_cast<std::uint8_t>(x);
  y_ = static_cast<std::uint8_t>(y);
}

Location Location::from_cell(int cell) {
  if (cell < 0 || cell >= kCellCount) {
    throw Error(ErrorCode::OutOfRange, "cell " + std::to_string(cell));
  }
  return Location(cell % kGridSide, cell / kGridSide);
}

std::string Location::to_string() const {
  return "(" + std::to_string(x_) + "," + std::to_string(y_) + ")";
}

ObjectKind ObjectKind::from_index(int index) {
  if (index < 0 || index >= kObjectKindCount) {
    throw Error(ErrorCode::OutOfRange, "object kind " + std::to_string(index));
  }
  return ObjectKind{Color(index / kShapeCount), Shape(index % kShapeCount)};
}

std::string ObjectKind::to_string() const {
  std::string out(color.name());
  out += ' ';
  out += shape.letter();
  return out;
}

void StimulusGrid::insert(const SceneObject& object) {
  auto& cell = cells_[object.location.cell()];
  if (cell) {
    throw Error(ErrorCode::LocationOccupied,
                "cell " + object.location.to_string() + " holds " + cell->to_string());
  }
  cell = object.kind;
  ++count_;
}

std::optional<ObjectKind> StimulusGrid::remove(Location location) {
  auto& cell = cells_[location.cell()];
  std::optional<ObjectKind> removed;
  removed.swap(cell);
  if (removed) {
    --count_;
  }
  return removed;
}

std::vector<SceneObject> StimulusGrid::objects() const {
  std::vector<SceneObject> out;
  out.reserve(count_);
  for (int cell = 0; cell < kCellCount; ++cell) {
    if (cells_[cell]) {
      out.push_back(SceneObject{*cells_[cell], Location::from_cell(cell)});
    }
  }
  return out;
}

StimulusGrid grid_insert(StimulusGrid grid, const SceneObject& object) {
  grid.insert(object);
  return grid;
}

std::string Answer::to_string() const {
  return std::visit(overloaded{
                        [](bool b) { return std::string(b ? "true" : "false"); },
                        [](Color c) { return std::string(c.name()); },
                        [](Shape s) { return std::string(1, s.letter()); },
                        [](Location l) { return l.to_string(); },
                    },
                    value);
}

OutputClass::OutputClass(int index) {
  if (index < 0 || index >= kClassCount) {
    throw Error(ErrorCode::OutOfRange, "output class " + std::to_string(index));
  }
  index_ = static_cast<std::uint8_t>(index);
}

OutputClass answer_to_class(const Answer& answer) {
  return OutputClass(std::visit(
      overloaded{
          [](bool b) { return b ? kClassTrue : kClassFalse; },
          [](Color c) { return kClassColorBase + c.index(); },
          [](Shape s) { return kClassShapeBase + s.index(); },
          [](Location l) { return kClassLocationBase + l.cell(); },
      },
      answer.value));
}

Answer class_to_answer(OutputClass output) { return class_to_answer(output.index()); }

Answer class_to_answer(int index) {
  if (index < 0 || index >= kClassCount) {
    throw Error(ErrorCode::OutOfRange, "output class " + std::to_string(index));
  }
  if (index < kClassColorBase) {
    return Answer::of(index == kClassTrue);
  }
  if (index < kClassShapeBase) {
    return Answer::of(Color(index - kClassColorBase));
  }
  if (index < kClassLocationBase) {
    return Answer::of(Shape(index - kClassShapeBase));
  }
  return Answer::of(Location::from_cell(index - kClassLocationBase));
}

}  // namespace gcog

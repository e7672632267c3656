#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gcog {

inline constexpr int kShapeCount = 26;
inline constexpr int kColorCount = 10;
inline constexpr int kGridSide = 10;
inline constexpr int kCellCount = kGridSide * kGridSide;
inline constexpr int kObjectKindCount = kShapeCount * kColorCount;

// Output layout: False, True, colors, shapes, locations (row-major).
inline constexpr int kClassFalse = 0;
inline constexpr int kClassTrue = 1;
inline constexpr int kClassColorBase = 2;
inline constexpr int kClassShapeBase = kClassColorBase + kColorCount;
inline constexpr int kClassLocationBase = kClassShapeBase + kShapeCount;
inline constexpr int kClassCount = kClassLocationBase + kCellCount;
static_assert(kClassCount == 138);

/// Letter 'a'..'z'.
class Shape {
 public:
  constexpr Shape() = default;
  explicit Shape(int index);

  static Shape from_letter(char letter);

  constexpr int index() const { return index_; }
  constexpr char letter() const { return static_cast<char>('a' + index_); }

  auto operator<=>(const Shape&) const = default;

 private:
  std::uint8_t index_ = 0;
};

/// One of ten named colors; see color_names().
class Color {
 public:
  constexpr Color() = default;
  explicit Color(int index);

  static Color from_name(std::string_view name);

  constexpr int index() const { return index_; }
  std::string_view name() const;

  auto operator<=>(const Color&) const = default;

 private:
  std::uint8_t index_ = 0;
};

const std::array<std::string_view, kColorCount>& color_names();

/// Grid cell. x is the column, y the row, origin top-left.
class Location {
 public:
  constexpr Location() = default;
  Location(int x, int y);

  static Location from_cell(int cell);

  constexpr int x() const { return x_; }
  constexpr int y() const { return y_; }
  constexpr int cell() const { return y_ * kGridSide + x_; }

  /// "(x,y)"
  std::string to_string() const;

  auto operator<=>(const Location&) const = default;

 private:
  std::uint8_t x_ = 0;
  std::uint8_t y_ = 0;
};

/// A (color, shape) combination, e.g. "red a". Dense index = color * 26 + shape.
struct ObjectKind {
  Color color;
  Shape shape;

  int index() const { return color.index() * kShapeCount + shape.index(); }
  static ObjectKind from_index(int index);

  std::string to_string() const;

  auto operator<=>(const ObjectKind&) const = default;
};

struct SceneObject {
  ObjectKind kind;
  Location location;

  Color color() const { return kind.color; }
  Shape shape() const { return kind.shape; }

  auto operator<=>(const SceneObject&) const = default;
};

/// 10x10 arrangement with at most one object per cell.
class StimulusGrid {
 public:
  /// Throws LocationOccupied if the cell is filled.
  void insert(const SceneObject& object);
  /// Returns the removed object, if any.
  std::optional<ObjectKind> remove(Location location);

  bool occupied(Location location) const { return cells_[location.cell()].has_value(); }
  const std::optional<ObjectKind>& at(Location location) const { return cells_[location.cell()]; }
  const std::optional<ObjectKind>& at_cell(int cell) const { return cells_[cell]; }

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t free_cells() const { return kCellCount - count_; }

  /// Objects in row-major cell order.
  std::vector<SceneObject> objects() const;

  bool operator==(const StimulusGrid&) const = default;

 private:
  std::array<std::optional<ObjectKind>, kCellCount> cells_{};
  std::size_t count_ = 0;
};

StimulusGrid grid_insert(StimulusGrid grid, const SceneObject& object);

enum class AnswerKind { Bool, Color, Shape, Location };

struct Answer {
  std::variant<bool, Color, Shape, Location> value;

  static Answer of(bool truth) { return Answer{truth}; }
  static Answer of(Color color) { return Answer{color}; }
  static Answer of(Shape shape) { return Answer{shape}; }
  static Answer of(Location location) { return Answer{location}; }

  AnswerKind kind() const { return static_cast<AnswerKind>(value.index()); }
  bool is_bool() const { return kind() == AnswerKind::Bool; }

  /// "true", "red", "a", "(2,1)".
  std::string to_string() const;

  bool operator==(const Answer&) const = default;
};

class OutputClass {
 public:
  explicit OutputClass(int index);

  int index() const { return index_; }

  auto operator<=>(const OutputClass&) const = default;

 private:
  std::uint8_t index_ = 0;
};

OutputClass answer_to_class(const Answer& answer);
/// Throws OutOfRange outside 0..137.
Answer class_to_answer(OutputClass output);
Answer class_to_answer(int index);

}  // namespace gcog

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "gcog/core.hpp"
#include "gcog/rng.hpp"

namespace gcog {

enum class OperatorKind : std::uint8_t {
  Exist,
  GetColor,
  GetShape,
  GetLocation,
  SumEven,
  SumOdd,
  ProductEven,
  ProductOdd,
};

inline constexpr int kOperatorCount = 8;

inline constexpr std::array<OperatorKind, kOperatorCount> kAllOperators = {
    OperatorKind::Exist,       OperatorKind::GetColor,   OperatorKind::GetShape,
    OperatorKind::GetLocation, OperatorKind::SumEven,    OperatorKind::SumOdd,
    OperatorKind::ProductEven, OperatorKind::ProductOdd,
};

inline constexpr std::array<OperatorKind, 5> kBooleanOperators = {
    OperatorKind::Exist,  OperatorKind::SumEven,     OperatorKind::SumOdd,
    OperatorKind::ProductEven, OperatorKind::ProductOdd,
};

constexpr bool returns_boolean(OperatorKind op) {
  return op != OperatorKind::GetColor && op != OperatorKind::GetShape &&
         op != OperatorKind::GetLocation;
}

/// Stable identifier used in JSON ("exist", "get_color", ...).
std::string_view operator_name(OperatorKind op);
OperatorKind operator_from_name(std::string_view name);

enum class QueryForm : std::uint8_t { FullObject, ShapeOnly, ColorOnly };

struct FullObject {
  ObjectKind object;
  auto operator<=>(const FullObject&) const = default;
};
struct ShapeOnly {
  Shape shape;
  auto operator<=>(const ShapeOnly&) const = default;
};
struct ColorOnly {
  Color color;
  auto operator<=>(const ColorOnly&) const = default;
};

using ObjectQuery = std::variant<FullObject, ShapeOnly, ColorOnly>;

QueryForm query_form(const ObjectQuery& query);

/// GetColor asks about a shape, GetShape about a color, everything else about a full object.
constexpr QueryForm required_query_form(OperatorKind op) {
  switch (op) {
    case OperatorKind::GetColor: return QueryForm::ShapeOnly;
    case OperatorKind::GetShape: return QueryForm::ColorOnly;
    default: return QueryForm::FullObject;
  }
}

std::optional<Shape> query_shape(const ObjectQuery& query);
std::optional<Color> query_color(const ObjectQuery& query);

struct Leaf {
  OperatorKind op = OperatorKind::Exist;
  ObjectQuery query = FullObject{};

  bool operator==(const Leaf&) const = default;
};

struct TaskNode;
using NodePtr = std::shared_ptr<const TaskNode>;

struct Conditional {
  Leaf condition;
  NodePtr then_branch;
  NodePtr else_branch;

  bool operator==(const Conditional& other) const;
};

struct TaskNode {
  std::variant<Leaf, Conditional> value;

  bool is_leaf() const { return std::holds_alternative<Leaf>(value); }
  const Leaf& leaf() const { return std::get<Leaf>(value); }
  const Conditional& conditional() const { return std::get<Conditional>(value); }

  bool operator==(const TaskNode&) const = default;
};

TaskNode make_leaf(OperatorKind op, ObjectQuery query);
TaskNode make_conditional(Leaf condition, TaskNode then_branch, TaskNode else_branch);

/// depth(Leaf) = 1, depth(Conditional) = 2 + max(depth(then), depth(else)).
int node_depth(const TaskNode& node);
/// Number of node_sequence descriptors spanned by the subtree.
int node_span(const TaskNode& node);

class TaskTree {
 public:
  explicit TaskTree(TaskNode root);
  /// Stores the given depth verbatim; validate() reports a mismatch.
  TaskTree(TaskNode root, int depth);

  const TaskNode& root() const { return root_; }
  int depth() const { return depth_; }

  bool operator==(const TaskTree&) const = default;

 private:
  TaskNode root_;
  int depth_;
};

/// Throws InvalidDepth for even or nonpositive depth.
TaskTree sample_tree(int depth, Rng& rng);
Leaf sample_leaf(Rng& rng);
Leaf sample_boolean_leaf(Rng& rng);

using BigCount = boost::multiprecision::cpp_int;

/// Number of distinct operator-object structures of exactly the given depth.
/// Depths above 3 need allow_recursive, otherwise Unsupported.
BigCount count_task_structures(int depth, bool allow_recursive = false);

/// An (operator, object) pairing; the 8 x 260 command space. For GetColor and
/// GetShape the object also fixes the answer attribute the stimulus will carry.
struct TaskCommand {
  OperatorKind op = OperatorKind::Exist;
  ObjectKind object;

  Leaf leaf() const;
  /// The answer forced by the pairing, for GetColor/GetShape only.
  std::optional<Answer> bound_answer() const;

  int index() const { return static_cast<int>(op) * kObjectKindCount + object.index(); }
  static TaskCommand from_index(int index);

  auto operator<=>(const TaskCommand&) const = default;
};

inline constexpr int kCommandCount = kOperatorCount * kObjectKindCount;

std::vector<TaskCommand> enumerate_commands();
/// All distinct depth-1 trees after projecting commands onto query forms.
std::vector<Leaf> enumerate_leaves();

std::string render_leaf(const Leaf& leaf);
std::string render_instruction(const TaskTree& tree);
/// Throws SyntaxError (with character position) or TypeMismatch.
TaskTree parse_instruction(std::string_view text);

struct RuleNode {
  enum class Kind : std::uint8_t { Operator, Switch };
  Kind kind = Kind::Operator;
  std::optional<Leaf> leaf;

  static RuleNode op(const Leaf& l) { return RuleNode{Kind::Operator, l}; }
  static RuleNode switch_marker() { return RuleNode{Kind::Switch, std::nullopt}; }

  bool operator==(const RuleNode&) const = default;
};

/// Pre-order: condition, SWITCH, then-subtree, else-subtree.
std::vector<RuleNode> node_sequence(const TaskTree& tree);
/// Inverse of node_sequence. Throws SyntaxError on a malformed sequence.
TaskTree tree_from_sequence(std::span<const RuleNode> sequence);

enum class ViolationKind { TypeMismatch, QueryFormMismatch, DepthMismatch, MissingBranch };

struct Violation {
  ViolationKind kind;
  int node_id;  // position in node_sequence
  std::string detail;
};

std::string_view violation_name(ViolationKind kind);
std::vector<Violation> validate(const TaskTree& tree);

nlohmann::json leaf_to_json(const Leaf& leaf);
Leaf leaf_from_json(const nlohmann::json& j);
nlohmann::json tree_to_json(const TaskTree& tree);
TaskTree tree_from_json(const nlohmann::json& j);

}  // namespace gcog

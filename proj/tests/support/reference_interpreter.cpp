#include "reference_interpreter.hpp"

#include <vector>

#include "gcog/errors.hpp"

namespace gcog::testing {

namespace {

struct Cell {
  int x;
  int y;
  int color;
  int shape;
};

std::vector<Cell> scan(const StimulusGrid& grid) {
  std::vector<Cell> cells;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const auto& slot = grid.at(Location(x, y));
      if (slot) cells.push_back({x, y, slot->color.index(), slot->shape.index()});
    }
  }
  return cells;
}

bool matches(const Cell& c, const ObjectQuery& q) {
  if (const auto* full = std::get_if<FullObject>(&q)) {
    return c.color == full->object.color.index() && c.shape == full->object.shape.index();
  }
  if (const auto* shape = std::get_if<ShapeOnly>(&q)) return c.shape == shape->shape.index();
  return c.color == std::get<ColorOnly>(q).color.index();
}

Cell unique_referent(const std::vector<Cell>& cells, const ObjectQuery& q) {
  const Cell* found = nullptr;
  int hits = 0;
  for (const auto& c : cells) {
    if (matches(c, q)) {
      ++hits;
      found = &c;
    }
  }
  if (hits == 0) throw Error(ErrorCode::MissingReferent, "reference: no referent");
  if (hits > 1) throw Error(ErrorCode::AmbiguousStimulus, "reference: several referents");
  return *found;
}

Answer leaf_answer(const Leaf& leaf, const std::vector<Cell>& cells) {
  if (leaf.op == OperatorKind::Exist) {
    int hits = 0;
    for (const auto& c : cells) hits += matches(c, leaf.query) ? 1 : 0;
    if (hits > 1) throw Error(ErrorCode::AmbiguousStimulus, "reference: several referents");
    return Answer::of(hits == 1);
  }
  const Cell c = unique_referent(cells, leaf.query);
  switch (leaf.op) {
    case OperatorKind::GetColor: return Answer::of(Color(c.color));
    case OperatorKind::GetShape: return Answer::of(Shape(c.shape));
    case OperatorKind::GetLocation: return Answer::of(Location(c.x, c.y));
    case OperatorKind::SumEven: return Answer::of((c.x + c.y) % 2 == 0);
    case OperatorKind::SumOdd: return Answer::of((c.x + c.y) % 2 == 1);
    case OperatorKind::ProductEven: return Answer::of((c.x * c.y) % 2 == 0);
    case OperatorKind::ProductOdd: return Answer::of((c.x * c.y) % 2 == 1);
    case OperatorKind::Exist: break;
  }
  throw Error(ErrorCode::InvalidArgument, "reference: unknown operator");
}

Answer walk(const TaskNode& node, const std::vector<Cell>& cells) {
  if (node.is_leaf()) return leaf_answer(node.leaf(), cells);
  const auto& cond = node.conditional();
  const Answer verdict = leaf_answer(cond.condition, cells);
  if (!std::holds_alternative<bool>(verdict.value)) {
    throw Error(ErrorCode::TypeMismatch, "reference: non-boolean condition");
  }
  return walk(std::get<bool>(verdict.value) ? *cond.then_branch : *cond.else_branch, cells);
}

}  // namespace

Answer brute_force_reference(const TaskTree& tree, const StimulusGrid& grid) {
  return walk(tree.root(), scan(grid));
}

}  // namespace gcog::testing

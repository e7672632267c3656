#include "gcog/interpreter.hpp"

#include <array>

#include "gcog/errors.hpp"

namespace gcog {

namespace {

// Per-grid lookup tables: match counts plus the last matching cell for each feature.
class GridIndex {
 public:
  explicit GridIndex(const StimulusGrid& grid) {
    by_shape_.fill({});
    by_color_.fill({});
    by_kind_.fill({});
    for (int cell = 0; cell < kCellCount; ++cell) {
      const auto& object = grid.at_cell(cell);
      if (!object) continue;
      note(by_shape_[object->shape.index()], cell);
      note(by_color_[object->color.index()], cell);
      note(by_kind_[object->index()], cell);
    }
    cells_ = &grid;
  }

  Answer answer(const Leaf& leaf) const {
    switch (leaf.op) {
      case OperatorKind::Exist: {
        const auto& m = by_kind_[std::get<FullObject>(leaf.query).object.index()];
        if (m.count > 1) ambiguous(leaf, m.count);
        return Answer::of(m.count == 1);
      }
      case OperatorKind::GetColor: {
        const int cell = unique(leaf, by_shape_[std::get<ShapeOnly>(leaf.query).shape.index()]);
        return Answer::of(cells_->at_cell(cell)->color);
      }
      case OperatorKind::GetShape: {
        const int cell = unique(leaf, by_color_[std::get<ColorOnly>(leaf.query).color.index()]);
        return Answer::of(cells_->at_cell(cell)->shape);
      }
      case OperatorKind::GetLocation:
        return Answer::of(Location::from_cell(referent(leaf)));
      case OperatorKind::SumEven:
      case OperatorKind::SumOdd: {
        const auto at = Location::from_cell(referent(leaf));
        const bool even = (at.x() + at.y()) % 2 == 0;
        return Answer::of(leaf.op == OperatorKind::SumEven ? even : !even);
      }
      case OperatorKind::ProductEven:
      case OperatorKind::ProductOdd: {
        const auto at = Location::from_cell(referent(leaf));
        const bool even = (at.x() * at.y()) % 2 == 0;
        return Answer::of(leaf.op == OperatorKind::ProductEven ? even : !even);
      }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown operator");
  }

 private:
  struct Matches {
    int count = 0;
    int cell = -1;
  };

  static void note(Matches& m, int cell) {
    ++m.count;
    m.cell = cell;
  }

  int referent(const Leaf& leaf) const {
    return unique(leaf, by_kind_[std::get<FullObject>(leaf.query).object.index()]);
  }

  static int unique(const Leaf& leaf, const Matches& m) {
    if (m.count == 0) {
      throw Error(ErrorCode::MissingReferent, "no referent for '" + render_leaf(leaf) + "'");
    }
    if (m.count > 1) ambiguous(leaf, m.count);
    return m.cell;
  }

  [[noreturn]] static void ambiguous(const Leaf& leaf, int count) {
    throw Error(ErrorCode::AmbiguousStimulus,
                std::to_string(count) + " referents for '" + render_leaf(leaf) + "'");
  }

  std::array<Matches, kShapeCount> by_shape_;
  std::array<Matches, kColorCount> by_color_;
  std::array<Matches, kObjectKindCount> by_kind_;
  const StimulusGrid* cells_ = nullptr;
};

void require_form(const Leaf& leaf) {
  if (query_form(leaf.query) != required_query_form(leaf.op)) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(operator_name(leaf.op)) + " paired with the wrong query form");
  }
}

}  // namespace

Answer eval_leaf(const Leaf& leaf, const StimulusGrid& grid) {
  require_form(leaf);
  return GridIndex(grid).answer(leaf);
}

Evaluation evaluate(const TaskTree& tree, const StimulusGrid& grid) {
  const GridIndex index(grid);
  ExecutedPath path;
  const TaskNode* node = &tree.root();
  int position = 0;
  while (!node->is_leaf()) {
    const auto& cond = node->conditional();
    require_form(cond.condition);
    const Answer verdict = index.answer(cond.condition);
    if (!verdict.is_bool()) {
      throw Error(ErrorCode::TypeMismatch, "condition did not produce a boolean");
    }
    const bool outcome = std::get<bool>(verdict.value);
    path.decisions.push_back(Decision{position, outcome});
    if (outcome) {
      position += 2;
      node = cond.then_branch.get();
    } else {
      position += 2 + node_span(*cond.then_branch);
      node = cond.else_branch.get();
    }
  }
  require_form(node->leaf());
  path.terminal_leaf = position;
  return Evaluation{index.answer(node->leaf()), std::move(path)};
}

}  // namespace gcog

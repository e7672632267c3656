#include "gcog/forge.hpp"

#include <algorithm>

#include "gcog/errors.hpp"

namespace gcog {

namespace {

struct PathStep {
  Leaf leaf;
  Answer outcome;
};

// Walks the tree along the path. Returns on-path nodes root-down, the target leaf last.
std::vector<PathStep> path_steps(const TaskTree& tree, const TaskPath& path) {
  std::vector<PathStep> steps;
  const TaskNode* node = &tree.root();
  int position = 0;
  std::size_t next_decision = 0;
  while (!node->is_leaf()) {
    if (next_decision >= path.decisions.size() || path.decisions[next_decision].node_id != position) {
      throw Error(ErrorCode::InvalidArgument, "path does not follow the tree's conditionals");
    }
    const auto& cond = node->conditional();
    const bool outcome = path.decisions[next_decision++].outcome;
    steps.push_back(PathStep{cond.condition, Answer::of(outcome)});
    if (outcome) {
      position += 2;
      node = cond.then_branch.get();
    } else {
      position += 2 + node_span(*cond.then_branch);
      node = cond.else_branch.get();
    }
  }
  if (next_decision != path.decisions.size() || position != path.target_leaf) {
    throw Error(ErrorCode::InvalidArgument, "path does not end at its target leaf");
  }
  const Leaf& leaf = node->leaf();
  const bool bool_target = path.target.is_bool();
  const bool kind_ok =
      returns_boolean(leaf.op)
          ? bool_target
          : (leaf.op == OperatorKind::GetColor && path.target.kind() == AnswerKind::Color) ||
                (leaf.op == OperatorKind::GetShape && path.target.kind() == AnswerKind::Shape) ||
                (leaf.op == OperatorKind::GetLocation && path.target.kind() == AnswerKind::Location);
  if (!kind_ok) {
    throw Error(ErrorCode::InvalidArgument, "target answer type does not match " + render_leaf(leaf));
  }
  steps.push_back(PathStep{leaf, path.target});
  return steps;
}

void collect_reservations(const TaskNode& node, std::bitset<kShapeCount>& shapes,
                          std::bitset<kColorCount>& colors, std::bitset<kObjectKindCount>& objects) {
  auto reserve = [&](const Leaf& leaf) {
    if (auto* full = std::get_if<FullObject>(&leaf.query)) {
      objects.set(full->object.index());
    } else if (auto* shape = std::get_if<ShapeOnly>(&leaf.query)) {
      shapes.set(shape->shape.index());
    } else {
      colors.set(std::get<ColorOnly>(leaf.query).color.index());
    }
  };
  if (node.is_leaf()) {
    reserve(node.leaf());
    return;
  }
  const auto& cond = node.conditional();
  reserve(cond.condition);
  collect_reservations(*cond.then_branch, shapes, colors, objects);
  collect_reservations(*cond.else_branch, shapes, colors, objects);
}

bool parity_holds(OperatorKind op, bool outcome, Location at) {
  const int sum = at.x() + at.y();
  const int product = at.x() * at.y();
  switch (op) {
    case OperatorKind::SumEven: return (sum % 2 == 0) == outcome;
    case OperatorKind::SumOdd: return (sum % 2 == 1) == outcome;
    case OperatorKind::ProductEven: return (product % 2 == 0) == outcome;
    case OperatorKind::ProductOdd: return (product % 2 == 1) == outcome;
    default: return true;
  }
}

struct Requirement {
  ObjectKind object;
  std::optional<Location> fixed;
  std::vector<std::pair<OperatorKind, bool>> parity;
};

// Objects the path needs, in bottom-up order of first mention.
std::vector<Requirement> requirements(const std::vector<PathStep>& steps) {
  std::vector<Requirement> out;
  auto need = [&](ObjectKind object) -> Requirement& {
    for (auto& r : out) {
      if (r.object == object) return r;
    }
    out.push_back(Requirement{object, std::nullopt, {}});
    return out.back();
  };
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const Leaf& leaf = it->leaf;
    const Answer& outcome = it->outcome;
    switch (leaf.op) {
      case OperatorKind::Exist:
        if (std::get<bool>(outcome.value)) need(std::get<FullObject>(leaf.query).object);
        break;
      case OperatorKind::GetColor:
        need(ObjectKind{std::get<Color>(outcome.value), std::get<ShapeOnly>(leaf.query).shape});
        break;
      case OperatorKind::GetShape:
        need(ObjectKind{std::get<ColorOnly>(leaf.query).color, std::get<Shape>(outcome.value)});
        break;
      case OperatorKind::GetLocation: {
        Requirement& r = need(std::get<FullObject>(leaf.query).object);
        const auto at = std::get<Location>(outcome.value);
        if (r.fixed && *r.fixed != at) {
          throw Error(ErrorCode::ConstraintConflict, "object pinned to two locations");
        }
        r.fixed = at;
        break;
      }
      default:
        need(std::get<FullObject>(leaf.query).object)
            .parity.emplace_back(leaf.op, std::get<bool>(outcome.value));
        break;
    }
  }
  return out;
}

std::optional<SynthesisResult> try_synthesize(const TaskTree& tree, const TaskPath& path,
                                              const std::vector<PathStep>& steps,
                                              const std::vector<Requirement>& needed,
                                              const ConstraintRegistry& registry,
                                              int n_distractors, Rng& rng) {
  StimulusGrid grid;
  FeatureCounts counts;
  std::vector<int> cells;
  cells.reserve(kCellCount);

  for (const auto& req : needed) {
    if (registry.forbidden_objects().test(req.object.index()) || !registry.admits(counts, req.object)) {
      return std::nullopt;
    }
    cells.clear();
    for (int cell = 0; cell < kCellCount; ++cell) {
      const auto at = Location::from_cell(cell);
      if (grid.occupied(at)) continue;
      if (req.fixed && *req.fixed != at) continue;
      const bool parity_ok = std::all_of(req.parity.begin(), req.parity.end(), [&](const auto& p) {
        return parity_holds(p.first, p.second, at);
      });
      if (parity_ok) cells.push_back(cell);
    }
    if (cells.empty()) return std::nullopt;
    const int cell = cells[rng.below(cells.size())];
    grid.insert(SceneObject{req.object, Location::from_cell(cell)});
    counts.add(req.object);
  }

  std::vector<int> legal;
  legal.reserve(kObjectKindCount);
  for (int i = 0; i < n_distractors; ++i) {
    legal.clear();
    for (int k = 0; k < kObjectKindCount; ++k) {
      if (registry.admits(counts, ObjectKind::from_index(k))) legal.push_back(k);
    }
    if (legal.empty()) return std::nullopt;
    const auto object = ObjectKind::from_index(legal[rng.below(legal.size())]);
    cells.clear();
    for (int cell = 0; cell < kCellCount; ++cell) {
      if (!grid.at_cell(cell)) cells.push_back(cell);
    }
    const int cell = cells[rng.below(cells.size())];
    grid.insert(SceneObject{object, Location::from_cell(cell)});
    counts.add(object);
  }

  // Generation-time self-check against the interpreter.
  try {
    const Evaluation result = evaluate(tree, grid);
    if (!(result.answer == steps.back().outcome) || result.path.decisions != path.decisions ||
        result.path.terminal_leaf != path.target_leaf) {
      return std::nullopt;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return SynthesisResult{std::move(grid), path.target, n_distractors,
                         static_cast<int>(needed.size()), path};
}

}  // namespace

TaskPath sample_path(const TaskTree& tree, Rng& rng) {
  TaskPath path;
  const TaskNode* node = &tree.root();
  int position = 0;
  while (!node->is_leaf()) {
    const auto& cond = node->conditional();
    const bool outcome = rng.coin();
    path.decisions.push_back(Decision{position, outcome});
    if (outcome) {
      position += 2;
      node = cond.then_branch.get();
    } else {
      position += 2 + node_span(*cond.then_branch);
      node = cond.else_branch.get();
    }
  }
  path.target_leaf = position;
  switch (node->leaf().op) {
    case OperatorKind::GetColor:
      path.target = Answer::of(Color(static_cast<int>(rng.below(kColorCount))));
      break;
    case OperatorKind::GetShape:
      path.target = Answer::of(Shape(static_cast<int>(rng.below(kShapeCount))));
      break;
    case OperatorKind::GetLocation:
      path.target = Answer::of(Location::from_cell(static_cast<int>(rng.below(kCellCount))));
      break;
    default:
      path.target = Answer::of(rng.coin());
      break;
  }
  return path;
}

void FeatureCounts::add(ObjectKind object) {
  ++shape[object.shape.index()];
  ++color[object.color.index()];
  ++kind[object.index()];
}

FeatureCounts FeatureCounts::of(const StimulusGrid& grid) {
  FeatureCounts counts;
  for (int cell = 0; cell < kCellCount; ++cell) {
    if (const auto& object = grid.at_cell(cell)) counts.add(*object);
  }
  return counts;
}

ConstraintRegistry::ConstraintRegistry(const TaskTree& tree, const TaskPath& path) {
  collect_reservations(tree.root(), reserved_shapes_, reserved_colors_, reserved_objects_);
  for (const auto& step : path_steps(tree, path)) {
    if (step.leaf.op == OperatorKind::Exist && !std::get<bool>(step.outcome.value)) {
      forbidden_objects_.set(std::get<FullObject>(step.leaf.query).object.index());
    }
  }
}

bool ConstraintRegistry::admits(const FeatureCounts& counts, ObjectKind object) const {
  if (forbidden_objects_.test(object.index())) return false;
  if (reserved_objects_.test(object.index()) && counts.kind[object.index()] > 0) return false;
  if (reserved_shapes_.test(object.shape.index()) && counts.shape[object.shape.index()] > 0) return false;
  if (reserved_colors_.test(object.color.index()) && counts.color[object.color.index()] > 0) return false;
  return true;
}

std::vector<std::string> ConstraintRegistry::violations(const StimulusGrid& grid) const {
  const auto counts = FeatureCounts::of(grid);
  std::vector<std::string> out;
  for (int s = 0; s < kShapeCount; ++s) {
    if (reserved_shapes_.test(s) && counts.shape[s] > 1) {
      out.push_back("shape '" + std::string(1, Shape(s).letter()) + "' appears " +
                    std::to_string(counts.shape[s]) + " times");
    }
  }
  for (int c = 0; c < kColorCount; ++c) {
    if (reserved_colors_.test(c) && counts.color[c] > 1) {
      out.push_back("color " + std::string(Color(c).name()) + " appears " +
                    std::to_string(counts.color[c]) + " times");
    }
  }
  for (int k = 0; k < kObjectKindCount; ++k) {
    if (reserved_objects_.test(k) && counts.kind[k] > 1) {
      out.push_back(ObjectKind::from_index(k).to_string() + " appears " + std::to_string(counts.kind[k]) +
                    " times");
    }
    if (forbidden_objects_.test(k) && counts.kind[k] > 0) {
      out.push_back(ObjectKind::from_index(k).to_string() + " must be absent");
    }
  }
  return out;
}

SynthesisResult synthesize(const TaskTree& tree, const TaskPath& path, int n_distractors, Rng& rng) {
  if (n_distractors < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative distractor count");
  }
  const auto steps = path_steps(tree, path);
  const ConstraintRegistry registry(tree, path);
  std::vector<Requirement> needed;
  try {
    needed = requirements(steps);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConstraintConflict) throw;
    throw Error(ErrorCode::ConstraintConflict, std::string(e.what()) + " for '" + render_instruction(tree) + "'");
  }
  if (static_cast<int>(needed.size()) + n_distractors > kCellCount) {
    throw Error(ErrorCode::GridFull, std::to_string(needed.size()) + " required objects plus " +
                                         std::to_string(n_distractors) + " distractors exceed " +
                                         std::to_string(kCellCount) + " cells");
  }
  for (int attempt = 0; attempt < kMaxSynthesisAttempts; ++attempt) {
    if (auto result = try_synthesize(tree, path, steps, needed, registry, n_distractors, rng)) {
      return std::move(*result);
    }
  }
  throw Error(ErrorCode::ConstraintConflict,
              "no consistent stimulus after " + std::to_string(kMaxSynthesisAttempts) + " attempts for '" +
                  render_instruction(tree) + "'");
}

SynthesisResult generate_sample(const TaskTree& tree, int n_distractors, Rng& rng,
                                const std::optional<Answer>& target_override) {
  if (n_distractors < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative distractor count");
  }
  bool all_full = true;
  for (int attempt = 0; attempt < kMaxSynthesisAttempts; ++attempt) {
    TaskPath path = sample_path(tree, rng);
    if (target_override && target_override->kind() == path.target.kind()) {
      path.target = *target_override;
    }
    const auto steps = path_steps(tree, path);
    std::vector<Requirement> needed;
    try {
      needed = requirements(steps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstraintConflict) throw;
      all_full = false;
      continue;
    }
    if (static_cast<int>(needed.size()) + n_distractors > kCellCount) {
      continue;
    }
    all_full = false;
    const ConstraintRegistry registry(tree, path);
    if (auto result = try_synthesize(tree, path, steps, needed, registry, n_distractors, rng)) {
      return std::move(*result);
    }
  }
  if (all_full) {
    throw Error(ErrorCode::GridFull,
                std::to_string(n_distractors) + " distractors do not fit '" + render_instruction(tree) + "'");
  }
  throw Error(ErrorCode::ConstraintConflict,
              "no consistent stimulus after " + std::to_string(kMaxSynthesisAttempts) + " attempts for '" +
                  render_instruction(tree) + "'");
}

bool verify_sample(const TaskTree& tree, const StimulusGrid& grid, const Answer& expected) {
  try {
    return evaluate(tree, grid).answer == expected;
  } catch (const Error&) {
    return false;
  }
}

std::vector<std::string> constraint_violations(const TaskTree& tree, const StimulusGrid& grid) {
  std::bitset<kShapeCount> shapes;
  std::bitset<kColorCount> colors;
  std::bitset<kObjectKindCount> objects;
  collect_reservations(tree.root(), shapes, colors, objects);
  const auto counts = FeatureCounts::of(grid);
  std::vector<std::string> out;
  for (int s = 0; s < kShapeCount; ++s) {
    if (shapes.test(s) && counts.shape[s] > 1) out.push_back("shape '" + std::string(1, Shape(s).letter()) + "' repeated");
  }
  for (int c = 0; c < kColorCount; ++c) {
    if (colors.test(c) && counts.color[c] > 1) out.push_back("color " + std::string(Color(c).name()) + " repeated");
  }
  for (int k = 0; k < kObjectKindCount; ++k) {
    if (objects.test(k) && counts.kind[k] > 1) out.push_back(ObjectKind::from_index(k).to_string() + " repeated");
  }
  return out;
}

}  // namespace gcog

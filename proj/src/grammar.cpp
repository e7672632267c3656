#include "gcog/grammar.hpp"

#include <algorithm>
#include <cctype>

#include "gcog/errors.hpp"

namespace gcog {

namespace {

constexpr std::array<std::string_view, kOperatorCount> kOperatorNames = {
    "exist", "get_color", "get_shape", "get_location",
    "sum_even", "sum_odd", "product_even", "product_odd",
};

ObjectQuery query_for(OperatorKind op, ObjectKind object) {
  switch (required_query_form(op)) {
    case QueryForm::ShapeOnly: return ShapeOnly{object.shape};
    case QueryForm::ColorOnly: return ColorOnly{object.color};
    case QueryForm::FullObject: break;
  }
  return FullObject{object};
}

ObjectQuery sample_query(QueryForm form, Rng& rng) {
  switch (form) {
    case QueryForm::ShapeOnly: return ShapeOnly{Shape(static_cast<int>(rng.below(kShapeCount)))};
    case QueryForm::ColorOnly: return ColorOnly{Color(static_cast<int>(rng.below(kColorCount)))};
    case QueryForm::FullObject: break;
  }
  return FullObject{ObjectKind::from_index(static_cast<int>(rng.below(kObjectKindCount)))};
}

TaskNode sample_node(int depth, Rng& rng) {
  if (depth == 1) {
    return TaskNode{sample_leaf(rng)};
  }
  Leaf condition = sample_boolean_leaf(rng);
  // One branch carries the full remaining depth; the other takes any smaller odd depth.
  const int forced = depth - 2;
  const int other = 1 + 2 * static_cast<int>(rng.below(static_cast<std::uint64_t>(forced + 1) / 2));
  const bool forced_is_then = rng.coin();
  TaskNode first = sample_node(forced_is_then ? forced : other, rng);
  TaskNode second = sample_node(forced_is_then ? other : forced, rng);
  return make_conditional(std::move(condition), std::move(first), std::move(second));
}

void check_depth(int depth) {
  if (depth < 1 || depth % 2 == 0) {
    throw Error(ErrorCode::InvalidDepth, "depth must be odd and positive, got " + std::to_string(depth));
  }
}

}  // namespace

std::string_view operator_name(OperatorKind op) { return kOperatorNames[static_cast<int>(op)]; }

OperatorKind operator_from_name(std::string_view name) {
  for (int i = 0; i < kOperatorCount; ++i) {
    if (kOperatorNames[i] == name) {
      return static_cast<OperatorKind>(i);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown operator '" + std::string(name) + "'");
}

QueryForm query_form(const ObjectQuery& query) { return static_cast<QueryForm>(query.index()); }

std::optional<Shape> query_shape(const ObjectQuery& query) {
  if (auto* full = std::get_if<FullObject>(&query)) return full->object.shape;
  if (auto* shape = std::get_if<ShapeOnly>(&query)) return shape->shape;
  return std::nullopt;
}

std::optional<Color> query_color(const ObjectQuery& query) {
  if (auto* full = std::get_if<FullObject>(&query)) return full->object.color;
  if (auto* color = std::get_if<ColorOnly>(&query)) return color->color;
  return std::nullopt;
}

bool Conditional::operator==(const Conditional& other) const {
  auto same = [](const NodePtr& a, const NodePtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return *a == *b;
  };
  return condition == other.condition && same(then_branch, other.then_branch) &&
         same(else_branch, other.else_branch);
}

TaskNode make_leaf(OperatorKind op, ObjectQuery query) { return TaskNode{Leaf{op, query}}; }

TaskNode make_conditional(Leaf condition, TaskNode then_branch, TaskNode else_branch) {
  return TaskNode{Conditional{std::move(condition),
                              std::make_shared<const TaskNode>(std::move(then_branch)),
                              std::make_shared<const TaskNode>(std::move(else_branch))}};
}

int node_depth(const TaskNode& node) {
  if (node.is_leaf()) return 1;
  const auto& cond = node.conditional();
  const int then_depth = cond.then_branch ? node_depth(*cond.then_branch) : 0;
  const int else_depth = cond.else_branch ? node_depth(*cond.else_branch) : 0;
  return 2 + std::max(then_depth, else_depth);
}

int node_span(const TaskNode& node) {
  if (node.is_leaf()) return 1;
  const auto& cond = node.conditional();
  return 2 + (cond.then_branch ? node_span(*cond.then_branch) : 0) +
         (cond.else_branch ? node_span(*cond.else_branch) : 0);
}

TaskTree::TaskTree(TaskNode root) : root_(std::move(root)), depth_(node_depth(root_)) {}

TaskTree::TaskTree(TaskNode root, int depth) : root_(std::move(root)), depth_(depth) {}

Leaf sample_leaf(Rng& rng) {
  const auto op = kAllOperators[rng.below(kOperatorCount)];
  return Leaf{op, sample_query(required_query_form(op), rng)};
}

Leaf sample_boolean_leaf(Rng& rng) {
  const auto op = kBooleanOperators[rng.below(kBooleanOperators.size())];
  return Leaf{op, sample_query(QueryForm::FullObject, rng)};
}

TaskTree sample_tree(int depth, Rng& rng) {
  check_depth(depth);
  return TaskTree(sample_node(depth, rng));
}

BigCount count_task_structures(int depth, bool allow_recursive) {
  check_depth(depth);
  if (depth > 3 && !allow_recursive) {
    throw Error(ErrorCode::Unsupported,
                "closed-form count for depth " + std::to_string(depth) + " needs the recursive form");
  }
  const BigCount leaves = kOperatorCount * kObjectKindCount;
  const BigCount conditions = static_cast<int>(kBooleanOperators.size()) * kObjectKindCount;
  // exact[d] counts trees of exactly depth d; at_most[d] is its running sum.
  BigCount exact = leaves;
  BigCount at_most = leaves;
  BigCount at_most_prev = 0;
  for (int d = 3; d <= depth; d += 2) {
    exact = conditions * (at_most * at_most - at_most_prev * at_most_prev);
    at_most_prev = at_most;
    at_most += exact;
  }
  return exact;
}

Leaf TaskCommand::leaf() const { return Leaf{op, query_for(op, object)}; }

std::optional<Answer> TaskCommand::bound_answer() const {
  if (op == OperatorKind::GetColor) return Answer::of(object.color);
  if (op == OperatorKind::GetShape) return Answer::of(object.shape);
  return std::nullopt;
}

TaskCommand TaskCommand::from_index(int index) {
  if (index < 0 || index >= kCommandCount) {
    throw Error(ErrorCode::OutOfRange, "command index " + std::to_string(index));
  }
  return TaskCommand{static_cast<OperatorKind>(index / kObjectKindCount),
                     ObjectKind::from_index(index % kObjectKindCount)};
}

std::vector<TaskCommand> enumerate_commands() {
  std::vector<TaskCommand> out;
  out.reserve(kCommandCount);
  for (int i = 0; i < kCommandCount; ++i) {
    out.push_back(TaskCommand::from_index(i));
  }
  return out;
}

std::vector<Leaf> enumerate_leaves() {
  std::vector<Leaf> out;
  for (auto op : kAllOperators) {
    switch (required_query_form(op)) {
      case QueryForm::FullObject:
        for (int k = 0; k < kObjectKindCount; ++k) out.push_back(Leaf{op, FullObject{ObjectKind::from_index(k)}});
        break;
      case QueryForm::ShapeOnly:
        for (int s = 0; s < kShapeCount; ++s) out.push_back(Leaf{op, ShapeOnly{Shape(s)}});
        break;
      case QueryForm::ColorOnly:
        for (int c = 0; c < kColorCount; ++c) out.push_back(Leaf{op, ColorOnly{Color(c)}});
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instruction text

namespace {

std::string full_phrase(const ObjectQuery& query) {
  if (auto* full = std::get_if<FullObject>(&query)) return full->object.to_string();
  if (auto* shape = std::get_if<ShapeOnly>(&query)) return std::string(1, shape->shape.letter());
  return std::string(std::get<ColorOnly>(query).color.name()) + " object";
}

void render_node(const TaskNode& node, std::string& out) {
  if (node.is_leaf()) {
    out += render_leaf(node.leaf());
    return;
  }
  const auto& cond = node.conditional();
  out += "if ";
  out += render_leaf(cond.condition);
  out += " then ";
  render_node(*cond.then_branch, out);
  out += " else ";
  render_node(*cond.else_branch, out);
}

struct Token {
  std::string_view text;
  std::size_t position;
};

class InstructionParser {
 public:
  explicit InstructionParser(std::string_view text) : text_(text) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      const std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i > start) tokens_.push_back(Token{text.substr(start, i - start), start});
    }
  }

  TaskTree parse() {
    TaskNode root = parse_node();
    if (cursor_ != tokens_.size()) {
      fail("unexpected trailing token '" + std::string(peek().text) + "'");
    }
    return TaskTree(std::move(root));
  }

 private:
  TaskNode parse_node() {
    if (at("if")) {
      ++cursor_;
      const std::size_t condition_position = current_position();
      Leaf condition = parse_leaf();
      if (!returns_boolean(condition.op)) {
        throw Error(ErrorCode::TypeMismatch,
                    std::string(operator_name(condition.op)) + " cannot be a condition",
                    condition_position);
      }
      expect("then");
      TaskNode then_branch = parse_node();
      expect("else");
      TaskNode else_branch = parse_node();
      return make_conditional(std::move(condition), std::move(then_branch), std::move(else_branch));
    }
    return TaskNode{parse_leaf()};
  }

  Leaf parse_leaf() {
    if (at("exist")) {
      ++cursor_;
      Leaf leaf{OperatorKind::Exist, FullObject{parse_object()}};
      expect("?");
      return leaf;
    }
    if (at("get")) {
      ++cursor_;
      if (at("color")) {
        ++cursor_;
        expect("of");
        return Leaf{OperatorKind::GetColor, ShapeOnly{parse_shape()}};
      }
      if (at("shape")) {
        ++cursor_;
        expect("of");
        Color color = parse_color();
        expect("object");
        return Leaf{OperatorKind::GetShape, ColorOnly{color}};
      }
      if (at("location")) {
        ++cursor_;
        expect("of");
        return Leaf{OperatorKind::GetLocation, FullObject{parse_object()}};
      }
      fail("expected 'color', 'shape' or 'location' after 'get'");
    }
    if (at("sum") || at("product")) {
      const bool sum = at("sum");
      ++cursor_;
      bool even = false;
      if (at("even")) {
        even = true;
      } else if (!at("odd")) {
        fail("expected 'even' or 'odd'");
      }
      ++cursor_;
      const OperatorKind op = sum ? (even ? OperatorKind::SumEven : OperatorKind::SumOdd)
                                  : (even ? OperatorKind::ProductEven : OperatorKind::ProductOdd);
      Leaf leaf{op, FullObject{parse_object()}};
      expect("?");
      return leaf;
    }
    fail(cursor_ < tokens_.size() ? "expected an operator, got '" + std::string(peek().text) + "'"
                                  : "expected an operator, got end of input");
  }

  ObjectKind parse_object() {
    Color color = parse_color();
    return ObjectKind{color, parse_shape()};
  }

  Color parse_color() {
    require_token("a color");
    for (int i = 0; i < kColorCount; ++i) {
      if (color_names()[i] == peek().text) {
        ++cursor_;
        return Color(i);
      }
    }
    fail("expected a color, got '" + std::string(peek().text) + "'");
  }

  Shape parse_shape() {
    require_token("a shape letter");
    const auto text = peek().text;
    if (text.size() != 1 || text[0] < 'a' || text[0] > 'z') {
      fail("expected a shape letter, got '" + std::string(text) + "'");
    }
    ++cursor_;
    return Shape::from_letter(text[0]);
  }

  bool at(std::string_view word) const {
    return cursor_ < tokens_.size() && tokens_[cursor_].text == word;
  }

  void expect(std::string_view word) {
    if (!at(word)) {
      fail(cursor_ < tokens_.size()
               ? "expected '" + std::string(word) + "', got '" + std::string(peek().text) + "'"
               : "expected '" + std::string(word) + "', got end of input");
    }
    ++cursor_;
  }

  void require_token(std::string_view what) {
    if (cursor_ >= tokens_.size()) fail("expected " + std::string(what) + ", got end of input");
  }

  const Token& peek() const { return tokens_[cursor_]; }

  std::size_t current_position() const {
    return cursor_ < tokens_.size() ? tokens_[cursor_].position : text_.size();
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::SyntaxError, message, current_position());
  }

  std::string_view text_;
  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
};

}  // namespace

std::string render_leaf(const Leaf& leaf) {
  const std::string object = full_phrase(leaf.query);
  switch (leaf.op) {
    case OperatorKind::Exist: return "exist " + object + " ?";
    case OperatorKind::GetColor: return "get color of " + object;
    case OperatorKind::GetShape: return "get shape of " + object;
    case OperatorKind::GetLocation: return "get location of " + object;
    case OperatorKind::SumEven: return "sum even " + object + " ?";
    case OperatorKind::SumOdd: return "sum odd " + object + " ?";
    case OperatorKind::ProductEven: return "product even " + object + " ?";
    case OperatorKind::ProductOdd: return "product odd " + object + " ?";
  }
  return {};
}

std::string render_instruction(const TaskTree& tree) {
  std::string out;
  render_node(tree.root(), out);
  return out;
}

TaskTree parse_instruction(std::string_view text) { return InstructionParser(text).parse(); }

// ---------------------------------------------------------------------------
// Node sequence

namespace {

void flatten(const TaskNode& node, std::vector<RuleNode>& out) {
  if (node.is_leaf()) {
    out.push_back(RuleNode::op(node.leaf()));
    return;
  }
  const auto& cond = node.conditional();
  out.push_back(RuleNode::op(cond.condition));
  out.push_back(RuleNode::switch_marker());
  flatten(*cond.then_branch, out);
  flatten(*cond.else_branch, out);
}

TaskNode rebuild(std::span<const RuleNode> seq, std::size_t& cursor) {
  if (cursor >= seq.size()) {
    throw Error(ErrorCode::SyntaxError, "sequence ends inside a conditional", cursor);
  }
  const RuleNode& head = seq[cursor];
  if (head.kind != RuleNode::Kind::Operator || !head.leaf) {
    throw Error(ErrorCode::SyntaxError, "expected an operator descriptor", cursor);
  }
  ++cursor;
  if (cursor < seq.size() && seq[cursor].kind == RuleNode::Kind::Switch) {
    ++cursor;
    TaskNode then_branch = rebuild(seq, cursor);
    TaskNode else_branch = rebuild(seq, cursor);
    return make_conditional(*head.leaf, std::move(then_branch), std::move(else_branch));
  }
  return TaskNode{*head.leaf};
}

void check_node(const TaskNode& node, int position, std::vector<Violation>& out) {
  auto check_form = [&](const Leaf& leaf, int id) {
    if (query_form(leaf.query) != required_query_form(leaf.op)) {
      out.push_back(Violation{ViolationKind::QueryFormMismatch, id,
                              std::string(operator_name(leaf.op)) + " paired with the wrong query form"});
    }
  };
  if (node.is_leaf()) {
    check_form(node.leaf(), position);
    return;
  }
  const auto& cond = node.conditional();
  check_form(cond.condition, position);
  if (!returns_boolean(cond.condition.op)) {
    out.push_back(Violation{ViolationKind::TypeMismatch, position,
                            std::string(operator_name(cond.condition.op)) + " does not return a boolean"});
  }
  int next = position + 2;
  for (const NodePtr* branch : {&cond.then_branch, &cond.else_branch}) {
    if (!*branch) {
      out.push_back(Violation{ViolationKind::MissingBranch, position, "conditional branch is empty"});
      continue;
    }
    check_node(**branch, next, out);
    next += node_span(**branch);
  }
}

}  // namespace

std::vector<RuleNode> node_sequence(const TaskTree& tree) {
  std::vector<RuleNode> out;
  flatten(tree.root(), out);
  return out;
}

TaskTree tree_from_sequence(std::span<const RuleNode> sequence) {
  std::size_t cursor = 0;
  TaskNode root = rebuild(sequence, cursor);
  if (cursor != sequence.size()) {
    throw Error(ErrorCode::SyntaxError, "trailing descriptors after a complete tree", cursor);
  }
  return TaskTree(std::move(root));
}

std::string_view violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::TypeMismatch: return "TypeMismatch";
    case ViolationKind::QueryFormMismatch: return "QueryFormMismatch";
    case ViolationKind::DepthMismatch: return "DepthMismatch";
    case ViolationKind::MissingBranch: return "MissingBranch";
  }
  return "Unknown";
}

std::vector<Violation> validate(const TaskTree& tree) {
  std::vector<Violation> out;
  check_node(tree.root(), 0, out);
  const int computed = node_depth(tree.root());
  if (computed != tree.depth()) {
    out.push_back(Violation{ViolationKind::DepthMismatch, 0,
                            "stored depth " + std::to_string(tree.depth()) + ", computed " +
                                std::to_string(computed)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json query_to_json(const ObjectQuery& query) {
  nlohmann::json j = nlohmann::json::object();
  if (auto color = query_color(query)) j["color"] = color->name();
  if (auto shape = query_shape(query)) j["shape"] = std::string(1, shape->letter());
  return j;
}

ObjectQuery query_from_json(const nlohmann::json& j) {
  const bool has_color = j.contains("color");
  const bool has_shape = j.contains("shape");
  auto shape = [&] {
    const auto text = j.at("shape").get<std::string>();
    if (text.size() != 1) throw Error(ErrorCode::OutOfRange, "shape '" + text + "'");
    return Shape::from_letter(text[0]);
  };
  if (has_color && has_shape) {
    return FullObject{ObjectKind{Color::from_name(j.at("color").get<std::string>()), shape()}};
  }
  if (has_shape) return ShapeOnly{shape()};
  if (has_color) return ColorOnly{Color::from_name(j.at("color").get<std::string>())};
  throw Error(ErrorCode::InvalidArgument, "query needs a color, a shape, or both");
}

nlohmann::json node_to_json(const TaskNode& node) {
  if (node.is_leaf()) return leaf_to_json(node.leaf());
  const auto& cond = node.conditional();
  nlohmann::json j = leaf_to_json(cond.condition);
  j["kind"] = "cond";
  j["then"] = node_to_json(*cond.then_branch);
  j["else"] = node_to_json(*cond.else_branch);
  return j;
}

TaskNode node_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "leaf") return TaskNode{leaf_from_json(j)};
  if (kind != "cond") throw Error(ErrorCode::InvalidArgument, "unknown node kind '" + kind + "'");
  return make_conditional(leaf_from_json(j), node_from_json(j.at("then")), node_from_json(j.at("else")));
}

}  // namespace

nlohmann::json leaf_to_json(const Leaf& leaf) {
  return nlohmann::json{{"kind", "leaf"}, {"op", operator_name(leaf.op)}, {"query", query_to_json(leaf.query)}};
}

Leaf leaf_from_json(const nlohmann::json& j) {
  return Leaf{operator_from_name(j.at("op").get<std::string>()), query_from_json(j.at("query"))};
}

nlohmann::json tree_to_json(const TaskTree& tree) { return node_to_json(tree.root()); }

TaskTree tree_from_json(const nlohmann::json& j) { return TaskTree(node_from_json(j)); }

}  // namespace gcog

#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <string>
#include <vector>

#include "gcog/core.hpp"
#include "gcog/grammar.hpp"
#include "gcog/interpreter.hpp"
#include "gcog/rng.hpp"

namespace gcog {

inline constexpr int kMaxSynthesisAttempts = 100;

/// Intended route through a tree: one outcome per condition (root-down) plus
/// the answer the reached leaf must produce.
struct TaskPath {
  std::vector<Decision> decisions;
  int target_leaf = 0;
  Answer target;

  bool operator==(const TaskPath&) const = default;
};

/// Condition outcomes and boolean targets are fair coins; Get* targets are
/// uniform over the answer space of the leaf.
TaskPath sample_path(const TaskTree& tree, Rng& rng);

struct FeatureCounts {
  std::array<std::uint8_t, kShapeCount> shape{};
  std::array<std::uint8_t, kColorCount> color{};
  std::array<std::uint8_t, kObjectKindCount> kind{};

  void add(ObjectKind object);
  static FeatureCounts of(const StimulusGrid& grid);
};

/// Uniqueness constraints collected from every node of a tree, plus the
/// objects an on-path Exist must not find.
class ConstraintRegistry {
 public:
  ConstraintRegistry(const TaskTree& tree, const TaskPath& path);

  /// Whether one more instance of `object` keeps every constraint satisfied.
  bool admits(const FeatureCounts& counts, ObjectKind object) const;

  /// Human-readable list of broken constraints; empty when the grid is clean.
  std::vector<std::string> violations(const StimulusGrid& grid) const;

  const std::bitset<kShapeCount>& reserved_shapes() const { return reserved_shapes_; }
  const std::bitset<kColorCount>& reserved_colors() const { return reserved_colors_; }
  const std::bitset<kObjectKindCount>& reserved_objects() const { return reserved_objects_; }
  const std::bitset<kObjectKindCount>& forbidden_objects() const { return forbidden_objects_; }

 private:
  std::bitset<kShapeCount> reserved_shapes_;
  std::bitset<kColorCount> reserved_colors_;
  std::bitset<kObjectKindCount> reserved_objects_;
  std::bitset<kObjectKindCount> forbidden_objects_;
};

struct SynthesisResult {
  StimulusGrid grid;
  Answer target;
  int n_distractors = 0;
  int required_objects = 0;
  TaskPath path;
};

/// Places the objects the path needs (bottom-up), then exactly `n_distractors`
/// legal distractors. Retries placement up to kMaxSynthesisAttempts times, then
/// throws ConstraintConflict. Throws GridFull when the request cannot fit.
SynthesisResult synthesize(const TaskTree& tree, const TaskPath& path, int n_distractors, Rng& rng);

/// sample_path + synthesize, resampling the path on conflict. `target_override`
/// pins the target answer of the reached leaf when its kind matches.
SynthesisResult generate_sample(const TaskTree& tree, int n_distractors, Rng& rng,
                                const std::optional<Answer>& target_override = std::nullopt);

/// True iff evaluate(tree, grid) succeeds and returns `expected`.
bool verify_sample(const TaskTree& tree, const StimulusGrid& grid, const Answer& expected);

/// Tree-wide uniqueness check that does not need the intended path.
std::vector<std::string> constraint_violations(const TaskTree& tree, const StimulusGrid& grid);

}  // namespace gcog

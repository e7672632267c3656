#pragma once

#include <vector>

#include "gcog/core.hpp"
#include "gcog/grammar.hpp"

namespace gcog {

struct Decision {
  int node_id;  // node_sequence position of the conditional
  bool outcome;

  bool operator==(const Decision&) const = default;
};

/// Root-down record of every condition taken plus the leaf that produced the answer.
struct ExecutedPath {
  std::vector<Decision> decisions;
  int terminal_leaf = 0;

  bool operator==(const ExecutedPath&) const = default;
};

struct Evaluation {
  Answer answer;
  ExecutedPath path;
};

/// Throws MissingReferent when a Get*/parity target is absent and
/// AmbiguousStimulus when any referent (Exist included) is not unique.
Answer eval_leaf(const Leaf& leaf, const StimulusGrid& grid);

Evaluation evaluate(const TaskTree& tree, const StimulusGrid& grid);

}  // namespace gcog

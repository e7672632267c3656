#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "gcog/core.hpp"
#include "gcog/errors.hpp"
#include "gcog/forge.hpp"
#include "gcog/grammar.hpp"
#include "gcog/rng.hpp"

namespace gcog::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& label) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gcog_" + label + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Random grid with `n` objects. With a small palette the same object or
/// feature shows up repeatedly, which exercises missing/ambiguous referents.
inline StimulusGrid random_grid(Rng& rng, int n, int palette_colors = kColorCount, int palette_shapes = kShapeCount) {
  StimulusGrid grid;
  while (static_cast<int>(grid.size()) < n) {
    const Location where = Location::from_cell(static_cast<int>(rng.below(kCellCount)));
    if (grid.occupied(where)) continue;
    const ObjectKind kind{Color(static_cast<int>(rng.below(palette_colors))),
                          Shape(static_cast<int>(rng.below(palette_shapes)))};
    grid.insert({kind, where});
  }
  return grid;
}

/// Random tree whose leaves only mention the first few colors/shapes, so
/// that random grids hit its referents often.
inline TaskTree random_palette_tree(Rng& rng, int depth, int palette_colors, int palette_shapes) {
  auto leaf = [&](bool boolean_only) {
    const auto op = boolean_only ? kBooleanOperators[rng.below(kBooleanOperators.size())]
                                 : kAllOperators[rng.below(kAllOperators.size())];
    const Color c(static_cast<int>(rng.below(palette_colors)));
    const Shape s(static_cast<int>(rng.below(palette_shapes)));
    switch (required_query_form(op)) {
      case QueryForm::ShapeOnly: return Leaf{op, ShapeOnly{s}};
      case QueryForm::ColorOnly: return Leaf{op, ColorOnly{c}};
      case QueryForm::FullObject: break;
    }
    return Leaf{op, FullObject{ObjectKind{c, s}}};
  };
  auto build = [&](auto&& self, int d) -> TaskNode {
    if (d == 1) return TaskNode{leaf(false)};
    const int smaller = 1 + 2 * static_cast<int>(rng.below(static_cast<std::uint64_t>((d - 1) / 2)));
    const bool deep_then = rng.coin();
    TaskNode deep = self(self, d - 2);
    TaskNode other = self(self, smaller);
    return make_conditional(leaf(true), deep_then ? deep : other, deep_then ? other : deep);
  };
  return TaskTree(build(build, depth));
}

struct DrawnSample {
  TaskTree tree;
  SynthesisResult result;
};

/// Mirrors the dataset generator: a tree whose every path conflicts under the
/// tree-wide uniqueness rules is redrawn. `redraws` counts those trees.
inline DrawnSample draw_sample(int depth, int n_distractors, Rng& rng, int* redraws = nullptr) {
  for (;;) {
    TaskTree tree = sample_tree(depth, rng);
    try {
      SynthesisResult result = generate_sample(tree, n_distractors, rng);
      return DrawnSample{std::move(tree), std::move(result)};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstraintConflict) throw;
      if (redraws) ++*redraws;
    }
  }
}

}  // namespace gcog::testing

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcog/encoding.hpp"
#include "gcog/grammar.hpp"

namespace gcog {

enum class SplitKind { Distractor, SystematicityD1, SystematicityD3, Productivity };
enum class ProductivityVariant { Standard, Depth1Only };

std::string_view split_kind_name(SplitKind kind);
SplitKind split_kind_from_name(std::string_view name);
std::string_view variant_name(ProductivityVariant variant);
ProductivityVariant variant_from_name(std::string_view name);

/// Where a set draws its task structures from.
enum class StructurePool {
  AnyTree,         // sample_tree at the drawn depth
  TrainCells,      // depth-1 commands outside the held-out cells
  HeldOutCells,    // depth-1 commands inside the held-out cells
  TrainTriples,    // depth-1 trees, or depth-3 trees whose leaf triple is not held out
  HeldOutTriples,  // depth-3 trees whose leaf triple is held out
};

std::string_view pool_name(StructurePool pool);
StructurePool pool_from_name(std::string_view name);

struct SetSpec {
  std::string name;
  std::vector<int> depths;  // drawn uniformly per sample
  int min_distractors = 1;
  int max_distractors = 5;  // inclusive, drawn uniformly
  StructurePool pool = StructurePool::AnyTree;
  std::uint64_t count = 0;

  bool operator==(const SetSpec&) const = default;
};

inline constexpr std::uint64_t kDefaultTrainCount = 2'000'000;
inline constexpr std::uint64_t kDefaultTestCount = 10'000;
inline constexpr double kDefaultHoldoutFraction = 0.2;

struct SampleCounts {
  std::uint64_t train = kDefaultTrainCount;
  std::uint64_t test = kDefaultTestCount;
};

/// Declarative description of one benchmark split.
struct SplitManifest {
  SplitKind kind = SplitKind::Distractor;
  std::optional<ProductivityVariant> variant;
  std::uint64_t master_seed = 0;
  std::optional<double> holdout_fraction;
  SetSpec train;
  std::vector<SetSpec> tests;
  std::vector<int> held_out_cells;  // sorted TaskCommand indices
  std::uint64_t triple_salt = 0;
  std::uint64_t reference_train_samples = 0;

  /// Throws InvalidArgument for an unknown subset name.
  const SetSpec& subset(std::string_view name) const;
  std::vector<std::string> subset_names() const;

  bool cell_held_out(int command_index) const;
  /// Depth-3 trees only; false for anything else.
  bool triple_held_out(const TaskTree& tree) const;

  bool operator==(const SplitManifest&) const = default;
};

SplitManifest build_distractor_split(std::uint64_t seed, SampleCounts counts = {});
SplitManifest build_systematicity_d1(std::uint64_t seed, double holdout_fraction = kDefaultHoldoutFraction,
                                     SampleCounts counts = {});
SplitManifest build_systematicity_d3(std::uint64_t seed, double holdout_fraction = kDefaultHoldoutFraction,
                                     SampleCounts counts = {});
SplitManifest build_productivity(std::uint64_t seed, ProductivityVariant variant = ProductivityVariant::Standard,
                                 SampleCounts counts = {});

/// Dense identifier of a typed leaf: op * 260 + feature index.
int leaf_code(const Leaf& leaf);

/// (condition, then, else) leaf codes of a depth-3 tree.
std::optional<std::array<int, 3>> leaf_triple(const TaskTree& tree);

/// The (operator, object) cell a depth-1 sample instantiates; GetColor and
/// GetShape recover the missing feature from the target answer.
std::optional<TaskCommand> command_of(const TaskTree& tree, const Answer& target);

/// Operators/objects absent from a manifest's training pool (empty = full coverage).
std::vector<std::string> training_coverage_gaps(const SplitManifest& manifest);

nlohmann::json manifest_to_json(const SplitManifest& manifest);
SplitManifest manifest_from_json(const nlohmann::json& j);
/// SHA-256 over the canonical JSON form (keys sorted, without "digest"/"shards").
ManifestDigest manifest_digest(const SplitManifest& manifest);
std::string digest_hex(const ManifestDigest& digest);

struct ChanceLevel {
  double probability_matching = 0.0;  // sum_c p(c)^2
  double mode = 0.0;                  // max_c p(c)
};

/// Throws EmptyHistogram when the counts sum to zero.
ChanceLevel chance_level(std::span<const std::uint64_t> histogram);

/// Deterministic per-sample generation: record i depends only on (manifest, subset, seed, i).
SampleRecord sample_at(const SplitManifest& manifest, const SetSpec& set, std::uint64_t seed, std::uint64_t index);

class SampleStream {
 public:
  SampleStream(const SplitManifest& manifest, std::string_view subset, std::uint64_t n, std::uint64_t seed,
               std::uint64_t first_index = 0);

  std::optional<SampleRecord> next();

 private:
  const SplitManifest* manifest_;
  const SetSpec* set_;
  std::uint64_t seed_;
  std::uint64_t next_;
  std::uint64_t end_;
};

std::vector<SampleRecord> stream_samples(const SplitManifest& manifest, std::string_view subset, std::uint64_t n,
                                         std::uint64_t seed);

}  // namespace gcog

#include "gcog/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <openssl/evp.h>

#include "gcog/errors.hpp"
#include "gcog/forge.hpp"

namespace gcog {

namespace {

constexpr std::array<std::string_view, 4> kKindNames = {"distractor", "systematicity_d1", "systematicity_d3",
                                                         "productivity"};
constexpr std::array<std::string_view, 5> kPoolNames = {"any_tree", "train_cells", "held_out_cells",
                                                        "train_triples", "held_out_triples"};

// Full-scale training budgets per split.
constexpr std::uint64_t kReferenceDistractorSamples = 53'980'000;
constexpr std::uint64_t kReferenceSystematicityD1Samples = 47'980'000;
constexpr std::uint64_t kReferenceSystematicityD3Samples = 53'980'000;
constexpr std::uint64_t kReferenceProductivitySamples = 59'980'000;

constexpr int kMaxStructureDraws = 100;

std::uint64_t name_salt(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  }
  return mix64(h);
}

SetSpec make_set(std::string name, std::vector<int> depths, int lo, int hi, StructurePool pool,
                 std::uint64_t count) {
  return SetSpec{std::move(name), std::move(depths), lo, hi, pool, count};
}

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "holdout fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
}

void require_coverage(const SplitManifest& m) {
  const auto gaps = training_coverage_gaps(m);
  if (!gaps.empty()) {
    std::string message = "training pool misses " + gaps.front();
    if (gaps.size() > 1) message += " and " + std::to_string(gaps.size() - 1) + " more";
    throw Error(ErrorCode::DegenerateSplit, message);
  }
}

bool range_valid(const SetSpec& set) {
  return set.min_distractors >= 0 && set.min_distractors <= set.max_distractors &&
         set.max_distractors < kCellCount && !set.depths.empty();
}

}  // namespace

std::string_view split_kind_name(SplitKind kind) { return kKindNames[static_cast<int>(kind)]; }

SplitKind split_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<SplitKind>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + std::string(name) + "'");
}

std::string_view variant_name(ProductivityVariant variant) {
  return variant == ProductivityVariant::Standard ? "standard" : "depth1_only";
}

ProductivityVariant variant_from_name(std::string_view name) {
  if (name == "standard") return ProductivityVariant::Standard;
  if (name == "depth1_only") return ProductivityVariant::Depth1Only;
  throw Error(ErrorCode::InvalidArgument, "unknown productivity variant '" + std::string(name) + "'");
}

std::string_view pool_name(StructurePool pool) { return kPoolNames[static_cast<int>(pool)]; }

StructurePool pool_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kPoolNames.size(); ++i) {
    if (kPoolNames[i] == name) return static_cast<StructurePool>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown structure pool '" + std::string(name) + "'");
}

const SetSpec& SplitManifest::subset(std::string_view name) const {
  if (train.name == name) return train;
  for (const auto& t : tests) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "manifest has no subset '" + std::string(name) + "'");
}

std::vector<std::string> SplitManifest::subset_names() const {
  std::vector<std::string> out{train.name};
  for (const auto& t : tests) out.push_back(t.name);
  return out;
}

bool SplitManifest::cell_held_out(int command_index) const {
  return std::binary_search(held_out_cells.begin(), held_out_cells.end(), command_index);
}

bool SplitManifest::triple_held_out(const TaskTree& tree) const {
  if (!holdout_fraction || kind != SplitKind::SystematicityD3) return false;
  const auto triple = leaf_triple(tree);
  if (!triple) return false;
  const std::uint64_t id =
      (static_cast<std::uint64_t>((*triple)[0]) * kCommandCount + static_cast<std::uint64_t>((*triple)[1])) *
          kCommandCount +
      static_cast<std::uint64_t>((*triple)[2]);
  const double u = static_cast<double>(derive_seed(triple_salt, id) >> 11) * 0x1.0p-53;
  return u < *holdout_fraction;
}

SplitManifest build_distractor_split(std::uint64_t seed, SampleCounts counts) {
  SplitManifest m;
  m.kind = SplitKind::Distractor;
  m.master_seed = seed;
  m.reference_train_samples = kReferenceDistractorSamples;
  m.train = make_set("train", {1}, 1, 5, StructurePool::AnyTree, counts.train);
  for (int n : {1, 5}) {
    m.tests.push_back(make_set("test_iid_" + std::to_string(n), {1}, n, n, StructurePool::AnyTree, counts.test));
  }
  for (int n : {10, 20, 30, 40}) {
    m.tests.push_back(make_set("test_ood_" + std::to_string(n), {1}, n, n, StructurePool::AnyTree, counts.test));
  }
  return m;
}

SplitManifest build_systematicity_d1(std::uint64_t seed, double holdout_fraction, SampleCounts counts) {
  check_fraction(holdout_fraction);
  SplitManifest m;
  m.kind = SplitKind::SystematicityD1;
  m.master_seed = seed;
  m.holdout_fraction = holdout_fraction;
  m.reference_train_samples = kReferenceSystematicityD1Samples;
  m.train = make_set("train", {1}, 1, 5, StructurePool::TrainCells, counts.train);
  m.tests.push_back(make_set("test_iid", {1}, 1, 5, StructurePool::TrainCells, counts.test));
  m.tests.push_back(make_set("test_ood", {1}, 1, 5, StructurePool::HeldOutCells, counts.test));

  // Each operator holds out a contiguous window of a shared random object
  // order; consecutive windows tile the order so hold-outs spread evenly.
  const int per_operator = static_cast<int>(std::lround(holdout_fraction * kObjectKindCount));
  if (per_operator == 0) {
    throw Error(ErrorCode::DegenerateSplit, "holdout fraction leaves no held-out cells");
  }
  std::vector<int> order(kObjectKindCount);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, name_salt("systematicity_d1/holdout")));
  rng.shuffle(std::span<int>(order));
  for (int op = 0; op < kOperatorCount; ++op) {
    for (int t = 0; t < std::min(per_operator, kObjectKindCount); ++t) {
      const int object = order[(op * per_operator + t) % kObjectKindCount];
      m.held_out_cells.push_back(op * kObjectKindCount + object);
    }
  }
  std::sort(m.held_out_cells.begin(), m.held_out_cells.end());
  m.held_out_cells.erase(std::unique(m.held_out_cells.begin(), m.held_out_cells.end()), m.held_out_cells.end());
  require_coverage(m);
  return m;
}

SplitManifest build_systematicity_d3(std::uint64_t seed, double holdout_fraction, SampleCounts counts) {
  check_fraction(holdout_fraction);
  SplitManifest m;
  m.kind = SplitKind::SystematicityD3;
  m.master_seed = seed;
  m.holdout_fraction = holdout_fraction;
  m.reference_train_samples = kReferenceSystematicityD3Samples;
  m.triple_salt = derive_seed(seed, name_salt("systematicity_d3/triples"));
  m.train = make_set("train", {1, 3}, 1, 5, StructurePool::TrainTriples, counts.train);
  m.tests.push_back(make_set("test_iid", {3}, 1, 5, StructurePool::TrainTriples, counts.test));
  m.tests.push_back(make_set("test_ood", {3}, 1, 5, StructurePool::HeldOutTriples, counts.test));
  require_coverage(m);
  return m;
}

SplitManifest build_productivity(std::uint64_t seed, ProductivityVariant variant, SampleCounts counts) {
  SplitManifest m;
  m.kind = SplitKind::Productivity;
  m.variant = variant;
  m.master_seed = seed;
  m.reference_train_samples = kReferenceProductivitySamples;
  const bool standard = variant == ProductivityVariant::Standard;
  m.train = make_set("train", standard ? std::vector<int>{1, 3} : std::vector<int>{1}, 1, 5,
                     StructurePool::AnyTree, counts.train);
  for (int depth : standard ? std::vector<int>{5, 7} : std::vector<int>{3, 5, 7}) {
    m.tests.push_back(
        make_set("test_depth_" + std::to_string(depth), {depth}, 1, 5, StructurePool::AnyTree, counts.test));
  }
  return m;
}

int leaf_code(const Leaf& leaf) {
  int feature = 0;
  if (auto* full = std::get_if<FullObject>(&leaf.query)) {
    feature = full->object.index();
  } else if (auto* shape = std::get_if<ShapeOnly>(&leaf.query)) {
    feature = shape->shape.index();
  } else {
    feature = std::get<ColorOnly>(leaf.query).color.index();
  }
  return static_cast<int>(leaf.op) * kObjectKindCount + feature;
}

std::optional<std::array<int, 3>> leaf_triple(const TaskTree& tree) {
  if (tree.root().is_leaf()) return std::nullopt;
  const auto& cond = tree.root().conditional();
  if (!cond.then_branch->is_leaf() || !cond.else_branch->is_leaf()) return std::nullopt;
  return std::array<int, 3>{leaf_code(cond.condition), leaf_code(cond.then_branch->leaf()),
                            leaf_code(cond.else_branch->leaf())};
}

std::optional<TaskCommand> command_of(const TaskTree& tree, const Answer& target) {
  if (!tree.root().is_leaf()) return std::nullopt;
  const Leaf& leaf = tree.root().leaf();
  if (auto* full = std::get_if<FullObject>(&leaf.query)) return TaskCommand{leaf.op, full->object};
  if (auto* shape = std::get_if<ShapeOnly>(&leaf.query)) {
    if (target.kind() != AnswerKind::Color) return std::nullopt;
    return TaskCommand{leaf.op, ObjectKind{std::get<Color>(target.value), shape->shape}};
  }
  if (target.kind() != AnswerKind::Shape) return std::nullopt;
  return TaskCommand{leaf.op, ObjectKind{std::get<ColorOnly>(leaf.query).color, std::get<Shape>(target.value)}};
}

std::vector<std::string> training_coverage_gaps(const SplitManifest& m) {
  std::vector<std::string> gaps;
  const bool cell_pool = m.train.pool == StructurePool::TrainCells;
  const bool depth1_any = std::find(m.train.depths.begin(), m.train.depths.end(), 1) != m.train.depths.end() &&
                          m.train.pool != StructurePool::HeldOutCells &&
                          m.train.pool != StructurePool::HeldOutTriples;
  if (!cell_pool) {
    if (!depth1_any) gaps.push_back("depth-1 tasks");
    return gaps;
  }
  std::array<bool, kOperatorCount> op_seen{};
  std::array<bool, kObjectKindCount> object_seen{};
  for (int cell = 0; cell < kCommandCount; ++cell) {
    if (m.cell_held_out(cell)) continue;
    op_seen[cell / kObjectKindCount] = true;
    object_seen[cell % kObjectKindCount] = true;
  }
  for (int op = 0; op < kOperatorCount; ++op) {
    if (!op_seen[op]) gaps.push_back("operator " + std::string(operator_name(static_cast<OperatorKind>(op))));
  }
  for (int k = 0; k < kObjectKindCount; ++k) {
    if (!object_seen[k]) gaps.push_back("object " + ObjectKind::from_index(k).to_string());
  }
  if (m.held_out_cells.empty()) gaps.push_back("held-out cells (test pool is empty)");
  return gaps;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json set_to_json(const SetSpec& s) {
  return nlohmann::json{{"name", s.name},
                        {"depths", s.depths},
                        {"min_distractors", s.min_distractors},
                        {"max_distractors", s.max_distractors},
                        {"pool", pool_name(s.pool)},
                        {"count", s.count}};
}

SetSpec set_from_json(const nlohmann::json& j) {
  SetSpec s{j.at("name").get<std::string>(),
            j.at("depths").get<std::vector<int>>(),
            j.at("min_distractors").get<int>(),
            j.at("max_distractors").get<int>(),
            pool_from_name(j.at("pool").get<std::string>()),
            j.at("count").get<std::uint64_t>()};
  if (!range_valid(s)) throw Error(ErrorCode::InvalidArgument, "set '" + s.name + "' has an invalid range");
  for (int d : s.depths) {
    if (d < 1 || d % 2 == 0) throw Error(ErrorCode::InvalidDepth, "set '" + s.name + "' lists depth " + std::to_string(d));
  }
  return s;
}

nlohmann::json canonical_json(const SplitManifest& m) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : m.tests) tests.push_back(set_to_json(t));
  return nlohmann::json{
      {"format", "gcog-manifest/1"},
      {"kind", split_kind_name(m.kind)},
      {"variant", m.variant ? nlohmann::json(variant_name(*m.variant)) : nlohmann::json(nullptr)},
      {"master_seed", m.master_seed},
      {"holdout_fraction", m.holdout_fraction ? nlohmann::json(*m.holdout_fraction) : nlohmann::json(nullptr)},
      {"train", set_to_json(m.train)},
      {"tests", std::move(tests)},
      {"held_out_cells", m.held_out_cells},
      {"triple_salt", m.triple_salt},
      {"reference_train_samples", m.reference_train_samples},
  };
}

}  // namespace

nlohmann::json manifest_to_json(const SplitManifest& m) {
  nlohmann::json j = canonical_json(m);
  j["digest"] = digest_hex(manifest_digest(m));
  return j;
}

SplitManifest manifest_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "gcog-manifest/1") {
    throw Error(ErrorCode::FormatVersionMismatch, "unsupported manifest format");
  }
  SplitManifest m;
  m.kind = split_kind_from_name(j.at("kind").get<std::string>());
  if (!j.at("variant").is_null()) m.variant = variant_from_name(j.at("variant").get<std::string>());
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (!j.at("holdout_fraction").is_null()) m.holdout_fraction = j.at("holdout_fraction").get<double>();
  m.train = set_from_json(j.at("train"));
  for (const auto& t : j.at("tests")) m.tests.push_back(set_from_json(t));
  m.held_out_cells = j.at("held_out_cells").get<std::vector<int>>();
  std::sort(m.held_out_cells.begin(), m.held_out_cells.end());
  m.triple_salt = j.at("triple_salt").get<std::uint64_t>();
  m.reference_train_samples = j.at("reference_train_samples").get<std::uint64_t>();
  if (j.contains("digest") && j.at("digest").get<std::string>() != digest_hex(manifest_digest(m))) {
    throw Error(ErrorCode::ChecksumMismatch, "manifest digest does not match its content");
  }
  return m;
}

ManifestDigest manifest_digest(const SplitManifest& m) {
  const std::string text = canonical_json(m).dump();
  ManifestDigest digest{};
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1 ||
      length != digest.size()) {
    throw Error(ErrorCode::IoError, "SHA-256 failed");
  }
  return digest;
}

std::string digest_hex(const ManifestDigest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (auto b : digest) {
    out += kHex[b >> 4];
    out += kHex[b & 0xF];
  }
  return out;
}

ChanceLevel chance_level(std::span<const std::uint64_t> histogram) {
  const std::uint64_t total = std::accumulate(histogram.begin(), histogram.end(), std::uint64_t{0});
  if (total == 0) throw Error(ErrorCode::EmptyHistogram, "target histogram is empty");
  ChanceLevel out;
  for (auto count : histogram) {
    const double p = static_cast<double>(count) / static_cast<double>(total);
    out.probability_matching += p * p;
    out.mode = std::max(out.mode, p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Streams

namespace {

struct Structure {
  TaskTree tree;
  std::optional<Answer> target;
};

Structure draw_structure(const SplitManifest& m, const SetSpec& set, int depth, Rng& rng) {
  switch (set.pool) {
    case StructurePool::AnyTree:
      return Structure{sample_tree(depth, rng), std::nullopt};
    case StructurePool::TrainCells:
    case StructurePool::HeldOutCells: {
      if (depth != 1) throw Error(ErrorCode::InvalidArgument, "cell pools only hold depth-1 tasks");
      const bool held = set.pool == StructurePool::HeldOutCells;
      const auto pool_size = held ? m.held_out_cells.size() : kCommandCount - m.held_out_cells.size();
      if (pool_size == 0) throw Error(ErrorCode::DegenerateSplit, "empty cell pool for '" + set.name + "'");
      int cell = 0;
      if (held) {
        cell = m.held_out_cells[rng.below(pool_size)];
      } else {
        // k-th training cell = k-th index skipping the sorted held-out list.
        std::uint64_t k = rng.below(pool_size);
        cell = static_cast<int>(k);
        for (int h : m.held_out_cells) {
          if (h <= cell) ++cell;
          else break;
        }
      }
      const TaskCommand command = TaskCommand::from_index(cell);
      return Structure{TaskTree(TaskNode{command.leaf()}), command.bound_answer()};
    }
    case StructurePool::TrainTriples:
    case StructurePool::HeldOutTriples: {
      const bool want_held = set.pool == StructurePool::HeldOutTriples;
      if (depth == 1 && !want_held) return Structure{sample_tree(1, rng), std::nullopt};
      if (depth != 3) throw Error(ErrorCode::InvalidArgument, "triple pools hold depth-3 tasks");
      for (int i = 0; i < 10'000; ++i) {
        TaskTree tree = sample_tree(3, rng);
        if (m.triple_held_out(tree) == want_held) return Structure{std::move(tree), std::nullopt};
      }
      throw Error(ErrorCode::DegenerateSplit, "could not draw from '" + std::string(pool_name(set.pool)) + "'");
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown pool");
}

}  // namespace

SampleRecord sample_at(const SplitManifest& m, const SetSpec& set, std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t sample_seed = derive_seed(seed, name_salt(set.name), index);
  Rng rng(sample_seed);
  const int depth = set.depths[rng.below(set.depths.size())];
  const int n_distractors = rng.between(set.min_distractors, set.max_distractors);
  std::optional<Error> last;
  for (int attempt = 0; attempt < kMaxStructureDraws; ++attempt) {
    Structure s = draw_structure(m, set, depth, rng);
    try {
      SynthesisResult r = generate_sample(s.tree, n_distractors, rng, s.target);
      return make_record(index, std::move(s.tree), std::move(r.grid), n_distractors, r.target, set.name,
                         sample_seed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstraintConflict && e.code() != ErrorCode::GridFull) throw;
      last = e;
    }
  }
  throw *last;
}

SampleStream::SampleStream(const SplitManifest& manifest, std::string_view subset, std::uint64_t n,
                           std::uint64_t seed, std::uint64_t first_index)
    : manifest_(&manifest),
      set_(&manifest.subset(subset)),
      seed_(seed),
      next_(first_index),
      end_(first_index + n) {}

std::optional<SampleRecord> SampleStream::next() {
  if (next_ >= end_) return std::nullopt;
  return sample_at(*manifest_, *set_, seed_, next_++);
}

std::vector<SampleRecord> stream_samples(const SplitManifest& manifest, std::string_view subset, std::uint64_t n,
                                         std::uint64_t seed) {
  std::vector<SampleRecord> out;
  out.reserve(n);
  SampleStream stream(manifest, subset, n, seed);
  while (auto r = stream.next()) out.push_back(std::move(*r));
  return out;
}

}  // namespace gcog

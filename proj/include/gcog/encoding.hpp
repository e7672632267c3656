#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcog/core.hpp"
#include "gcog/grammar.hpp"

namespace gcog {

// Rule token: 49 binary dims.
//   [0,3)   node kind one-hot: operator, switch, eos
//   [3,11)  operator one-hot, in OperatorKind order
//   [11,37) shape one-hot, [37] shape none
//   [38,48) color one-hot, [48] color none
// Slot bits are only set on operator tokens.
namespace rule_layout {
inline constexpr int kKindOperator = 0;
inline constexpr int kKindSwitch = 1;
inline constexpr int kKindEos = 2;
inline constexpr int kOperatorBase = 3;
inline constexpr int kShapeBase = kOperatorBase + kOperatorCount;
inline constexpr int kShapeNone = kShapeBase + kShapeCount;
inline constexpr int kColorBase = kShapeNone + 1;
inline constexpr int kColorNone = kColorBase + kColorCount;
inline constexpr int kWidth = kColorNone + 1;
}  // namespace rule_layout

// Stimulus token: 26 shape bits, 10 color bits, 1 EOS flag (always zero on cells).
namespace stimulus_layout {
inline constexpr int kShapeBase = 0;
inline constexpr int kColorBase = kShapeCount;
inline constexpr int kEos = kColorBase + kColorCount;
inline constexpr int kWidth = kEos + 1;
}  // namespace stimulus_layout

inline constexpr int kRuleTokenWidth = rule_layout::kWidth;
inline constexpr int kStimulusTokenWidth = stimulus_layout::kWidth;
inline constexpr int kStimulusTokenCount = kCellCount;
static_assert(kRuleTokenWidth == 49);
static_assert(kStimulusTokenWidth == 37);

using RuleToken = std::array<std::uint8_t, kRuleTokenWidth>;
using StimulusToken = std::array<std::uint8_t, kStimulusTokenWidth>;
using StimulusTokens = std::array<StimulusToken, kStimulusTokenCount>;

/// node_sequence order plus a terminal EOS token.
std::vector<RuleToken> encode_rule_sequence(const TaskTree& tree);
/// Inverse of encode_rule_sequence up to node_sequence. Throws InvalidArgument
/// on inconsistent bits or a missing/early EOS.
std::vector<RuleNode> decode_rule_sequence(std::span<const RuleToken> tokens);

/// Token i describes cell (x = i % 10, y = i / 10).
StimulusTokens encode_stimulus(const StimulusGrid& grid);
StimulusGrid decode_stimulus(const StimulusTokens& tokens);

struct SampleRecord {
  std::uint64_t sample_id = 0;
  TaskTree tree{TaskNode{Leaf{}}};
  std::string instruction;
  StimulusGrid grid;
  int n_distractors = 0;
  OutputClass target{0};
  std::string split;
  std::uint64_t seed = 0;

  bool operator==(const SampleRecord&) const = default;
};

SampleRecord make_record(std::uint64_t sample_id, TaskTree tree, StimulusGrid grid, int n_distractors,
                         const Answer& target, std::string split, std::uint64_t seed);

nlohmann::json record_to_json(const SampleRecord& record);
SampleRecord record_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Shard files. Layout is documented in docs/FORMAT.md.

inline constexpr std::uint32_t kShardFormatVersion = 1;
inline constexpr std::size_t kShardHeaderSize = 104;
inline constexpr std::size_t kShardTrailerSize = 4;
inline constexpr std::size_t kSplitTagCapacity = 23;
inline constexpr char kShardMagic[8] = {'G', 'C', 'O', 'G', 'S', 'H', 'R', 'D'};

using ManifestDigest = std::array<std::uint8_t, 32>;

struct ShardHeader {
  std::uint32_t format_version = kShardFormatVersion;
  std::uint16_t rule_token_width = kRuleTokenWidth;
  std::uint16_t stimulus_token_width = kStimulusTokenWidth;
  std::uint16_t stimulus_token_count = kStimulusTokenCount;
  std::uint16_t class_count = kClassCount;
  std::uint64_t record_count = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t master_seed = 0;
  ManifestDigest manifest_digest{};
  std::string split_tag;

  bool operator==(const ShardHeader&) const = default;
};

/// A record exactly as stored: integers plus unpacked tokens.
struct EncodedRecord {
  std::uint64_t sample_id = 0;
  std::uint64_t seed = 0;
  std::uint16_t n_distractors = 0;
  std::uint16_t target = 0;
  std::vector<RuleToken> rule_tokens;
  StimulusTokens stimulus{};

  bool operator==(const EncodedRecord&) const = default;
};

EncodedRecord encode_record(const SampleRecord& record);
/// Throws MalformedShard when the tokens or target do not describe a valid sample.
SampleRecord decode_record(const EncodedRecord& encoded, const std::string& split);

/// Single-writer streaming shard output; header counts are patched in finish().
class ShardWriter {
 public:
  ShardWriter(const std::filesystem::path& path, std::string split_tag, std::uint64_t master_seed,
              const ManifestDigest& digest);
  ShardWriter(const ShardWriter&) = delete;
  ShardWriter& operator=(const ShardWriter&) = delete;
  ~ShardWriter();

  void append(const SampleRecord& record);
  /// Writes the trailer and final header. Further appends are errors.
  ShardHeader finish();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  ShardHeader header_;
  std::uint32_t crc_ = 0;
  bool finished_ = false;
};

class ShardReader {
 public:
  /// Throws TruncatedShard, FormatVersionMismatch, or (when verify_checksum)
  /// ChecksumMismatch. With verify_checksum=false the status is still
  /// available through checksum_ok().
  explicit ShardReader(const std::filesystem::path& path, bool verify_checksum = true);

  const ShardHeader& header() const { return header_; }
  bool checksum_ok() const { return checksum_ok_; }

  /// Next stored record, or nullopt after the last one. Throws MalformedShard
  /// when a record runs past the payload.
  std::optional<EncodedRecord> next();

 private:
  std::ifstream in_;
  ShardHeader header_;
  bool checksum_ok_ = false;
  std::uint64_t consumed_ = 0;
  std::uint64_t returned_ = 0;
};

struct Shard {
  ShardHeader header;
  std::vector<SampleRecord> records;
};

void write_shard(const std::filesystem::path& path, std::span<const SampleRecord> records,
                 const std::string& split_tag, std::uint64_t master_seed = 0,
                 const ManifestDigest& digest = {});
Shard read_shard(const std::filesystem::path& path);

/// Writes one JSON object per line.
void export_jsonl(const std::filesystem::path& shard_path, std::ostream& out);

}  // namespace gcog

#include "gcog/encoding.hpp"

#include <algorithm>
#include <cstring>

#include <zlib.h>

#include "gcog/errors.hpp"

namespace gcog {

namespace {

void put_u16(std::uint8_t* at, std::uint16_t v) {
  at[0] = static_cast<std::uint8_t>(v);
  at[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(std::uint8_t* at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) at[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void put_u64(std::uint8_t* at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) at[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint16_t get_u16(const std::uint8_t* at) {
  return static_cast<std::uint16_t>(at[0] | (at[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | at[i];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | at[i];
  return v;
}

std::uint32_t crc_update(std::uint32_t crc, const std::uint8_t* data, std::size_t size) {
  return static_cast<std::uint32_t>(::crc32(crc, data, static_cast<uInt>(size)));
}

constexpr std::size_t packed_size(std::size_t bits) { return (bits + 7) / 8; }

// LSB-first within each byte.
template <std::size_t W>
void pack_tokens(std::span<const std::array<std::uint8_t, W>> tokens, std::vector<std::uint8_t>& out) {
  const std::size_t start = out.size();
  out.resize(start + packed_size(tokens.size() * W), 0);
  std::size_t bit = 0;
  for (const auto& token : tokens) {
    for (std::size_t i = 0; i < W; ++i, ++bit) {
      if (token[i]) out[start + bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  }
}

template <std::size_t W>
void unpack_tokens(const std::uint8_t* bytes, std::span<std::array<std::uint8_t, W>> tokens) {
  std::size_t bit = 0;
  for (auto& token : tokens) {
    for (std::size_t i = 0; i < W; ++i, ++bit) {
      token[i] = static_cast<std::uint8_t>((bytes[bit / 8] >> (bit % 8)) & 1u);
    }
  }
}

constexpr std::size_t kRecordFixedBytes = 8 + 8 + 2 + 2 + 2;
constexpr std::size_t kStimulusPackedBytes = packed_size(kStimulusTokenCount * kStimulusTokenWidth);

std::array<std::uint8_t, kShardHeaderSize> serialize_header(const ShardHeader& h) {
  std::array<std::uint8_t, kShardHeaderSize> b{};
  std::memcpy(b.data(), kShardMagic, 8);
  put_u32(b.data() + 8, h.format_version);
  put_u16(b.data() + 12, h.rule_token_width);
  put_u16(b.data() + 14, h.stimulus_token_width);
  put_u16(b.data() + 16, h.stimulus_token_count);
  put_u16(b.data() + 18, h.class_count);
  put_u64(b.data() + 20, h.record_count);
  put_u64(b.data() + 28, h.payload_bytes);
  put_u64(b.data() + 36, h.master_seed);
  std::memcpy(b.data() + 44, h.manifest_digest.data(), 32);
  std::memcpy(b.data() + 76, h.split_tag.data(), std::min(h.split_tag.size(), kSplitTagCapacity));
  put_u32(b.data() + 100, crc_update(0, b.data(), 100));
  return b;
}

int one_hot(std::span<const std::uint8_t> bits) {
  int found = -1;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) return -2;
    if (bits[i]) {
      if (found >= 0) return -2;
      found = static_cast<int>(i);
    }
  }
  return found;
}

[[noreturn]] void bad_token(std::size_t index, const std::string& why) {
  throw Error(ErrorCode::InvalidArgument, "rule token " + std::to_string(index) + ": " + why);
}

}  // namespace

std::vector<RuleToken> encode_rule_sequence(const TaskTree& tree) {
  namespace L = rule_layout;
  std::vector<RuleToken> out;
  for (const auto& node : node_sequence(tree)) {
    RuleToken token{};
    if (node.kind == RuleNode::Kind::Switch) {
      token[L::kKindSwitch] = 1;
    } else {
      const Leaf& leaf = *node.leaf;
      token[L::kKindOperator] = 1;
      token[L::kOperatorBase + static_cast<int>(leaf.op)] = 1;
      const auto shape = query_shape(leaf.query);
      token[shape ? L::kShapeBase + shape->index() : L::kShapeNone] = 1;
      const auto color = query_color(leaf.query);
      token[color ? L::kColorBase + color->index() : L::kColorNone] = 1;
    }
    out.push_back(token);
  }
  RuleToken eos{};
  eos[L::kKindEos] = 1;
  out.push_back(eos);
  return out;
}

std::vector<RuleNode> decode_rule_sequence(std::span<const RuleToken> tokens) {
  namespace L = rule_layout;
  std::vector<RuleNode> out;
  bool saw_eos = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const RuleToken& t = tokens[i];
    if (saw_eos) bad_token(i, "token after EOS");
    const std::span<const std::uint8_t> bits(t);
    const int kind = one_hot(bits.subspan(0, 3));
    const int op = one_hot(bits.subspan(L::kOperatorBase, kOperatorCount));
    const int shape = one_hot(bits.subspan(L::kShapeBase, kShapeCount + 1));
    const int color = one_hot(bits.subspan(L::kColorBase, kColorCount + 1));
    if (kind < 0) bad_token(i, "node kind is not one-hot");
    if (kind != L::kKindOperator) {
      if (op != -1 || shape != -1 || color != -1) bad_token(i, "slot bits on a non-operator token");
      if (kind == L::kKindEos) {
        saw_eos = true;
      } else {
        out.push_back(RuleNode::switch_marker());
      }
      continue;
    }
    if (op < 0 || shape < 0 || color < 0) bad_token(i, "operator token slots are not one-hot");
    const auto opk = static_cast<OperatorKind>(op);
    const bool has_shape = shape < kShapeCount;
    const bool has_color = color < kColorCount;
    ObjectQuery query;
    if (has_shape && has_color) {
      query = FullObject{ObjectKind{Color(color), Shape(shape)}};
    } else if (has_shape) {
      query = ShapeOnly{Shape(shape)};
    } else if (has_color) {
      query = ColorOnly{Color(color)};
    } else {
      bad_token(i, "operator token without a query");
    }
    if (query_form(query) != required_query_form(opk)) bad_token(i, "query form does not match operator");
    out.push_back(RuleNode::op(Leaf{opk, query}));
  }
  if (!saw_eos) throw Error(ErrorCode::InvalidArgument, "rule sequence lacks a terminal EOS");
  return out;
}

StimulusTokens encode_stimulus(const StimulusGrid& grid) {
  StimulusTokens tokens{};
  for (int cell = 0; cell < kCellCount; ++cell) {
    if (const auto& object = grid.at_cell(cell)) {
      tokens[cell][stimulus_layout::kShapeBase + object->shape.index()] = 1;
      tokens[cell][stimulus_layout::kColorBase + object->color.index()] = 1;
    }
  }
  return tokens;
}

StimulusGrid decode_stimulus(const StimulusTokens& tokens) {
  StimulusGrid grid;
  for (int cell = 0; cell < kCellCount; ++cell) {
    const std::span<const std::uint8_t> bits(tokens[cell]);
    if (bits[stimulus_layout::kEos] != 0) {
      throw Error(ErrorCode::InvalidArgument, "EOS flag set on cell token " + std::to_string(cell));
    }
    const int shape = one_hot(bits.subspan(stimulus_layout::kShapeBase, kShapeCount));
    const int color = one_hot(bits.subspan(stimulus_layout::kColorBase, kColorCount));
    if (shape == -1 && color == -1) continue;
    if (shape < 0 || color < 0) {
      throw Error(ErrorCode::InvalidArgument, "cell token " + std::to_string(cell) + " is not one shape + one color");
    }
    grid.insert(SceneObject{ObjectKind{Color(color), Shape(shape)}, Location::from_cell(cell)});
  }
  return grid;
}

SampleRecord make_record(std::uint64_t sample_id, TaskTree tree, StimulusGrid grid, int n_distractors,
                         const Answer& target, std::string split, std::uint64_t seed) {
  SampleRecord r;
  r.sample_id = sample_id;
  r.instruction = render_instruction(tree);
  r.tree = std::move(tree);
  r.grid = std::move(grid);
  r.n_distractors = n_distractors;
  r.target = answer_to_class(target);
  r.split = std::move(split);
  r.seed = seed;
  return r;
}

nlohmann::json record_to_json(const SampleRecord& r) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : r.grid.objects()) {
    objects.push_back({{"color", o.color().name()},
                       {"shape", std::string(1, o.shape().letter())},
                       {"x", o.location.x()},
                       {"y", o.location.y()}});
  }
  return nlohmann::json{
      {"sample_id", r.sample_id},
      {"seed", r.seed},
      {"split", r.split},
      {"depth", r.tree.depth()},
      {"tree", tree_to_json(r.tree)},
      {"instruction", r.instruction},
      {"objects", std::move(objects)},
      {"n_distractors", r.n_distractors},
      {"target", r.target.index()},
      {"target_answer", class_to_answer(r.target).to_string()},
  };
}

SampleRecord record_from_json(const nlohmann::json& j) {
  SampleRecord r;
  r.sample_id = j.at("sample_id").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.split = j.at("split").get<std::string>();
  r.tree = tree_from_json(j.at("tree"));
  r.instruction = j.at("instruction").get<std::string>();
  for (const auto& o : j.at("objects")) {
    const auto shape = o.at("shape").get<std::string>();
    if (shape.size() != 1) throw Error(ErrorCode::OutOfRange, "shape '" + shape + "'");
    r.grid.insert(SceneObject{ObjectKind{Color::from_name(o.at("color").get<std::string>()), Shape::from_letter(shape[0])},
                              Location(o.at("x").get<int>(), o.at("y").get<int>())});
  }
  r.n_distractors = j.at("n_distractors").get<int>();
  r.target = OutputClass(j.at("target").get<int>());
  return r;
}

EncodedRecord encode_record(const SampleRecord& r) {
  EncodedRecord e;
  e.sample_id = r.sample_id;
  e.seed = r.seed;
  e.n_distractors = static_cast<std::uint16_t>(r.n_distractors);
  e.target = static_cast<std::uint16_t>(r.target.index());
  e.rule_tokens = encode_rule_sequence(r.tree);
  e.stimulus = encode_stimulus(r.grid);
  return e;
}

SampleRecord decode_record(const EncodedRecord& e, const std::string& split) {
  try {
    const auto nodes = decode_rule_sequence(e.rule_tokens);
    SampleRecord r;
    r.sample_id = e.sample_id;
    r.seed = e.seed;
    r.tree = tree_from_sequence(nodes);
    r.instruction = render_instruction(r.tree);
    r.grid = decode_stimulus(e.stimulus);
    r.n_distractors = e.n_distractors;
    r.target = OutputClass(e.target);
    r.split = split;
    return r;
  } catch (const Error& err) {
    throw Error(ErrorCode::MalformedShard,
                "record " + std::to_string(e.sample_id) + ": " + std::string(err.what()));
  }
}

// ---------------------------------------------------------------------------

ShardWriter::ShardWriter(const std::filesystem::path& path, std::string split_tag, std::uint64_t master_seed,
                         const ManifestDigest& digest)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (split_tag.size() > kSplitTagCapacity) {
    throw Error(ErrorCode::InvalidArgument, "split tag '" + split_tag + "' longer than " +
                                                std::to_string(kSplitTagCapacity) + " bytes");
  }
  if (!out_) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  header_.split_tag = std::move(split_tag);
  header_.master_seed = master_seed;
  header_.manifest_digest = digest;
  const auto placeholder = serialize_header(header_);
  out_.write(reinterpret_cast<const char*>(placeholder.data()), placeholder.size());
}

ShardWriter::~ShardWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ignored;
    std::filesystem::remove(path_, ignored);
  }
}

void ShardWriter::append(const SampleRecord& record) {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "append after finish");
  if (record.split != header_.split_tag) {
    throw Error(ErrorCode::InvalidArgument,
                "record split '" + record.split + "' in shard '" + header_.split_tag + "'");
  }
  const EncodedRecord e = encode_record(record);
  std::vector<std::uint8_t> bytes(kRecordFixedBytes);
  put_u64(bytes.data(), e.sample_id);
  put_u64(bytes.data() + 8, e.seed);
  put_u16(bytes.data() + 16, e.n_distractors);
  put_u16(bytes.data() + 18, e.target);
  put_u16(bytes.data() + 20, static_cast<std::uint16_t>(e.rule_tokens.size()));
  pack_tokens<kRuleTokenWidth>(e.rule_tokens, bytes);
  pack_tokens<kStimulusTokenWidth>(e.stimulus, bytes);
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw Error(ErrorCode::IoError, "write failed on " + path_.string());
  crc_ = crc_update(crc_, bytes.data(), bytes.size());
  header_.payload_bytes += bytes.size();
  ++header_.record_count;
}

ShardHeader ShardWriter::finish() {
  if (finished_) return header_;
  std::array<std::uint8_t, kShardTrailerSize> trailer{};
  put_u32(trailer.data(), crc_);
  out_.write(reinterpret_cast<const char*>(trailer.data()), trailer.size());
  const auto bytes = serialize_header(header_);
  out_.seekp(0);
  out_.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  out_.close();
  if (!out_) throw Error(ErrorCode::IoError, "write failed on " + path_.string());
  finished_ = true;
  return header_;
}

ShardReader::ShardReader(const std::filesystem::path& path, bool verify_checksum)
    : in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const auto size = std::filesystem::file_size(path);
  if (size < kShardHeaderSize) {
    throw Error(ErrorCode::TruncatedShard, path.string() + " is shorter than a shard header");
  }
  std::array<std::uint8_t, kShardHeaderSize> b{};
  in_.read(reinterpret_cast<char*>(b.data()), b.size());
  if (std::memcmp(b.data(), kShardMagic, 8) != 0) {
    throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not a gcog shard");
  }
  if (get_u32(b.data() + 100) != crc_update(0, b.data(), 100)) {
    throw Error(ErrorCode::ChecksumMismatch, path.string() + ": header checksum mismatch");
  }
  header_.format_version = get_u32(b.data() + 8);
  header_.rule_token_width = get_u16(b.data() + 12);
  header_.stimulus_token_width = get_u16(b.data() + 14);
  header_.stimulus_token_count = get_u16(b.data() + 16);
  header_.class_count = get_u16(b.data() + 18);
  header_.record_count = get_u64(b.data() + 20);
  header_.payload_bytes = get_u64(b.data() + 28);
  header_.master_seed = get_u64(b.data() + 36);
  std::memcpy(header_.manifest_digest.data(), b.data() + 44, 32);
  const char* tag = reinterpret_cast<const char*>(b.data() + 76);
  header_.split_tag.assign(tag, strnlen(tag, kSplitTagCapacity));

  if (header_.format_version != kShardFormatVersion || header_.rule_token_width != kRuleTokenWidth ||
      header_.stimulus_token_width != kStimulusTokenWidth ||
      header_.stimulus_token_count != kStimulusTokenCount || header_.class_count != kClassCount) {
    throw Error(ErrorCode::FormatVersionMismatch,
                path.string() + ": format " + std::to_string(header_.format_version) + " widths " +
                    std::to_string(header_.rule_token_width) + "/" + std::to_string(header_.stimulus_token_width) +
                    ", expected format " + std::to_string(kShardFormatVersion));
  }
  const std::uint64_t expected = kShardHeaderSize + header_.payload_bytes + kShardTrailerSize;
  if (size < expected) {
    throw Error(ErrorCode::TruncatedShard, path.string() + ": " + std::to_string(size) + " bytes, header promises " +
                                               std::to_string(expected));
  }
  if (size > expected) {
    throw Error(ErrorCode::MalformedShard, path.string() + ": trailing bytes after checksum");
  }

  std::uint32_t crc = 0;
  std::vector<char> chunk(1 << 16);
  std::uint64_t remaining = header_.payload_bytes;
  while (remaining > 0) {
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, chunk.size()));
    in_.read(chunk.data(), static_cast<std::streamsize>(n));
    crc = crc_update(crc, reinterpret_cast<const std::uint8_t*>(chunk.data()), n);
    remaining -= n;
  }
  std::array<std::uint8_t, kShardTrailerSize> trailer{};
  in_.read(reinterpret_cast<char*>(trailer.data()), trailer.size());
  if (!in_) throw Error(ErrorCode::TruncatedShard, path.string() + ": short read");
  checksum_ok_ = get_u32(trailer.data()) == crc;
  if (verify_checksum && !checksum_ok_) {
    throw Error(ErrorCode::ChecksumMismatch, path.string() + ": payload checksum mismatch");
  }
  in_.seekg(static_cast<std::streamoff>(kShardHeaderSize));
}

std::optional<EncodedRecord> ShardReader::next() {
  if (returned_ == header_.record_count) {
    if (consumed_ != header_.payload_bytes) {
      throw Error(ErrorCode::MalformedShard, "payload has bytes beyond the last record");
    }
    return std::nullopt;
  }
  auto take = [&](std::size_t n, std::uint8_t* into) {
    if (consumed_ + n > header_.payload_bytes) {
      throw Error(ErrorCode::MalformedShard, "record " + std::to_string(returned_) + " runs past the payload");
    }
    in_.read(reinterpret_cast<char*>(into), static_cast<std::streamsize>(n));
    consumed_ += n;
  };
  std::array<std::uint8_t, kRecordFixedBytes> fixed{};
  take(fixed.size(), fixed.data());
  EncodedRecord e;
  e.sample_id = get_u64(fixed.data());
  e.seed = get_u64(fixed.data() + 8);
  e.n_distractors = get_u16(fixed.data() + 16);
  e.target = get_u16(fixed.data() + 18);
  const std::uint16_t rule_count = get_u16(fixed.data() + 20);
  std::vector<std::uint8_t> buffer(packed_size(std::size_t{rule_count} * kRuleTokenWidth));
  take(buffer.size(), buffer.data());
  e.rule_tokens.resize(rule_count);
  unpack_tokens<kRuleTokenWidth>(buffer.data(), e.rule_tokens);
  buffer.resize(kStimulusPackedBytes);
  take(buffer.size(), buffer.data());
  unpack_tokens<kStimulusTokenWidth>(buffer.data(), e.stimulus);
  ++returned_;
  return e;
}

void write_shard(const std::filesystem::path& path, std::span<const SampleRecord> records,
                 const std::string& split_tag, std::uint64_t master_seed, const ManifestDigest& digest) {
  ShardWriter writer(path, split_tag, master_seed, digest);
  for (const auto& r : records) writer.append(r);
  writer.finish();
}

Shard read_shard(const std::filesystem::path& path) {
  ShardReader reader(path);
  Shard shard{reader.header(), {}};
  shard.records.reserve(reader.header().record_count);
  while (auto e = reader.next()) {
    shard.records.push_back(decode_record(*e, reader.header().split_tag));
  }
  return shard;
}

void export_jsonl(const std::filesystem::path& shard_path, std::ostream& out) {
  ShardReader reader(shard_path);
  while (auto e = reader.next()) {
    out << record_to_json(decode_record(*e, reader.header().split_tag)).dump() << '\n';
  }
}

}  // namespace gcog

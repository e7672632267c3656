#include <zlib.h>

#include <cstring>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "gcog/encoding.hpp"
#include "gcog/errors.hpp"
#include "gcog/forge.hpp"

using namespace gcog;
using gcog::testing::TempDir;

namespace {

const ObjectKind kRedA{Color::from_name("red"), Shape::from_letter('a')};

SampleRecord random_record(Rng& rng, std::uint64_t id, const std::string& split = "train") {
  const int depth = 1 + 2 * static_cast<int>(rng.below(4));
  const int n = static_cast<int>(rng.below(30));
  const auto [t, r] = testing::draw_sample(depth, n, rng);
  return make_record(id, t, r.grid, n, r.target, split, rng.next());
}

ErrorCode read_error(const std::filesystem::path& p) {
  try {
    read_shard(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected read_shard to fail");
  return ErrorCode::InvalidArgument;
}

void reseal_header(std::vector<char>& bytes) {
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), 100));
  for (int i = 0; i < 4; ++i) bytes[100 + i] = static_cast<char>((crc >> (8 * i)) & 0xff);
}

}  // namespace

TEST_CASE("rule token lengths") {
  Rng rng(51);
  const auto d1 = encode_rule_sequence(sample_tree(1, rng));
  REQUIRE(d1.size() == 2);
  CHECK(d1[0][rule_layout::kKindOperator] == 1);
  CHECK(d1[1][rule_layout::kKindEos] == 1);
  CHECK(encode_rule_sequence(sample_tree(3, rng)).size() == 5);
}

TEST_CASE("rule token bit layout") {
  const TaskTree t(make_conditional(Leaf{OperatorKind::Exist, FullObject{kRedA}},
                                    make_leaf(OperatorKind::GetColor, ShapeOnly{Shape(25)}),
                                    make_leaf(OperatorKind::GetShape, ColorOnly{Color(9)})));
  const auto tokens = encode_rule_sequence(t);
  REQUIRE(tokens.size() == 5);
  auto ones = [](const RuleToken& tok) {
    std::vector<int> out;
    for (int i = 0; i < kRuleTokenWidth; ++i) {
      if (tok[i]) out.push_back(i);
    }
    return out;
  };
  CHECK(ones(tokens[0]) == std::vector<int>{0, 3, 11, 38});       // exist, shape a, color red
  CHECK(ones(tokens[1]) == std::vector<int>{1});                  // switch
  CHECK(ones(tokens[2]) == std::vector<int>{0, 4, 36, 48});       // get color, shape z, no color
  CHECK(ones(tokens[3]) == std::vector<int>{0, 5, 37, 47});       // get shape, no shape, gray
  CHECK(ones(tokens[4]) == std::vector<int>{2});                  // eos
}

TEST_CASE("rule decode rejects malformed tokens") {
  Rng rng(52);
  auto tokens = encode_rule_sequence(sample_tree(1, rng));
  auto missing_eos = tokens;
  missing_eos.pop_back();
  CHECK_THROWS_AS(decode_rule_sequence(missing_eos), Error);

  auto two_kinds = tokens;
  two_kinds[0][rule_layout::kKindSwitch] = 1;
  CHECK_THROWS_AS(decode_rule_sequence(two_kinds), Error);

  auto slot_on_eos = tokens;
  slot_on_eos[1][rule_layout::kShapeBase] = 1;
  CHECK_THROWS_AS(decode_rule_sequence(slot_on_eos), Error);

  auto early_eos = tokens;
  early_eos.insert(early_eos.begin(), tokens.back());
  CHECK_THROWS_AS(decode_rule_sequence(early_eos), Error);
}

TEST_CASE("rule sequence round trip") {
  Rng rng(53);
  for (int i = 0; i < 10000; ++i) {
    const TaskTree t = sample_tree(1 + 2 * static_cast<int>(rng.below(4)), rng);
    const auto tokens = encode_rule_sequence(t);
    REQUIRE(tokens.size() == node_sequence(t).size() + 1);
    REQUIRE(decode_rule_sequence(tokens) == node_sequence(t));
  }
}

TEST_CASE("stimulus encoding examples") {
  const auto empty = encode_stimulus(StimulusGrid{});
  for (const auto& tok : empty) {
    for (auto bit : tok) REQUIRE(bit == 0);
  }
  StimulusGrid g;
  g.insert({kRedA, Location(2, 1)});
  const auto tokens = encode_stimulus(g);
  CHECK(tokens[12][stimulus_layout::kShapeBase + 0] == 1);
  CHECK(tokens[12][stimulus_layout::kColorBase + 0] == 1);
  int set_bits = 0;
  for (const auto& tok : tokens) {
    for (auto bit : tok) set_bits += bit;
  }
  CHECK(set_bits == 2);
  CHECK(tokens[12][stimulus_layout::kEos] == 0);
  CHECK(kStimulusTokenCount * kStimulusTokenWidth == 3700);
}

TEST_CASE("stimulus round trip and rejection") {
  Rng rng(54);
  for (int i = 0; i < 10000; ++i) {
    const StimulusGrid g = testing::random_grid(rng, static_cast<int>(rng.below(101)));
    REQUIRE(decode_stimulus(encode_stimulus(g)) == g);
  }
  StimulusTokens bad{};
  bad[3][stimulus_layout::kShapeBase] = 1;
  CHECK_THROWS_AS(decode_stimulus(bad), Error);
  StimulusTokens eos{};
  eos[0][stimulus_layout::kEos] = 1;
  CHECK_THROWS_AS(decode_stimulus(eos), Error);
}

TEST_CASE("record JSON mirrors the record") {
  Rng rng(55);
  const SampleRecord r = random_record(rng, 17);
  const auto j = record_to_json(r);
  CHECK(j["sample_id"] == 17);
  CHECK(j["instruction"] == render_instruction(r.tree));
  CHECK(j["target"] == r.target.index());
  CHECK(j["objects"].size() == r.grid.size());
  CHECK(record_from_json(nlohmann::json::parse(j.dump())) == r);
}

TEST_CASE("empty shard") {
  TempDir dir("enc_empty");
  write_shard(dir / "empty.shard", std::vector<SampleRecord>{}, "test_iid");
  const Shard s = read_shard(dir / "empty.shard");
  CHECK(s.header.record_count == 0);
  CHECK(s.header.split_tag == "test_iid");
  CHECK(s.records.empty());
  CHECK(std::filesystem::file_size(dir / "empty.shard") == kShardHeaderSize + kShardTrailerSize);
}

TEST_CASE("shard round trip") {
  TempDir dir("enc_rt");
  Rng rng(56);
  std::vector<SampleRecord> records;
  for (std::uint64_t i = 0; i < 1000; ++i) records.push_back(random_record(rng, i));
  ManifestDigest digest{};
  digest[0] = 0xab;
  digest[31] = 0xcd;
  write_shard(dir / "train.shard", records, "train", 77, digest);
  const Shard s = read_shard(dir / "train.shard");
  CHECK(s.header.record_count == 1000);
  CHECK(s.header.master_seed == 77);
  CHECK(s.header.manifest_digest == digest);
  REQUIRE(s.records.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) REQUIRE(s.records[i] == records[i]);

  // Bit-identical tokens through the streaming reader.
  ShardReader reader(dir / "train.shard");
  for (const auto& r : records) {
    const auto enc = reader.next();
    REQUIRE(enc.has_value());
    REQUIRE(*enc == encode_record(r));
  }
  CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("shard header bytes") {
  TempDir dir("enc_hdr");
  Rng rng(57);
  const std::vector<SampleRecord> records{random_record(rng, 5, "x")};
  write_shard(dir / "one.shard", records, "x", 0x0102030405060708ULL);
  const auto bytes = testing::read_bytes(dir / "one.shard");
  CHECK(std::memcmp(bytes.data(), "GCOGSHRD", 8) == 0);
  CHECK(bytes[8] == 1);
  CHECK(static_cast<unsigned char>(bytes[12]) == 49);
  CHECK(static_cast<unsigned char>(bytes[14]) == 37);
  CHECK(static_cast<unsigned char>(bytes[16]) == 100);
  CHECK(static_cast<unsigned char>(bytes[18]) == 138);
  CHECK(bytes[20] == 1);
  CHECK(static_cast<unsigned char>(bytes[36]) == 0x08);
  CHECK(static_cast<unsigned char>(bytes[43]) == 0x01);
  CHECK(bytes[76] == 'x');
  CHECK(bytes[77] == 0);
  // First record: id at 104, target at 122.
  CHECK(bytes[104] == 5);
  CHECK(static_cast<unsigned char>(bytes[122]) == records[0].target.index());
}

TEST_CASE("corruption and truncation are detected") {
  TempDir dir("enc_bad");
  Rng rng(58);
  std::vector<SampleRecord> records;
  for (std::uint64_t i = 0; i < 20; ++i) records.push_back(random_record(rng, i));
  const auto good = dir / "good.shard";
  write_shard(good, records, "train");
  const auto original = testing::read_bytes(good);

  auto flipped = original;
  flipped[122] ^= 0x01;
  testing::write_bytes(dir / "flip.shard", flipped);
  CHECK(read_error(dir / "flip.shard") == ErrorCode::ChecksumMismatch);
  ShardReader lenient(dir / "flip.shard", false);
  CHECK_FALSE(lenient.checksum_ok());

  auto header_flip = original;
  header_flip[40] ^= 0x10;
  testing::write_bytes(dir / "hdr.shard", header_flip);
  CHECK(read_error(dir / "hdr.shard") == ErrorCode::ChecksumMismatch);

  auto truncated = original;
  truncated.resize(truncated.size() - 7);
  testing::write_bytes(dir / "trunc.shard", truncated);
  CHECK(read_error(dir / "trunc.shard") == ErrorCode::TruncatedShard);

  testing::write_bytes(dir / "stub.shard", std::vector<char>(original.begin(), original.begin() + 50));
  CHECK(read_error(dir / "stub.shard") == ErrorCode::TruncatedShard);

  auto padded = original;
  padded.push_back(0);
  testing::write_bytes(dir / "pad.shard", padded);
  CHECK(read_error(dir / "pad.shard") == ErrorCode::MalformedShard);

  auto version = original;
  version[8] = 2;
  reseal_header(version);
  testing::write_bytes(dir / "v2.shard", version);
  CHECK(read_error(dir / "v2.shard") == ErrorCode::FormatVersionMismatch);

  auto width = original;
  width[12] = 84;
  reseal_header(width);
  testing::write_bytes(dir / "w.shard", width);
  CHECK(read_error(dir / "w.shard") == ErrorCode::FormatVersionMismatch);

  auto magic = original;
  magic[0] = 'X';
  testing::write_bytes(dir / "magic.shard", magic);
  CHECK(read_error(dir / "magic.shard") == ErrorCode::FormatVersionMismatch);

  CHECK(read_error(dir / "absent.shard") == ErrorCode::IoError);
}

TEST_CASE("writer rules") {
  TempDir dir("enc_writer");
  Rng rng(59);
  CHECK_THROWS_AS(ShardWriter(dir / "long.shard", std::string(24, 'x'), 0, {}), Error);
  {
    ShardWriter w(dir / "mixed.shard", "train", 0, {});
    CHECK_THROWS_AS(w.append(random_record(rng, 0, "test")), Error);
    w.append(random_record(rng, 1, "train"));
    w.finish();
    CHECK_THROWS_AS(w.append(random_record(rng, 2, "train")), Error);
  }
  CHECK(read_shard(dir / "mixed.shard").records.size() == 1);
  {
    ShardWriter abandoned(dir / "abandoned.shard", "train", 0, {});
    abandoned.append(random_record(rng, 3, "train"));
  }
  CHECK_FALSE(std::filesystem::exists(dir / "abandoned.shard"));
}

TEST_CASE("jsonl export") {
  TempDir dir("enc_jsonl");
  Rng rng(60);
  std::vector<SampleRecord> records;
  for (std::uint64_t i = 0; i < 10; ++i) records.push_back(random_record(rng, i));
  write_shard(dir / "s.shard", records, "train");
  std::stringstream out;
  export_jsonl(dir / "s.shard", out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(out, line)) {
    REQUIRE(n < records.size());
    CHECK(record_from_json(nlohmann::json::parse(line)) == records[n]);
    ++n;
  }
  CHECK(n == records.size());
}

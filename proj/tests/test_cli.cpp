#include <cstdlib>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "gcog/dataset.hpp"
#include "gcog/forge.hpp"

using gcog::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = gcog::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string path_of(const TempDir& dir, const std::string& name) { return (dir / name).string(); }

}  // namespace

TEST_CASE("missing seed is a usage error") {
  TempDir dir("cli_noseed");
  ::unsetenv("GCOG_SEED");
  const Run r = run({"generate", "distractor", "--train", "10", "--test", "2", "--out", dir.path().string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("seed") != std::string::npos);
}

TEST_CASE("usage errors exit with 2, help with 0") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"generate", "--help"}).code == 0);
  CHECK(run({"generate", "nonsense", "--seed", "1"}).code == 2);
  CHECK(run({"generate", "distractor", "--seed", "x"}).code == 2);
  CHECK(run({"generate", "distractor", "--seed", "1", "--format", "csv"}).code == 2);
  CHECK(run({"generate", "distractor", "--seed", "1", "--train", "0"}).code == 2);
  CHECK(run({"generate", "productivity", "--seed", "1", "--variant", "deep"}).code == 2);
  CHECK(run({"count", "--depth", "5"}).code == 2);
  CHECK(run({"verify"}).code == 2);
}

TEST_CASE("generate is deterministic across runs and job counts") {
  TempDir a("cli_det_a"), b("cli_det_b"), c("cli_det_c");
  const std::vector<std::string> base{"generate", "distractor", "--seed", "7", "--train", "3000", "--test", "100"};
  auto with = [&](const TempDir& dir, const std::string& jobs) {
    auto args = base;
    args.insert(args.end(), {"--out", dir.path().string(), "--jobs", jobs});
    return run(args);
  };
  const Run ra = with(a, "1");
  REQUIRE(ra.code == 0);
  CHECK(ra.out.find("digest ") != std::string::npos);
  CHECK(ra.out.find("3000 records") != std::string::npos);
  REQUIRE(with(b, "1").code == 0);
  REQUIRE(with(c, "3").code == 0);
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const auto name = entry.path().filename().string();
    const auto bytes = gcog::testing::read_bytes(entry.path());
    CHECK_MESSAGE(bytes == gcog::testing::read_bytes(b / name), name);
    CHECK_MESSAGE(bytes == gcog::testing::read_bytes(c / name), name);
  }
}

TEST_CASE("seed from the environment and from a config file") {
  TempDir env_dir("cli_env"), flag_dir("cli_flag"), cfg_dir("cli_cfg");
  ::setenv("GCOG_SEED", "11", 1);
  REQUIRE(run({"generate", "distractor", "--train", "50", "--test", "5", "--out", env_dir.path().string()}).code == 0);
  ::unsetenv("GCOG_SEED");
  REQUIRE(run({"generate", "distractor", "--seed", "11", "--train", "50", "--test", "5", "--out",
               flag_dir.path().string()})
              .code == 0);
  CHECK(gcog::testing::read_bytes(env_dir / "train.shard") == gcog::testing::read_bytes(flag_dir / "train.shard"));

  const auto config = cfg_dir / "config.json";
  {
    std::ofstream out(config);
    out << R"({"split": "distractor", "seed": 11, "train": 50, "test": 5, "out": ")"
        << (cfg_dir / "data").string() << R"("})";
  }
  REQUIRE(run({"generate", "--config", config.string()}).code == 0);
  CHECK(gcog::testing::read_bytes(cfg_dir / "data" / "train.shard") ==
        gcog::testing::read_bytes(flag_dir / "train.shard"));

  // Flags win over the config file.
  REQUIRE(run({"generate", "--config", config.string(), "--train", "20"}).code == 0);
  CHECK(gcog::read_shard(cfg_dir / "data" / "train.shard").records.size() == 20);
}

TEST_CASE("generate from an existing manifest") {
  TempDir first("cli_man_a"), second("cli_man_b");
  REQUIRE(run({"generate", "systematicity_d1", "--seed", "4", "--train", "80", "--test", "8", "--out",
               first.path().string()})
              .code == 0);
  REQUIRE(run({"generate", "--manifest", path_of(first, "manifest.json"), "--out", second.path().string()}).code == 0);
  CHECK(gcog::testing::read_bytes(first / "test_ood.shard") == gcog::testing::read_bytes(second / "test_ood.shard"));
}

TEST_CASE("productivity depth1_only writes depth 3, 5 and 7 test sets") {
  TempDir dir("cli_prod");
  const Run r = run({"generate", "productivity", "--variant", "depth1_only", "--seed", "2", "--train", "40",
                     "--test", "4", "--out", dir.path().string()});
  REQUIRE(r.code == 0);
  for (int d : {3, 5, 7}) {
    const auto shard = gcog::read_shard(dir / ("test_depth_" + std::to_string(d) + ".shard"));
    for (const auto& rec : shard.records) CHECK(rec.tree.depth() == d);
  }
}

TEST_CASE("verify exit codes") {
  TempDir dir("cli_verify");
  REQUIRE(run({"generate", "distractor", "--seed", "7", "--train", "200", "--test", "10", "--out",
               dir.path().string()})
              .code == 0);
  const std::string train = path_of(dir, "train.shard");
  const Run ok = run({"verify", train});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("mismatches=0") != std::string::npos);

  auto bytes = gcog::testing::read_bytes(train);
  const auto flipped_path = dir / "flipped.shard";
  auto flipped = bytes;
  flipped[122] = static_cast<char>(flipped[122] ^ 0x01);
  gcog::testing::write_bytes(flipped_path, flipped);
  const Run bad = run({"verify", flipped_path.string()});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("mismatches=0") == std::string::npos);
  CHECK(bad.out.find("checksum=MISMATCH") != std::string::npos);

  const auto truncated_path = dir / "truncated.shard";
  bytes.resize(bytes.size() / 2);
  gcog::testing::write_bytes(truncated_path, bytes);
  const Run cut = run({"verify", truncated_path.string()});
  CHECK(cut.code == 1);
  CHECK(cut.out.find("TruncatedShard") != std::string::npos);

  CHECK(run({"verify", path_of(dir, "absent.shard")}).code == 1);
}

TEST_CASE("count and stats lines") {
  const Run count = run({"count"});
  CHECK(count.code == 0);
  CHECK(count.out.find("depth 1: 2,080") != std::string::npos);
  CHECK(count.out.find("depth 3: 5,624,320,000") != std::string::npos);
  CHECK(run({"count", "--depth", "7", "--recursive"}).code == 0);

  TempDir dir("cli_stats");
  REQUIRE(run({"generate", "distractor", "--seed", "3", "--train", "300", "--test", "10", "--out",
               dir.path().string()})
              .code == 0);
  const Run stats = run({"stats", path_of(dir, "manifest.json")});
  CHECK(stats.code == 0);
  CHECK(stats.out.find("pool size depth 1: 2,080") != std::string::npos);
  CHECK(stats.out.find("pool size depth 3: 5,624,320,000") != std::string::npos);
  CHECK(stats.out.find("chance (probability matching)") != std::string::npos);
  CHECK(stats.out.find("chance (mode)") != std::string::npos);
  CHECK(stats.out.find("[test_ood_40] 10 records") != std::string::npos);

  std::filesystem::remove(dir / "test_ood_30.shard");
  const Run missing = run({"stats", path_of(dir, "manifest.json")});
  CHECK(missing.code == 1);
  CHECK(missing.out.find("missing shard") != std::string::npos);
}

TEST_CASE("boolean-only toy manifest has chance 0.5") {
  TempDir dir("cli_toy");
  // Depth-1 Exist-only training pool: every target is True or False with equal odds.
  auto m = gcog::build_distractor_split(1, {4000, 10});
  m.tests.clear();
  std::vector<gcog::SampleRecord> records;
  gcog::Rng rng(77);
  for (std::uint64_t i = 0; i < 4000; ++i) {
    const gcog::TaskTree t(gcog::make_leaf(gcog::OperatorKind::Exist,
                                           gcog::FullObject{gcog::ObjectKind::from_index(static_cast<int>(i % 260))}));
    const bool truth = i % 2 == 0;
    const auto r = gcog::generate_sample(t, 2, rng, gcog::Answer::of(truth));
    records.push_back(gcog::make_record(i, t, r.grid, 2, r.target, "train", i));
  }
  gcog::write_shard(dir / "train.shard", records, "train", 1, gcog::manifest_digest(m));
  auto j = gcog::manifest_to_json(m);
  j["shards"] = nlohmann::json::array({{{"subset", "train"}, {"file", "train.shard"}, {"records", 4000}, {"format", "shard"}}});
  std::ofstream(dir / "manifest.json") << j.dump(2);

  const Run stats = run({"stats", path_of(dir, "manifest.json")});
  CHECK(stats.code == 0);
  CHECK(stats.out.find("chance (probability matching) 0.5000") != std::string::npos);
  CHECK(stats.out.find("chance (mode) 0.5000") != std::string::npos);
}

TEST_CASE("export-jsonl") {
  TempDir dir("cli_export");
  REQUIRE(run({"generate", "distractor", "--seed", "5", "--train", "25", "--test", "3", "--out", dir.path().string()})
              .code == 0);
  const Run to_stdout = run({"export-jsonl", path_of(dir, "train.shard")});
  CHECK(to_stdout.code == 0);
  CHECK(std::count(to_stdout.out.begin(), to_stdout.out.end(), '\n') == 25);
  REQUIRE(run({"export-jsonl", path_of(dir, "train.shard"), "--out", path_of(dir, "train.jsonl")}).code == 0);
  CHECK(gcog::testing::read_bytes(dir / "train.jsonl").size() == to_stdout.out.size());
  CHECK(run({"export-jsonl", path_of(dir, "absent.shard")}).code == 1);
}
